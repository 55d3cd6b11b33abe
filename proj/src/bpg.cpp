#include "nightsim/bpg.hpp"

#include <algorithm>
#include <cmath>

#include "nightsim/error.hpp"

namespace nightsim::bpg {

int light_count(double f, double s_f) {
  return std::max(static_cast<int>(std::floor(f / s_f + 0.5)), 1);
}

IntensitySample sample_intensity(RandomStream& stream,
                                 const CompensationConfig& cfg) {
  IntensitySample out;
  out.s_f = sample_log_uniform(stream, cfg.s_f_range.lo, cfg.s_f_range.hi);
  out.f = sample_log_uniform(stream, cfg.f_range.lo, cfg.f_range.hi);
  out.n_f = light_count(out.f, out.s_f);
  return out;
}

LightPlacement place_light(RandomStream& stream, const DepthMap& depth_m,
                           const Intrinsics& k, double cap_m, double z_min) {
  if (!(cap_m > 0.0)) throw DomainError("light depth cap must be positive");
  if (depth_m.empty()) throw SizeError("place_light needs a depth map");
  LightPlacement out;
  for (int attempt = 0; attempt <= kPlacementRetries; ++attempt) {
    out.pixel = {static_cast<int>(stream.next_below(depth_m.width())),
                 static_cast<int>(stream.next_below(depth_m.height()))};
    out.attempts = attempt + 1;
    const double scene = depth_m.at(out.pixel.x(), out.pixel.y());
    if (scene >= z_min) {
      out.z = sample_uniform(stream, std::min(z_min, cap_m),
                             std::min(cap_m, scene));
      out.near_field_fallback = false;
      break;
    }
    out.z = 0.9 * scene;
    out.near_field_fallback = true;
  }
  out.position = out.z * k.unproject(out.pixel.x(), out.pixel.y());
  return out;
}

Image darken(const Image& img, double s_d) {
  if (s_d == 1.0) return img;
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(s_d * v);
  return out;
}

Image composite(const Image& darkened, std::span<const PlacedSource> sources,
                double g_f) {
  if (!(g_f > 0.0)) throw DomainError("composite gamma must be positive");
  if (sources.empty()) return darkened;
  const int w = darkened.width();
  const int h = darkened.height();
  // Sum of gamma-domain light per pixel and channel.
  std::vector<double> light(darkened.size(), 0.0);
  for (const PlacedSource& ps : sources) {
    if (ps.source == nullptr) throw ArgumentError("null light source");
    const Image& src = ps.source->rgb;
    const double sc_x = (src.width() - 1) / 2.0;
    const double sc_y = (src.height() - 1) / 2.0;
    // Footprint of the scaled source in the output frame.
    const double half_w = (src.width() / 2.0 + 1.0) * ps.s_f;
    const double half_h = (src.height() / 2.0 + 1.0) * ps.s_f;
    const int x0 = std::max(0, static_cast<int>(std::floor(ps.center.x() - half_w)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(ps.center.x() + half_w)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ps.center.y() - half_h)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(ps.center.y() + half_h)));
    for (int y = y0; y <= y1; ++y) {
      const double sy = (y - ps.center.y()) / ps.s_f + sc_y;
      for (int x = x0; x <= x1; ++x) {
        const double sx = (x - ps.center.x()) / ps.s_f + sc_x;
        for (int c = 0; c < 3; ++c) {
          const double v = sample_bilinear_zero(src, sx, sy, c);
          if (v > 0.0) light[darkened.index(x, y, c)] += std::pow(v, g_f);
        }
      }
    }
  }
  Image out = darkened;
  for (std::size_t i = 0; i < light.size(); ++i) {
    if (light[i] == 0.0) continue;
    const double base = darkened[i];
    const double v = std::pow(std::pow(base, g_f) + light[i], 1.0 / g_f);
    out[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

BpgSample sample_bpg(const RandomStream& stream, const CompensationConfig& cfg,
                     const DepthMap& depth_m, const Intrinsics& k) {
  BpgSample out;
  RandomStream darken_stream = stream.child("darken");
  out.s_d = sample_uniform(darken_stream, cfg.s_d_range.lo, cfg.s_d_range.hi);
  RandomStream gamma_stream = stream.child("gamma");
  out.g_f = sample_uniform(gamma_stream, cfg.g_f_range.lo, cfg.g_f_range.hi);
  RandomStream intensity_stream = stream.child("intensity");
  out.intensity = sample_intensity(intensity_stream, cfg);
  const RandomStream place_root = stream.child("place");
  for (int i = 0; i < out.intensity.n_f; ++i) {
    RandomStream ps = place_root.child(static_cast<std::uint64_t>(i));
    out.placements.push_back(place_light(ps, depth_m, k, cfg.light_depth_cap_m,
                                         cfg.light_depth_min_m));
  }
  return out;
}

}  // namespace nightsim::bpg
