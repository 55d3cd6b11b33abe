#include "nightsim/depth_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nightsim/error.hpp"

namespace nightsim::metrics {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

template <typename R>
R crop_raster(const R& src, Crop crop) {
  if (crop == Crop::kNone) return src;
  const CropWindow win = crop_window(crop);
  if (!src.same_shape(win.native_width, win.native_height)) {
    throw SizeError(to_string(crop) + " crop expects " +
                    std::to_string(win.native_width) + "x" +
                    std::to_string(win.native_height) + " input, got " +
                    std::to_string(src.width()) + "x" +
                    std::to_string(src.height()));
  }
  R out(win.width, win.height);
  for (int y = 0; y < win.height; ++y) {
    for (int x = 0; x < win.width; ++x) {
      for (int c = 0; c < R::kChannels; ++c) {
        out.at(x, y, c) = src.at(x + win.offset_x, y + win.offset_y, c);
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(Crop crop) {
  switch (crop) {
    case Crop::kNuScenes:
      return "nuscenes";
    case Crop::kRobotCar:
      return "robotcar";
    case Crop::kNone:
      break;
  }
  return "none";
}

Crop crop_from_string(const std::string& name) {
  if (name == "none") return Crop::kNone;
  if (name == "nuscenes") return Crop::kNuScenes;
  if (name == "robotcar") return Crop::kRobotCar;
  throw ConfigError("unknown crop '" + name + "'");
}

std::string to_string(ClipMode mode) {
  return mode == ClipMode::kClamp ? "clamp" : "mask";
}

ClipMode clip_mode_from_string(const std::string& name) {
  if (name == "clamp") return ClipMode::kClamp;
  if (name == "mask") return ClipMode::kMask;
  throw ConfigError("unknown clip mode '" + name + "'");
}

void EvalOptions::validate() const {
  if (!(min_depth > 0.0) || !(max_depth > min_depth) ||
      !std::isfinite(max_depth)) {
    throw ConfigError("depth range must satisfy 0 < min_depth < max_depth");
  }
}

SparseDepth SparseDepth::from_plane(const Plane& depth) {
  SparseDepth gt{depth, std::vector<std::uint8_t>(depth.size(), 0)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    gt.mask[i] = std::isfinite(depth[i]) && depth[i] > 0.f;
  }
  return gt;
}

CropWindow crop_window(Crop crop) {
  CropWindow w;
  switch (crop) {
    case Crop::kNuScenes:
      w = {1600, 900, 1536, 768, 0, 0};
      break;
    case Crop::kRobotCar:
      w = {1280, 960, 1280, 640, 0, 0};
      break;
    case Crop::kNone:
      return w;
  }
  w.offset_x = (w.native_width - w.width) / 2;
  w.offset_y = (w.native_height - w.height) / 2;
  return w;
}

Image precrop(const Image& img, Crop crop) { return crop_raster(img, crop); }

Plane precrop(const Plane& plane, Crop crop) {
  return crop_raster(plane, crop);
}

DepthMap precrop(const DepthMap& depth, Crop crop) {
  const Plane cropped = crop_raster(static_cast<const Plane&>(depth), crop);
  return DepthMap(cropped.width(), cropped.height(),
                  std::vector<float>(cropped.data().begin(),
                                     cropped.data().end()),
                  depth.unit());
}

SparseDepth precrop(const SparseDepth& gt, Crop crop) {
  if (crop == Crop::kNone) return gt;
  SparseDepth out{crop_raster(gt.depth, crop), {}};
  const CropWindow win = crop_window(crop);
  out.mask.resize(out.depth.size());
  for (int y = 0; y < win.height; ++y) {
    for (int x = 0; x < win.width; ++x) {
      out.mask[out.depth.index(x, y)] =
          gt.mask[gt.depth.index(x + win.offset_x, y + win.offset_y)];
    }
  }
  return out;
}

Intrinsics precrop(const Intrinsics& k, Crop crop) {
  if (crop == Crop::kNone) return k;
  const CropWindow win = crop_window(crop);
  return k.cropped(win.offset_x, win.offset_y);
}

MetricReport evaluate(const DepthMap& pred_in, const SparseDepth& gt_in,
                      const EvalOptions& opts) {
  opts.validate();
  const DepthMap pred = precrop(pred_in, opts.crop);
  const SparseDepth gt = precrop(gt_in, opts.crop);
  if (!pred.same_shape(gt.depth) || gt.mask.size() != gt.depth.size()) {
    throw DimensionMismatchError("prediction and ground truth shape mismatch");
  }

  std::vector<double> p;
  std::vector<double> g;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = gt.depth[i];
    if (!gt.mask[i] || !std::isfinite(d) || !(d > opts.min_depth) ||
        d > opts.max_depth) {
      continue;
    }
    if (!std::isfinite(pred[i]) || !(pred[i] > 0.f)) {
      throw NonpositiveDepthError("prediction must be finite and positive");
    }
    p.push_back(pred[i]);
    g.push_back(d);
  }
  if (g.empty()) throw NoValidPixelsError("no valid ground-truth pixels");

  MetricReport r;
  if (opts.median_scale) {
    r.median_ratio = median_of(g) / median_of(p);
    for (double& v : p) v *= r.median_ratio;
  }

  double abs_rel = 0, sq_rel = 0, se = 0, se_log = 0;
  std::size_t d1 = 0, d2 = 0, d3 = 0, n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = p[i];
    if (opts.clip == ClipMode::kClamp) {
      d = std::clamp(d, opts.min_depth, opts.max_depth);
    } else if (d < opts.min_depth || d > opts.max_depth) {
      continue;
    }
    const double t = g[i];
    const double diff = d - t;
    abs_rel += std::abs(diff) / t;
    sq_rel += diff * diff / t;
    se += diff * diff;
    const double log_diff = std::log(d) - std::log(t);
    se_log += log_diff * log_diff;
    const double ratio = std::max(d / t, t / d);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    ++n;
  }
  if (n == 0) throw NoValidPixelsError("every prediction was masked out");
  const double inv = 1.0 / static_cast<double>(n);
  r.abs_rel = abs_rel * inv;
  r.sq_rel = sq_rel * inv;
  r.rmse = std::sqrt(se * inv);
  r.rmse_log = std::sqrt(se_log * inv);
  r.delta1 = static_cast<double>(d1) * inv;
  r.delta2 = static_cast<double>(d2) * inv;
  r.delta3 = static_cast<double>(d3) * inv;
  r.valid_pixel_count = n;
  return r;
}

MetricReport aggregate(std::span<const MetricReport> frames) {
  MetricReport out;
  if (frames.empty()) return out;
  out.median_ratio = 0.0;
  for (const MetricReport& f : frames) {
    out.abs_rel += f.abs_rel;
    out.sq_rel += f.sq_rel;
    out.rmse += f.rmse;
    out.rmse_log += f.rmse_log;
    out.delta1 += f.delta1;
    out.delta2 += f.delta2;
    out.delta3 += f.delta3;
    out.median_ratio += f.median_ratio;
    out.valid_pixel_count += f.valid_pixel_count;
  }
  const double inv = 1.0 / static_cast<double>(frames.size());
  out.abs_rel *= inv;
  out.sq_rel *= inv;
  out.rmse *= inv;
  out.rmse_log *= inv;
  out.delta1 *= inv;
  out.delta2 *= inv;
  out.delta3 *= inv;
  out.median_ratio *= inv;
  return out;
}

}  // namespace nightsim::metrics
