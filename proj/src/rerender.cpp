#include "nightsim/rerender.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nightsim/error.hpp"

namespace nightsim::rerender {

namespace {

void check_shape(const VectorField& a, int w, int h, const char* what) {
  if (a.width != w || a.height != h) {
    throw DimensionMismatchError(std::string(what) + " shape mismatch");
  }
}

// Central difference inside, one-sided on the border; unit pixel spacing.
double grad_x(const DepthMap& d, int x, int y) {
  const int w = d.width();
  if (w == 1) return 0.0;
  if (x == 0) return d.at(1, y) - d.at(0, y);
  if (x == w - 1) return d.at(w - 1, y) - d.at(w - 2, y);
  return 0.5 * (static_cast<double>(d.at(x + 1, y)) - d.at(x - 1, y));
}

double grad_y(const DepthMap& d, int x, int y) {
  const int h = d.height();
  if (h == 1) return 0.0;
  if (y == 0) return d.at(x, 1) - d.at(x, 0);
  if (y == h - 1) return d.at(x, h - 1) - d.at(x, h - 2);
  return 0.5 * (static_cast<double>(d.at(x, y + 1)) - d.at(x, y - 1));
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

PointCloud structured_point_cloud(const DepthMap& depth, const Intrinsics& k,
                                  double s) {
  if (!(s > 0.0)) throw DomainError("scale factor must be positive");
  PointCloud out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double sd = s * static_cast<double>(depth.at(x, y));
      out.at(x, y) = sd * k.unproject(x, y);
    }
  }
  return out;
}

SurfaceNormalMap surface_normals(const DepthMap& depth, double s) {
  if (!(s > 0.0)) throw DomainError("scale factor must be positive");
  SurfaceNormalMap out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const Eigen::Vector3d n(-s * grad_x(depth, x, y),
                              -s * grad_y(depth, x, y), 1.0);
      out.at(x, y) = n.normalized();
    }
  }
  return out;
}

void orient_toward_camera(SurfaceNormalMap& normals, const PointCloud& points) {
  check_shape(points, normals.width, normals.height, "point cloud");
  for (std::size_t i = 0; i < normals.data.size(); ++i) {
    if (normals.data[i].dot(-points.data[i]) < 0.0) {
      normals.data[i] = -normals.data[i];
    }
  }
}

SurfaceNormalMap surface_normals(const DepthMap& depth, double s,
                                 const Intrinsics& k) {
  SurfaceNormalMap n = surface_normals(depth, s);
  orient_toward_camera(n, structured_point_cloud(depth, k, s));
  return n;
}

SurfaceNormalMap point_cloud_normals(const PointCloud& points) {
  const int w = points.width;
  const int h = points.height;
  SurfaceNormalMap out(w, h);
  for (int y = 0; y < h; ++y) {
    const int yl = std::max(0, y - 1);
    const int yh = std::min(h - 1, y + 1);
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(0, x - 1);
      const int xh = std::min(w - 1, x + 1);
      const Eigen::Vector3d du = points.at(xh, y) - points.at(xl, y);
      const Eigen::Vector3d dv = points.at(x, yh) - points.at(x, yl);
      Eigen::Vector3d n = du.cross(dv);
      const double len = n.norm();
      n = len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0, 0, -1);
      if (n.dot(-points.at(x, y)) < 0.0) n = -n;
      out.at(x, y) = n;
    }
  }
  return out;
}

ScaleEstimate estimate_scale(const DepthMap& depth, const Intrinsics& k,
                             const SurfaceNormalMap& normals, double h_c,
                             const ScaleOptions& opts) {
  if (!(h_c > 0.0)) throw DomainError("camera height must be positive");
  check_shape(normals, depth.width(), depth.height(), "normal map");
  const double cos_cone = std::cos(opts.cone_deg * std::numbers::pi / 180.0);

  std::vector<std::pair<int, int>> ground;
  Eigen::Vector3d normal_sum = Eigen::Vector3d::Zero();
  for (int y = depth.height() / 2; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const Eigen::Vector3d& n = normals.at(x, y);
      if (n.dot(kUpAxis) > cos_cone) {
        ground.emplace_back(x, y);
        normal_sum += n;
      }
    }
  }

  ScaleEstimate est;
  est.camera_height = h_c;
  est.ground_pixel_count = ground.size();
  if (ground.size() < opts.min_ground_pixels || ground.empty()) {
    est.low_confidence = true;
    est.s = 1.0;
    return est;
  }
  est.ground_normal = normal_sum.normalized();
  std::vector<double> heights;
  heights.reserve(ground.size());
  for (const auto& [x, y] : ground) {
    const Eigen::Vector3d p =
        static_cast<double>(depth.at(x, y)) * k.unproject(x, y);
    heights.push_back(std::abs(p.dot(est.ground_normal)));
  }
  est.camera_height_unscaled = median_of(std::move(heights));
  if (!(est.camera_height_unscaled > 0.0)) {
    est.low_confidence = true;
    est.s = 1.0;
    return est;
  }
  est.s = opts.invert ? h_c / est.camera_height_unscaled
                      : est.camera_height_unscaled / h_c;
  return est;
}

ScaleEstimate recover_scale(const DepthMap& depth, const Intrinsics& k,
                            const SurfaceNormalMap& normals, double h_c,
                            const ScaleOptions& opts) {
  ScaleEstimate est = estimate_scale(depth, k, normals, h_c, opts);
  if (est.low_confidence) {
    throw LowConfidenceError(
        "only " + std::to_string(est.ground_pixel_count) +
            " ground pixels found (need " +
            std::to_string(opts.min_ground_pixels) + ")",
        est.ground_pixel_count);
  }
  return est;
}

MaterialMaps coarse_material(const Image& img, double k_d, double k_s) {
  const int w = img.width();
  const int h = img.height();
  MaterialMaps m{Image(w, h, 0.f), Plane(w, h, 0.f)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double pooled[3] = {0.0, 0.0, 0.0};
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          for (int c = 0; c < 3; ++c) pooled[c] += img.at(xx, yy, c);
        }
      }
      for (double& v : pooled) v /= 9.0;
      const double peak = std::max({pooled[0], pooled[1], pooled[2]});
      for (int c = 0; c < 3; ++c) {
        m.k_d.at(x, y, c) =
            static_cast<float>(k_d * pooled[c] / (peak + kMaterialEps));
      }
      m.k_s.at(x, y) =
          static_cast<float>(k_s / 3.0 * (pooled[0] + pooled[1] + pooled[2]));
    }
  }
  return m;
}

PhongTerms phong_terms(const Eigen::Vector3d& point,
                       const Eigen::Vector3d& normal,
                       const Eigen::Vector3d& light, double g_r) {
  PhongTerms t;
  const Eigen::Vector3d to_light = light - point;
  t.r = to_light.norm();
  if (t.r < 1e-6) {
    t.degenerate = true;
    return t;
  }
  t.l = to_light / t.r;
  const double n_dot_l = normal.dot(t.l);
  t.reflect = (2.0 * n_dot_l * normal - t.l).normalized();
  const Eigen::Vector3d view = (-point).normalized();
  const double r2 = t.r * t.r;
  t.diffuse = std::max(0.0, n_dot_l) / r2;
  t.specular = std::pow(std::max(0.0, t.reflect.dot(view)), g_r) / r2;
  return t;
}

Reflection phong_reflection(const PointCloud& points,
                            const SurfaceNormalMap& normals,
                            const MaterialMaps& mats, const PointLight& light,
                            double g_r) {
  if (!(g_r > 0.0)) throw DomainError("Phong exponent must be positive");
  for (const double c : light.color) {
    if (c < 0.0) throw DomainError("light color must be nonnegative");
  }
  const int w = points.width;
  const int h = points.height;
  check_shape(normals, w, h, "normal map");
  if (!mats.k_d.same_shape(w, h) || !mats.k_s.same_shape(w, h)) {
    throw DimensionMismatchError("material map shape mismatch");
  }
  Reflection out{Image(w, h, 0.f), 0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const PhongTerms t =
          phong_terms(points.at(x, y), normals.at(x, y), light.position, g_r);
      if (t.degenerate) {
        ++out.degenerate_pixels;
        continue;
      }
      const double ks = mats.k_s.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = light.s_f * light.color[c] *
                         (mats.k_d.at(x, y, c) * t.diffuse + ks * t.specular);
        out.image.at(x, y, c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

Image accumulate_reflections(const Image& base, std::span<const Image> lights) {
  Image out = base;
  for (const Image& r : lights) {
    if (!r.same_shape(base)) {
      throw DimensionMismatchError("reflection image shape mismatch");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
  }
  return out;
}

Image rerender_total(const Image& base, std::span<const Image> lights) {
  if (lights.empty()) return base;
  Image out = accumulate_reflections(base, lights);
  clamp_values(out, 0.f, 1.f);
  return out;
}

}  // namespace nightsim::rerender
