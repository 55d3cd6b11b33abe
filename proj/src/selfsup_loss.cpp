#include "nightsim/selfsup_loss.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "nightsim/error.hpp"

namespace nightsim::loss {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kMinDepth = 1e-6;

int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatchError(std::string(what) + " shape mismatch");
  }
}

}  // namespace

void Pose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw NonFiniteError("pose is not finite");
  }
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (ortho > 1e-6 || std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw DomainError("pose rotation is not a proper rotation matrix");
  }
}

IlluminationChange IlluminationChange::identity(int width, int height) {
  return {Plane(width, height, 1.f), Plane(width, height, 0.f)};
}

void IlluminationChange::validate() const {
  if (!c.same_shape(b)) {
    throw DimensionMismatchError("illumination C and B shape mismatch");
  }
  if (!c.all_finite() || !b.all_finite()) {
    throw NonFiniteError("illumination change is not finite");
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] > 0.f)) throw DomainError("illumination C must be positive");
  }
}

std::size_t WarpField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

WarpField compute_warp(const DepthMap& depth, const Pose& pose,
                       const Intrinsics& k) {
  const int w = depth.width();
  const int h = depth.height();
  WarpField warp;
  warp.width = w;
  warp.height = h;
  warp.coords.assign(static_cast<std::size_t>(w) * h, Eigen::Vector2d::Zero());
  warp.valid.assign(warp.coords.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = warp.index(x, y);
      const Eigen::Vector3d p =
          pose.apply(static_cast<double>(depth.at(x, y)) * k.unproject(x, y));
      if (!(p.z() > kMinDepth)) continue;
      const Eigen::Vector2d uv = k.project(p);
      warp.coords[i] = uv;
      if (uv.x() >= 0.0 && uv.x() <= w - 1 && uv.y() >= 0.0 &&
          uv.y() <= h - 1) {
        warp.valid[i] = 1;
      }
    }
  }
  return warp;
}

SampledImage bilinear_sample(const Image& src, const WarpField& warp) {
  if (!src.same_shape(warp.width, warp.height)) {
    throw DimensionMismatchError("warp field and source shape mismatch");
  }
  const int w = src.width();
  const int h = src.height();
  SampledImage out{Image(w, h, 0.f), warp.valid};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = warp.index(x, y);
      if (!warp.valid[i]) continue;
      const double sx = warp.coords[i].x();
      const double sy = warp.coords[i].y();
      const int x0 = std::min(static_cast<int>(std::floor(sx)), w - 1);
      const int y0 = std::min(static_cast<int>(std::floor(sy)), h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - x0;
      const double ay = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top =
            (1.0 - ax) * src.at(x0, y0, c) + ax * src.at(x1, y0, c);
        const double bottom =
            (1.0 - ax) * src.at(x0, y1, c) + ax * src.at(x1, y1, c);
        out.image.at(x, y, c) =
            static_cast<float>((1.0 - ay) * top + ay * bottom);
      }
    }
  }
  return out;
}

Image apply_illumination(const Image& src, const IlluminationChange& ill) {
  if (!ill.c.same_shape(src) || !ill.b.same_shape(src)) {
    throw DimensionMismatchError("illumination map shape mismatch");
  }
  Image out(src.width(), src.height(), 0.f);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = src.at(x, y, c) * ill.c.at(x, y) + ill.b.at(x, y);
      }
    }
  }
  return out;
}

Plane ssim_map(const Image& a, const Image& b) {
  require_same_shape(a, b, "SSIM input");
  const int w = a.width();
  const int h = a.height();
  Plane out(w, h, 0.f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = reflect(y + dy, h);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = reflect(x + dx, w);
            const double va = a.at(xx, yy, c);
            const double vb = b.at(xx, yy, c);
            mu_a += va;
            mu_b += vb;
            aa += va * va;
            bb += vb * vb;
            ab += va * vb;
          }
        }
        mu_a /= 9.0;
        mu_b /= 9.0;
        const double var_a = aa / 9.0 - mu_a * mu_a;
        const double var_b = bb / 9.0 - mu_b * mu_b;
        const double cov = ab / 9.0 - mu_a * mu_b;
        const double num = (2 * mu_a * mu_b + kC1) * (2 * cov + kC2);
        const double den =
            (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        acc += std::clamp(num / den, 0.0, 1.0);
      }
      out.at(x, y) = static_cast<float>(acc / 3.0);
    }
  }
  return out;
}

Plane photometric_error(const Image& recon, const Image& target,
                        double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("alpha must be in [0,1]");
  }
  const Plane ssim = ssim_map(recon, target);
  Plane out(recon.width(), recon.height(), 0.f);
  for (int y = 0; y < recon.height(); ++y) {
    for (int x = 0; x < recon.width(); ++x) {
      double l1 = 0.0;
      for (int c = 0; c < 3; ++c) {
        l1 += std::abs(static_cast<double>(recon.at(x, y, c)) -
                       target.at(x, y, c));
      }
      l1 /= 3.0;
      out.at(x, y) = static_cast<float>(alpha / 2.0 * (1.0 - ssim.at(x, y)) +
                                        (1.0 - alpha) * l1);
    }
  }
  return out;
}

double min_reprojection_loss(const Image& target, std::span<const Image> recons,
                             std::span<const Image> sources, double alpha) {
  if (recons.empty()) throw ArgumentError("no reconstructions given");
  Plane best = photometric_error(recons[0], target, alpha);
  auto fold = [&](const Image& candidate) {
    const Plane pe = photometric_error(candidate, target, alpha);
    for (std::size_t i = 0; i < best.size(); ++i) {
      best[i] = std::min(best[i], pe[i]);
    }
  };
  for (std::size_t i = 1; i < recons.size(); ++i) fold(recons[i]);
  for (const Image& s : sources) fold(s);
  return best.mean();
}

double smoothness_loss(const Plane& disparity, const Image& guide) {
  if (!disparity.same_shape(guide)) {
    throw DimensionMismatchError("disparity and guide image shape mismatch");
  }
  if (!disparity.all_finite()) throw NonFiniteError("disparity is not finite");
  const double mean_d = disparity.mean();
  if (mean_d == 0.0) throw DegenerateInputError("disparity has zero mean");
  const int w = disparity.width();
  const int h = disparity.height();
  auto image_grad = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < 3; ++c) {
      g += std::abs(static_cast<double>(guide.at(x1, y1, c)) -
                    guide.at(x0, y0, c));
    }
    return g / 3.0;
  };
  double sum_x = 0.0;
  double sum_y = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = disparity.at(x, y) / mean_d;
      if (x + 1 < w) {
        const double dx = disparity.at(x + 1, y) / mean_d - d;
        sum_x += std::abs(dx) * std::exp(-image_grad(x, y, x + 1, y));
      }
      if (y + 1 < h) {
        const double dy = disparity.at(x, y + 1) / mean_d - d;
        sum_y += std::abs(dy) * std::exp(-image_grad(x, y, x, y + 1));
      }
    }
  }
  double loss = 0.0;
  if (w > 1) loss += sum_x / (static_cast<double>(w - 1) * h);
  if (h > 1) loss += sum_y / (static_cast<double>(h - 1) * w);
  return loss;
}

double total_loss(std::span<const ScaleLoss> scales, double lambda) {
  if (scales.size() != kScaleCount) {
    throw ArgumentError("total loss needs exactly 4 scales, got " +
                        std::to_string(scales.size()));
  }
  double sum = 0.0;
  for (const ScaleLoss& s : scales) sum += s.l_ss + lambda * s.l_g;
  return sum / kScaleCount;
}

ScaleLoss scale_loss(const ScaleInputs& in, double alpha) {
  if (in.sources.empty()) throw ArgumentError("no source frames given");
  if (!in.depth.same_shape(in.target)) {
    throw DimensionMismatchError("depth and target shape mismatch");
  }
  std::vector<Image> recons;
  std::vector<Image> raw;
  for (const SourceFrame& s : in.sources) {
    require_same_shape(s.image, in.target, "source frame");
    s.pose.validate();
    const WarpField warp = compute_warp(in.depth, s.pose, in.k);
    const Image lit = apply_illumination(s.image, s.illumination);
    recons.push_back(bilinear_sample(lit, warp).image);
    raw.push_back(s.image);
  }
  ScaleLoss out;
  out.l_ss = min_reprojection_loss(in.target, recons, raw, alpha);
  out.l_g = smoothness_loss(in.disparity, in.target);
  return out;
}

LossReport evaluate_loss(std::span<const ScaleInputs> scales, double alpha,
                         double lambda) {
  LossReport report;
  for (const ScaleInputs& s : scales) {
    report.scales.push_back(scale_loss(s, alpha));
  }
  report.total = total_loss(report.scales, lambda);
  return report;
}

}  // namespace nightsim::loss
