#include "nightsim/raster.hpp"

#include <algorithm>

namespace nightsim {

DepthMap DepthMap::scaled(double s, DepthUnit unit) const {
  DepthMap out(width(), height(), 1.f, unit);
  auto src = data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(s * src[i]);
  }
  return out;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw DomainError("intrinsics focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw DomainError("intrinsics principal point must be finite");
  }
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d Intrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

Intrinsics Intrinsics::resized(double factor) const {
  // Half-pixel-center convention: u' + 0.5 = factor * (u + 0.5).
  return {fx * factor, fy * factor, (cx + 0.5) * factor - 0.5,
          (cy + 0.5) * factor - 0.5};
}

std::string to_string(PairStatus status) {
  switch (status) {
    case PairStatus::kOk:
      return "ok";
    case PairStatus::kDimensionMismatch:
      return "dimension mismatch";
    case PairStatus::kNonFiniteImage:
      return "non-finite image value";
    case PairStatus::kNonFiniteDepth:
      return "non-finite depth value";
    case PairStatus::kNonpositiveDepth:
      return "nonpositive depth value";
  }
  return "unknown";
}

PairStatus validate_pair(const Image& img, const DepthMap& depth) {
  if (img.empty() || depth.empty() || !img.same_shape(depth)) {
    return PairStatus::kDimensionMismatch;
  }
  if (!img.all_finite()) return PairStatus::kNonFiniteImage;
  for (const float d : depth.data()) {
    if (!std::isfinite(d)) return PairStatus::kNonFiniteDepth;
    if (!(d > 0.f)) return PairStatus::kNonpositiveDepth;
  }
  return PairStatus::kOk;
}

void require_valid_pair(const Image& img, const DepthMap& depth) {
  const PairStatus status = validate_pair(img, depth);
  switch (status) {
    case PairStatus::kOk:
      return;
    case PairStatus::kDimensionMismatch:
      throw DimensionMismatchError(
          "image " + std::to_string(img.width()) + "x" +
          std::to_string(img.height()) + " vs depth " +
          std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
    case PairStatus::kNonpositiveDepth:
      throw NonpositiveDepthError("depth map contains a value <= 0");
    case PairStatus::kNonFiniteImage:
    case PairStatus::kNonFiniteDepth:
      throw NonFiniteError(to_string(status));
  }
}

namespace {

template <int C>
Raster<float, C> downsample_impl(const Raster<float, C>& src, int factor) {
  if (factor < 1) throw ArgumentError("downsample factor must be >= 1");
  const int w = std::max(1, (src.width() + factor - 1) / factor);
  const int h = std::max(1, (src.height() + factor - 1) / factor);
  Raster<float, C> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x_end = std::min(src.width(), (x + 1) * factor);
      const int y_end = std::min(src.height(), (y + 1) * factor);
      for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        int n = 0;
        for (int yy = y * factor; yy < y_end; ++yy) {
          for (int xx = x * factor; xx < x_end; ++xx) {
            sum += src.at(xx, yy, c);
            ++n;
          }
        }
        out.at(x, y, c) = static_cast<float>(sum / n);
      }
    }
  }
  return out;
}

}  // namespace

Image area_downsample(const Image& img, int factor) {
  return downsample_impl(img, factor);
}

Plane area_downsample(const Plane& plane, int factor) {
  return downsample_impl(plane, factor);
}

DepthMap area_downsample(const DepthMap& depth, int factor) {
  Plane p = downsample_impl<1>(depth, factor);
  std::vector<float> data(p.data().begin(), p.data().end());
  return DepthMap(p.width(), p.height(), std::move(data), depth.unit());
}

}  // namespace nightsim
