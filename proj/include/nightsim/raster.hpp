#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nightsim/error.hpp"

namespace nightsim {

// Row-major interleaved raster. Channel count is part of the type so that a
// depth map cannot be passed where an RGB image is expected.
template <typename T, int Channels>
class Raster {
 public:
  static constexpr int kChannels = Channels;
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * Channels) {
      throw SizeError("raster data length " + std::to_string(data_.size()) +
                      " does not match " + std::to_string(width) + "x" +
                      std::to_string(height) + "x" + std::to_string(Channels));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() & { return data_; }
  std::span<const T> data() const& { return data_; }
  // A temporary hands over its storage instead of a dangling view.
  std::vector<T> data() && { return std::move(data_); }

  bool all_finite() const {
    for (const T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double mean() const {
    double sum = 0.0;
    for (const T v : data_) sum += v;
    return data_.empty() ? 0.0 : sum / static_cast<double>(data_.size());
  }

  bool same_shape(int width, int height) const {
    return width_ == width && height_ == height;
  }

  template <typename U, int C>
  bool same_shape(const Raster<U, C>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw SizeError("raster dimensions must be positive, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Linear RGB in [0,1] unless an operation documents otherwise.
using Image = Raster<float, 3>;
// Single-channel float map (alpha, disparity, error maps).
using Plane = Raster<float, 1>;
// Sensor-domain values; unbounded and kept in double precision.
using RawImage = Raster<double, 3>;

enum class DepthUnit { kUnscaled, kMeters };

class DepthMap : public Raster<float, 1> {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, float fill = 1.f,
           DepthUnit unit = DepthUnit::kUnscaled)
      : Raster(width, height, fill), unit_(unit) {}
  DepthMap(int width, int height, std::vector<float> data,
           DepthUnit unit = DepthUnit::kUnscaled)
      : Raster(width, height, std::move(data)), unit_(unit) {}

  DepthUnit unit() const { return unit_; }
  void set_unit(DepthUnit unit) { unit_ = unit; }

  // Multiplies every value by `s` and tags the result with `unit`.
  DepthMap scaled(double s, DepthUnit unit) const;

 private:
  DepthUnit unit_ = DepthUnit::kUnscaled;
};

// Pinhole camera. Pixel (x, y) has homogeneous coordinate (x, y, 1).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;

  // K^-1 (u, v, 1)
  Eigen::Vector3d unproject(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  // Principal point moved by a crop whose top-left corner is (dx, dy).
  Intrinsics cropped(int dx, int dy) const {
    return {fx, fy, cx - dx, cy - dy};
  }
  // Intrinsics for an image resampled by `factor` (0.5 = half resolution).
  Intrinsics resized(double factor) const;
};

enum class PairStatus {
  kOk,
  kDimensionMismatch,
  kNonFiniteImage,
  kNonFiniteDepth,
  kNonpositiveDepth,
};

std::string to_string(PairStatus status);

PairStatus validate_pair(const Image& img, const DepthMap& depth);
// Throws the error class matching the failing check.
void require_valid_pair(const Image& img, const DepthMap& depth);

// Clamps every value into [lo, hi]; returns how many values were changed.
template <typename T, int C>
std::size_t clamp_values(Raster<T, C>& r, T lo, T hi) {
  std::size_t changed = 0;
  for (T& v : r.data()) {
    if (v < lo) {
      v = lo;
      ++changed;
    } else if (v > hi) {
      v = hi;
      ++changed;
    }
  }
  return changed;
}

// Box-filter downsample by an integer factor; trailing partial blocks are
// averaged over the pixels they contain.
Image area_downsample(const Image& img, int factor);
Plane area_downsample(const Plane& plane, int factor);
DepthMap area_downsample(const DepthMap& depth, int factor);

// Bilinear sample with zero outside the raster, pixel centers at integers.
template <int C>
float sample_bilinear_zero(const Raster<float, C>& r, double x, double y,
                           int c) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  auto tap = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= r.width() || yi >= r.height()) return 0.0;
    return r.at(xi, yi, c);
  };
  const double top = (1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0);
  const double bottom =
      (1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

// Resize with half-pixel-center bilinear sampling and edge replication.
template <int C>
Raster<float, C> resize_bilinear(const Raster<float, C>& src, int width,
                                 int height) {
  Raster<float, C> out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    double v = (y + 0.5) * sy - 0.5;
    v = std::clamp(v, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(v);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ay = v - y0;
    for (int x = 0; x < width; ++x) {
      double u = (x + 0.5) * sx - 0.5;
      u = std::clamp(u, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(u);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double ax = u - x0;
      for (int c = 0; c < C; ++c) {
        const double top =
            (1.0 - ax) * src.at(x0, y0, c) + ax * src.at(x1, y0, c);
        const double bottom =
            (1.0 - ax) * src.at(x0, y1, c) + ax * src.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - ay) * top + ay * bottom);
      }
    }
  }
  return out;
}

}  // namespace nightsim
