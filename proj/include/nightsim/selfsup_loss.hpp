#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "nightsim/raster.hpp"

// Forward evaluation of the self-supervised depth objective.
namespace nightsim::loss {

inline constexpr double kDefaultAlpha = 0.85;
inline constexpr double kDefaultSmoothnessWeight = 1e-3;
inline constexpr int kScaleCount = 4;

// Rigid transform from the target camera frame to the source camera frame.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  // Throws DomainError unless R^T R = I and det R = 1 to 1e-6.
  void validate() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

// Per-pixel linear brightness change, src * C + B.
struct IlluminationChange {
  Plane c;
  Plane b;

  static IlluminationChange identity(int width, int height);
  // Throws on non-finite values or C <= 0.
  void validate() const;
};

struct WarpField {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector2d> coords;
  std::vector<std::uint8_t> valid;

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  std::size_t valid_count() const;
};

// Source coordinate of each target pixel, K T (D(u) K^-1 u). Points at or
// behind the source camera and coordinates outside [0, W-1] x [0, H-1] are
// marked invalid.
WarpField compute_warp(const DepthMap& depth, const Pose& pose,
                       const Intrinsics& k);

struct SampledImage {
  Image image;
  std::vector<std::uint8_t> valid;
};

// Bilinear lookup at every valid warp coordinate; invalid pixels are zero.
SampledImage bilinear_sample(const Image& src, const WarpField& warp);

Image apply_illumination(const Image& src, const IlluminationChange& ill);

// Channel-averaged SSIM from 3x3 statistics with reflection padding, each
// channel clamped to [0, 1].
Plane ssim_map(const Image& a, const Image& b);

// (alpha / 2)(1 - SSIM) + (1 - alpha)|a - b|, channel-averaged.
Plane photometric_error(const Image& recon, const Image& target,
                        double alpha = kDefaultAlpha);

// Spatial mean of the per-pixel minimum of pe over reconstructions and raw
// sources. Throws ArgumentError when `recons` is empty.
double min_reprojection_loss(const Image& target, std::span<const Image> recons,
                             std::span<const Image> sources,
                             double alpha = kDefaultAlpha);

// d* = d / mean(d); mean(|dx d*| exp(-|dx I|)) + mean(|dy d*| exp(-|dy I|))
// with forward differences and channel-averaged image gradients.
double smoothness_loss(const Plane& disparity, const Image& guide);

struct ScaleLoss {
  double l_ss = 0.0;
  double l_g = 0.0;
};

// (1/4) sum (L_ss + lambda L_g); needs exactly four scales.
double total_loss(std::span<const ScaleLoss> scales,
                  double lambda = kDefaultSmoothnessWeight);

struct SourceFrame {
  Image image;
  Pose pose;
  IlluminationChange illumination;
};

struct ScaleInputs {
  Image target;
  std::vector<SourceFrame> sources;
  DepthMap depth;
  Plane disparity;
  Intrinsics k;
};

// Reconstructs the target from every source (illumination change, then warp)
// and evaluates L_ss and L_g at one scale.
ScaleLoss scale_loss(const ScaleInputs& in, double alpha = kDefaultAlpha);

struct LossReport {
  std::vector<ScaleLoss> scales;
  double total = 0.0;
};

LossReport evaluate_loss(std::span<const ScaleInputs> scales,
                         double alpha = kDefaultAlpha,
                         double lambda = kDefaultSmoothnessWeight);

}  // namespace nightsim::loss
