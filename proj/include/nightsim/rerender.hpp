#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nightsim/raster.hpp"

// Reflections of the inserted light sources, rendered with a Phong model on
// a point cloud recovered from the depth map.
namespace nightsim::rerender {

// Per-pixel 3-vectors in the camera frame (x right, y down, z forward).
struct VectorField {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3d> data;

  VectorField() = default;
  VectorField(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h) {}

  Eigen::Vector3d& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  const Eigen::Vector3d& at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

using PointCloud = VectorField;
using SurfaceNormalMap = VectorField;

// P(u) = s * D(u) * K^-1 (u, v, 1)
PointCloud structured_point_cloud(const DepthMap& depth, const Intrinsics& k,
                                  double s);

// normalize([-s dD/dx, -s dD/dy, 1]) with central differences inside and
// one-sided differences on the border. No orientation pass.
SurfaceNormalMap surface_normals(const DepthMap& depth, double s);

// Flips every normal with dot(n, -P) < 0 so that it faces the camera.
void orient_toward_camera(SurfaceNormalMap& normals, const PointCloud& points);

// Gradient normals oriented toward the camera.
SurfaceNormalMap surface_normals(const DepthMap& depth, double s,
                                 const Intrinsics& k);

// Geometric normals from neighbouring 3D points,
// normalize((P(x+1) - P(x-1)) x (P(y+1) - P(y-1))), oriented toward the
// camera. These are metric-correct and drive ground-plane detection.
SurfaceNormalMap point_cloud_normals(const PointCloud& points);

struct ScaleEstimate {
  double s = 1.0;
  double camera_height_unscaled = 0.0;  // H_c'
  double camera_height = 0.0;           // H_c, meters
  std::size_t ground_pixel_count = 0;
  bool low_confidence = false;
  Eigen::Vector3d ground_normal{0, -1, 0};
};

struct ScaleOptions {
  double cone_deg = 10.0;
  std::size_t min_ground_pixels = 50;
  bool invert = false;  // s = H_c / H_c' instead of H_c' / H_c
};

// Camera "up" in the camera frame.
inline const Eigen::Vector3d kUpAxis{0.0, -1.0, 0.0};

// Ground = lower image half with normals within the cone around kUpAxis.
// H_c' is the median of |P'(u) . n_ground| over ground pixels, where P' is
// the unscaled point and n_ground the mean ground normal. s = H_c' / H_c.
// Returns a low-confidence estimate (s = 1) instead of throwing.
ScaleEstimate estimate_scale(const DepthMap& depth, const Intrinsics& k,
                             const SurfaceNormalMap& normals, double h_c,
                             const ScaleOptions& opts = {});

// As estimate_scale, but throws LowConfidenceError below the pixel minimum.
ScaleEstimate recover_scale(const DepthMap& depth, const Intrinsics& k,
                            const SurfaceNormalMap& normals, double h_c,
                            const ScaleOptions& opts = {});

struct MaterialMaps {
  Image k_d;   // diffusion factors
  Plane k_s;   // reflection factors
};

inline constexpr double kMaterialEps = 1e-8;

// I_p = 3x3 mean (replicated border); K_d = k_d I_p / (max_c I_p + eps);
// K_s = (k_s / 3) sum_c I_p.
MaterialMaps coarse_material(const Image& img, double k_d, double k_s);

struct PointLight {
  Eigen::Vector3d position{0, 0, 0};
  std::array<double, 3> color{0, 0, 0};  // I_F
  double s_f = 1.0;
};

struct PhongTerms {
  double r = 0.0;
  double diffuse = 0.0;   // C1 = max(0, n.L) / r^2
  double specular = 0.0;  // C2 = max(0, R.V)^g_r / r^2
  Eigen::Vector3d l{0, 0, 0};
  Eigen::Vector3d reflect{0, 0, 0};
  bool degenerate = false;  // light within 1e-6 of the point
};

// Viewer at the camera origin, V = normalize(-P).
PhongTerms phong_terms(const Eigen::Vector3d& point,
                       const Eigen::Vector3d& normal,
                       const Eigen::Vector3d& light, double g_r);

struct Reflection {
  Image image;  // unclamped, >= 0
  std::size_t degenerate_pixels = 0;
};

// I_R = s_F * I_F * (K_d C1 + K_s C2) per pixel.
Reflection phong_reflection(const PointCloud& points,
                            const SurfaceNormalMap& normals,
                            const MaterialMaps& mats, const PointLight& light,
                            double g_r);

// base + sum of reflections, without clamping.
Image accumulate_reflections(const Image& base, std::span<const Image> lights);

// base + sum of reflections, clamped to [0,1].
Image rerender_total(const Image& base, std::span<const Image> lights);

}  // namespace nightsim::rerender
