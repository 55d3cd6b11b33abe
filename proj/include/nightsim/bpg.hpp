#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "nightsim/config.hpp"
#include "nightsim/light_bank.hpp"
#include "nightsim/random.hpp"
#include "nightsim/raster.hpp"

// Brightness peak generation: darken the day image and add light sources in
// the gamma domain.
namespace nightsim::bpg {

struct IntensitySample {
  double f = 1.0;    // BPG intensity F
  double s_f = 1.0;  // resize scale of the light-source raster
  int n_f = 1;       // number of light sources
};

// N_F = max(floor(F / s_F + 1/2), 1)
int light_count(double f, double s_f);

// log s_F and log F uniform over the configured ranges, in that order.
IntensitySample sample_intensity(RandomStream& stream,
                                 const CompensationConfig& cfg);

struct LightPlacement {
  Eigen::Vector2i pixel{0, 0};
  double z = 1.0;                   // meters along the optical axis
  Eigen::Vector3d position{0, 0, 1};  // camera frame, z * K^-1 (u, v, 1)
  int attempts = 1;
  // Every attempt landed on a surface nearer than z_min; z = 0.9 * depth.
  bool near_field_fallback = false;
};

inline constexpr int kPlacementRetries = 16;

// Uniform pixel, then z ~ U(z_min, min(cap, depth at the pixel)).
LightPlacement place_light(RandomStream& stream, const DepthMap& depth_m,
                           const Intrinsics& k, double cap_m,
                           double z_min = 0.5);

Image darken(const Image& img, double s_d);

struct PlacedSource {
  const lights::LightSourceImage* source = nullptr;
  double s_f = 1.0;
  Eigen::Vector2i center{0, 0};
};

// ((darkened)^g + sum_i ss(L_S, s_F, p_i)^g)^(1/g), clamped to [0,1] once at
// the end. `ss` scales the source about its center by s_F and moves that
// center to p_i; the part outside the frame is dropped.
Image composite(const Image& darkened, std::span<const PlacedSource> sources,
                double g_f);

// Every scalar drawn for one BPG application.
struct BpgSample {
  double s_d = 1.0;
  double g_f = 2.0;
  IntensitySample intensity;
  std::vector<LightPlacement> placements;
};

// Draws s_d, g_f, (F, s_F, N_F) and N_F placements from named children of
// `stream`.
BpgSample sample_bpg(const RandomStream& stream, const CompensationConfig& cfg,
                     const DepthMap& depth_m, const Intrinsics& k);

}  // namespace nightsim::bpg
