#pragma once

#include <cmath>

#include "nightsim/raster.hpp"

namespace nightsim::testing {

struct SyntheticScene {
  Image image;
  DepthMap depth;
  Intrinsics k;
};

// Pinhole camera `camera_height` above a flat road (y down, so the road is
// the plane y = camera_height) facing a wall at `wall_depth`. Depth values
// are the metric z coordinate times `depth_scale`.
inline SyntheticScene make_road_scene(int width, int height,
                                      double camera_height = 1.5,
                                      double wall_depth = 30.0,
                                      double depth_scale = 1.0) {
  SyntheticScene s{Image(width, height), DepthMap(width, height),
                   Intrinsics{0.8 * width, 0.8 * width, 0.5 * (width - 1),
                              0.5 * (height - 1)}};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double ry = (y - s.k.cy) / s.k.fy;
      double z = wall_depth;
      bool road = false;
      if (ry > 0.0 && camera_height / ry < wall_depth) {
        z = camera_height / ry;
        road = true;
      }
      s.depth.at(x, y) = static_cast<float>(z * depth_scale);
      const double checker = ((x / 8 + y / 8) % 2) ? 0.08 : 0.0;
      if (road) {
        s.image.at(x, y, 0) = static_cast<float>(0.35 + checker);
        s.image.at(x, y, 1) = static_cast<float>(0.35 + checker);
        s.image.at(x, y, 2) = static_cast<float>(0.38 + checker);
      } else {
        const double t = static_cast<double>(x) / std::max(1, width - 1);
        s.image.at(x, y, 0) = static_cast<float>(0.55 + 0.3 * t);
        s.image.at(x, y, 1) = static_cast<float>(0.65 - 0.2 * t + checker);
        s.image.at(x, y, 2) = static_cast<float>(0.85 - 0.1 * t);
      }
    }
  }
  return s;
}

}  // namespace nightsim::testing
