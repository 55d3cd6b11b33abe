#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nightsim/raster.hpp"

// Standard monocular depth metrics with median scaling and dataset crops.
namespace nightsim::metrics {

enum class Crop { kNone, kNuScenes, kRobotCar };
enum class ClipMode { kClamp, kMask };

std::string to_string(Crop crop);
Crop crop_from_string(const std::string& name);
std::string to_string(ClipMode mode);
ClipMode clip_mode_from_string(const std::string& name);

struct EvalOptions {
  double min_depth = 0.1;
  double max_depth = 60.0;
  bool median_scale = true;
  Crop crop = Crop::kNone;
  // kClamp clamps predictions into [min_depth, max_depth]; kMask drops the
  // pixels whose prediction falls outside instead.
  ClipMode clip = ClipMode::kClamp;

  void validate() const;
};

struct MetricReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t valid_pixel_count = 0;
  double median_ratio = 1.0;  // applied scale, 1 without median scaling
};

// Ground truth with an explicit validity mask (LiDAR projections are sparse).
struct SparseDepth {
  Plane depth;
  std::vector<std::uint8_t> mask;

  // Marks finite, positive values valid.
  static SparseDepth from_plane(const Plane& depth);
  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
};

struct CropWindow {
  int native_width = 0;
  int native_height = 0;
  int width = 0;
  int height = 0;
  int offset_x = 0;
  int offset_y = 0;
};

// Centered crop window of a dataset. kNone has no fixed native size.
CropWindow crop_window(Crop crop);

// Throws SizeError naming the expected size when the input is not native.
Image precrop(const Image& img, Crop crop);
Plane precrop(const Plane& plane, Crop crop);
DepthMap precrop(const DepthMap& depth, Crop crop);
SparseDepth precrop(const SparseDepth& gt, Crop crop);
Intrinsics precrop(const Intrinsics& k, Crop crop);

// Applies opts.crop to both inputs first. Throws NoValidPixelsError when no
// ground-truth pixel lies in (min_depth, max_depth].
MetricReport evaluate(const DepthMap& pred, const SparseDepth& gt,
                      const EvalOptions& opts = {});

// Unweighted per-frame mean; valid_pixel_count is the total.
MetricReport aggregate(std::span<const MetricReport> frames);

}  // namespace nightsim::metrics
