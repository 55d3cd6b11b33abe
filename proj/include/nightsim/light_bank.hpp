#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nightsim/config.hpp"
#include "nightsim/random.hpp"
#include "nightsim/raster.hpp"

namespace nightsim::lights {

enum class SourceOrigin { kBankFile, kProcedural };

// Additive light raster. RGB is in light units and may exceed 1; alpha marks
// the support and only ever moves with geometric transforms.
struct LightSourceImage {
  Image rgb;
  Plane alpha;
  SourceOrigin origin = SourceOrigin::kProcedural;

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
  double total_alpha() const;
  // Alpha-weighted mean RGB over the support; zero for an empty support.
  std::array<double, 3> mean_color() const;
};

struct AugmentationParams {
  double rotation = 0.0;  // radians, [0, 2pi)
  bool flip_h = false;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double blur_sigma = 0.1;

  // Throws RangeError when a field leaves its closed range.
  void validate() const;
  friend bool operator==(const AugmentationParams&,
                         const AugmentationParams&) = default;
};

AugmentationParams sample_augmentation(RandomStream& stream,
                                       const AugmentationRanges& ranges);

// Directory of light-source PNGs, decoded on demand. A bank can also be built
// from in-memory rasters (tests, generated banks).
class LightBank {
 public:
  LightBank() = default;

  // Lists decodable PNGs in `directory`, sorted by filename. Files whose
  // header cannot be read are skipped and reported in warnings().
  static LightBank load(const std::filesystem::path& directory);
  static LightBank from_images(std::vector<LightSourceImage> images);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  LightSourceImage get(std::size_t index) const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<LightSourceImage> images_;
  std::vector<std::string> warnings_;
};

inline LightBank load_bank(const std::filesystem::path& directory) {
  return LightBank::load(directory);
}

// Procedural stand-in for a captured flare: a radially decaying glare core
// plus 2-8 streaks, confined to a disc of radius 0.45 * size.
LightSourceImage synthesize_flare(RandomStream& stream, int size);

// Rotation about the center (zero padding), optional horizontal flip,
// brightness, contrast about the support mean, saturation about per-pixel
// luma, then Gaussian blur of the RGB planes.
LightSourceImage apply_augmentation(const LightSourceImage& src,
                                    const AugmentationParams& p);

// Stage helpers, exposed for tests.
LightSourceImage rotate(const LightSourceImage& src, double radians);
LightSourceImage flip_horizontal(const LightSourceImage& src);
Image scale_brightness(const Image& rgb, double factor);
Image adjust_contrast(const Image& rgb, const Plane& alpha, double factor);
Image adjust_saturation(const Image& rgb, double factor);
Image gaussian_blur(const Image& rgb, double sigma);

// What was drawn for one standard source; enough to rebuild it exactly.
struct SourceChoice {
  SourceOrigin origin = SourceOrigin::kProcedural;
  std::size_t bank_index = 0;
  // Seed and path of the stream the procedural flare was synthesized from.
  std::uint64_t flare_seed = 0;
  std::vector<std::string> flare_path;
  AugmentationParams augmentation;
  int side = 0;
};

// Picks a bank entry uniformly (or a procedural flare when the bank is empty
// and `procedural_fallback` is set) and samples its augmentation. The source
// is resized to S x S with S = max(target width, target height).
SourceChoice choose_standard_source(const LightBank& bank,
                                    RandomStream& stream, int target_width,
                                    int target_height,
                                    const AugmentationRanges& ranges,
                                    bool procedural_fallback);

LightSourceImage realize_source(const LightBank& bank,
                                const SourceChoice& choice);

LightSourceImage sample_standard_source(const LightBank& bank,
                                        RandomStream& stream,
                                        const Image& target,
                                        const AugmentationRanges& ranges = {},
                                        bool procedural_fallback = true);

}  // namespace nightsim::lights
