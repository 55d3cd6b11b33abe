#pragma once

#include <cstddef>
#include <filesystem>

#include "nightsim/raster.hpp"

namespace nightsim::io {

struct DecodeOptions {
  // Skip the 2.2 power that maps encoded PNG values to linear light.
  bool assume_linear = false;
};

struct LoadedImage {
  Image image;
  // Values outside [0,1] that were clamped on load.
  std::size_t clamped = 0;
};

// Four-channel decode, used for light-source files. Alpha is 1 when the file
// has no alpha channel.
struct LoadedRgba {
  Image rgb;
  Plane alpha;
  bool has_alpha = false;
};

struct PngInfo {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int channels = 0;
};

// Reads only the PNG header; throws IoError on anything that is not a PNG.
PngInfo probe_png(const std::filesystem::path& path);

LoadedImage read_png(const std::filesystem::path& path,
                     const DecodeOptions& opts = {});
LoadedRgba read_png_rgba(const std::filesystem::path& path,
                         const DecodeOptions& opts = {});

// Encodes linear values with the 1/2.2 power unless `assume_linear`.
void write_png(const std::filesystem::path& path, const Image& img,
               int bit_depth = 8, bool assume_linear = false);
// RGBA with straight alpha; RGB values above 1 are clipped by the encoder.
void write_png_rgba(const std::filesystem::path& path, const Image& rgb,
                    const Plane& alpha, int bit_depth = 8,
                    bool assume_linear = false);

// Portable float map. Reads either byte order; writes little-endian.
LoadedImage read_pfm_image(const std::filesystem::path& path);
Plane read_pfm_plane(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& img);
void write_pfm(const std::filesystem::path& path, const Plane& plane);

// Chooses the decoder by extension (.png / .pfm).
LoadedImage load_image(const std::filesystem::path& path,
                       const DecodeOptions& opts = {});

// Depth from a single-channel PFM, or from a 16-bit PNG as raw * png_scale.
DepthMap load_depth(const std::filesystem::path& path, double png_scale,
                    DepthUnit unit = DepthUnit::kUnscaled);
// Raw single-channel values (no positivity requirement), e.g. sparse GT.
Plane load_plane(const std::filesystem::path& path, double png_scale);

}  // namespace nightsim::io
