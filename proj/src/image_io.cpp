#include "nightsim/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace nightsim::io {

namespace {

constexpr double kDisplayGamma = 2.2;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// Decoded samples before any colour interpretation.
struct PngSamples {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1..4 after expansion
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
  std::vector<png_byte> bytes;
};

void silent_warning(png_structp, png_const_charp) {}

// libpng reports failures through longjmp. Everything written after the
// setjmp lives behind `out`, whose address is fixed before it.
bool decode_png(std::FILE* fp, bool header_only, PngSamples* out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->channels = png_get_channels(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  if (header_only) {
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
  }

  const int passes = png_set_interlace_handling(png);
  const std::size_t row_values =
      static_cast<std::size_t>(out->width) * out->channels;
  out->samples.assign(row_values * out->height, 0);
  // Interlaced images need the whole raster in libpng's layout for every
  // pass, so decode into a byte image first.
  std::vector<png_byte>& bytes = out->bytes;
  bytes.assign(png_get_rowbytes(png, info) * out->height, 0);
  for (int pass = 0; pass < passes; ++pass) {
    for (int y = 0; y < out->height; ++y) {
      png_read_row(png, bytes.data() + png_get_rowbytes(png, info) * y,
                   nullptr);
    }
  }
  png_read_end(png, nullptr);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  for (int y = 0; y < out->height; ++y) {
    const png_byte* src = bytes.data() + rowbytes * y;
    std::uint16_t* dst = out->samples.data() + row_values * y;
    for (std::size_t i = 0; i < row_values; ++i) {
      dst[i] = out->bit_depth == 16
                   ? static_cast<std::uint16_t>((src[2 * i] << 8) |
                                                src[2 * i + 1])
                   : src[i];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

PngSamples read_samples(const std::filesystem::path& path, bool header_only) {
  FilePtr fp = open_file(path, "rb");
  png_byte sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  std::rewind(fp.get());
  auto out = std::make_unique<PngSamples>();
  if (!decode_png(fp.get(), header_only, out.get())) {
    throw IoError(path.string() + ": corrupt or unsupported PNG");
  }
  return std::move(*out);
}

double decode_value(std::uint16_t v, int bit_depth, bool assume_linear) {
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  const double x = v / maxv;
  return assume_linear ? x : std::pow(x, kDisplayGamma);
}

bool encode_png(std::FILE* fp, int width, int height, int channels,
                int bit_depth, const std::vector<png_byte>* bytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  const int color_type = channels == 4   ? PNG_COLOR_TYPE_RGBA
                         : channels == 3 ? PNG_COLOR_TYPE_RGB
                                         : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes =
      static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, bytes->data() + rowbytes * y);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

// The first `color_channels` of every pixel are gamma encoded unless
// `assume_linear`; any remaining channel (alpha) is always stored linearly.
void write_samples(const std::filesystem::path& path, int width, int height,
                   int channels, int color_channels, int bit_depth,
                   const std::vector<double>& values, bool assume_linear) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw ArgumentError("PNG bit depth must be 8 or 16");
  }
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<png_byte> bytes(values.size() * (bit_depth / 8));
  for (std::size_t i = 0; i < values.size(); ++i) {
    double x = std::clamp(values[i], 0.0, 1.0);
    const bool is_color = static_cast<int>(i % channels) < color_channels;
    if (!assume_linear && is_color) x = std::pow(x, 1.0 / kDisplayGamma);
    const auto q = static_cast<std::uint16_t>(std::lround(x * maxv));
    if (bit_depth == 16) {
      bytes[2 * i] = static_cast<png_byte>(q >> 8);
      bytes[2 * i + 1] = static_cast<png_byte>(q & 0xFF);
    } else {
      bytes[i] = static_cast<png_byte>(q);
    }
  }
  FilePtr fp = open_file(path, "wb");
  if (!encode_png(fp.get(), width, height, channels, bit_depth, &bytes)) {
    throw IoError("failed to encode " + path.string());
  }
}

struct PfmData {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> values;  // top row first
};

PfmData read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  PfmData out;
  if (magic == "PF") {
    out.channels = 3;
  } else if (magic == "Pf") {
    out.channels = 1;
  } else {
    throw IoError(path.string() + " is not a PFM file");
  }
  double scale = 0.0;
  in >> out.width >> out.height >> scale;
  if (!in || out.width < 1 || out.height < 1 || scale == 0.0) {
    throw IoError(path.string() + ": malformed PFM header");
  }
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  const std::size_t n =
      static_cast<std::size_t>(out.width) * out.height * out.channels;
  std::vector<std::uint32_t> words(n);
  in.read(reinterpret_cast<char*>(words.data()),
          static_cast<std::streamsize>(n * 4));
  if (static_cast<std::size_t>(in.gcount()) != n * 4) {
    throw IoError(path.string() + ": truncated PFM raster");
  }
  const bool host_little = std::endian::native == std::endian::little;
  out.values.resize(n);
  const std::size_t row = static_cast<std::size_t>(out.width) * out.channels;
  for (int y = 0; y < out.height; ++y) {
    // PFM stores the bottom row first.
    const std::size_t src_row = static_cast<std::size_t>(out.height - 1 - y);
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t w = words[src_row * row + i];
      if (little != host_little) w = __builtin_bswap32(w);
      out.values[y * row + i] = std::bit_cast<float>(w);
    }
  }
  return out;
}

void write_pfm_raw(const std::filesystem::path& path, int width, int height,
                   int channels, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << (channels == 3 ? "PF" : "Pf") << '\n'
      << width << ' ' << height << '\n'
      << "-1.0\n";
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<std::uint32_t> words(row);
  for (int y = height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t w = std::bit_cast<std::uint32_t>(values[y * row + i]);
      if (!host_little) w = __builtin_bswap32(w);
      words[i] = w;
    }
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(row * 4));
  }
  if (!out) throw IoError("failed to write " + path.string());
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

PngInfo probe_png(const std::filesystem::path& path) {
  const PngSamples s = read_samples(path, true);
  return {s.width, s.height, s.bit_depth, s.channels};
}

LoadedImage read_png(const std::filesystem::path& path,
                     const DecodeOptions& opts) {
  const LoadedRgba rgba = read_png_rgba(path, opts);
  return {rgba.rgb, 0};
}

LoadedRgba read_png_rgba(const std::filesystem::path& path,
                         const DecodeOptions& opts) {
  const PngSamples s = read_samples(path, false);
  Image rgb(s.width, s.height);
  Plane alpha(s.width, s.height, 1.f);
  const bool has_alpha = s.channels == 2 || s.channels == 4;
  const int color_channels = has_alpha ? s.channels - 1 : s.channels;
  const double maxv = s.bit_depth == 16 ? 65535.0 : 255.0;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const std::uint16_t* px = s.samples.data() + p * s.channels;
    for (int c = 0; c < 3; ++c) {
      const std::uint16_t v = color_channels == 1 ? px[0] : px[c];
      rgb[p * 3 + c] =
          static_cast<float>(decode_value(v, s.bit_depth, opts.assume_linear));
    }
    if (has_alpha) alpha[p] = static_cast<float>(px[s.channels - 1] / maxv);
  }
  return {std::move(rgb), std::move(alpha), has_alpha};
}

void write_png(const std::filesystem::path& path, const Image& img,
               int bit_depth, bool assume_linear) {
  std::vector<double> values(img.data().begin(), img.data().end());
  write_samples(path, img.width(), img.height(), 3, 3, bit_depth, values,
                assume_linear);
}

void write_png_rgba(const std::filesystem::path& path, const Image& rgb,
                    const Plane& alpha, int bit_depth, bool assume_linear) {
  if (!rgb.same_shape(alpha)) {
    throw DimensionMismatchError("rgb and alpha shapes differ");
  }
  std::vector<double> values(rgb.pixel_count() * 4);
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) values[p * 4 + c] = rgb[p * 3 + c];
    values[p * 4 + 3] = alpha[p];
  }
  write_samples(path, rgb.width(), rgb.height(), 4, 3, bit_depth, values,
                assume_linear);
}

LoadedImage read_pfm_image(const std::filesystem::path& path) {
  PfmData d = read_pfm(path);
  if (d.channels != 3) {
    throw IoError(path.string() + ": expected a 3-channel PFM");
  }
  Image img(d.width, d.height, std::move(d.values));
  for (const float v : img.data()) {
    if (!std::isfinite(v)) {
      throw NonFiniteError(path.string() + " contains non-finite values");
    }
  }
  const std::size_t clamped = clamp_values(img, 0.f, 1.f);
  return {std::move(img), clamped};
}

Plane read_pfm_plane(const std::filesystem::path& path) {
  PfmData d = read_pfm(path);
  if (d.channels != 1) {
    throw IoError(path.string() + ": expected a 1-channel PFM");
  }
  return Plane(d.width, d.height, std::move(d.values));
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  write_pfm_raw(path, img.width(), img.height(), 3, img.data());
}

void write_pfm(const std::filesystem::path& path, const Plane& plane) {
  write_pfm_raw(path, plane.width(), plane.height(), 1, plane.data());
}

LoadedImage load_image(const std::filesystem::path& path,
                       const DecodeOptions& opts) {
  const std::string ext = lower_extension(path);
  if (ext == ".pfm") return read_pfm_image(path);
  if (ext == ".png") return read_png(path, opts);
  throw IoError("unsupported image format: " + path.string());
}

Plane load_plane(const std::filesystem::path& path, double png_scale) {
  const std::string ext = lower_extension(path);
  if (ext == ".pfm") return read_pfm_plane(path);
  if (ext != ".png") throw IoError("unsupported depth format: " + path.string());
  const PngSamples s = read_samples(path, false);
  if (s.channels != 1) {
    throw IoError(path.string() + ": depth PNG must be single-channel");
  }
  Plane out(s.width, s.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(s.samples[i] * png_scale);
  }
  return out;
}

DepthMap load_depth(const std::filesystem::path& path, double png_scale,
                    DepthUnit unit) {
  Plane p = load_plane(path, png_scale);
  std::vector<float> data(p.data().begin(), p.data().end());
  return DepthMap(p.width(), p.height(), std::move(data), unit);
}

}  // namespace nightsim::io
