#include "nightsim/light_bank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nightsim/error.hpp"
#include "nightsim/image_io.hpp"

namespace nightsim::lights {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Fraction of the peak luminance at which a derived alpha saturates to 1.
constexpr double kAlphaKnee = 0.05;

double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

Plane alpha_from_luminance(const Image& rgb) {
  Plane alpha(rgb.width(), rgb.height(), 0.f);
  double peak = 0.0;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    peak = std::max(peak, luma(rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]));
  }
  if (peak <= 0.0) return alpha;
  const double knee = kAlphaKnee * peak;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double l = luma(rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]);
    alpha[p] = static_cast<float>(std::clamp(l / knee, 0.0, 1.0));
  }
  return alpha;
}

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    throw RangeError(std::string("augmentation ") + name + " out of range");
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

}  // namespace

double LightSourceImage::total_alpha() const {
  double sum = 0.0;
  for (const float a : alpha.data()) sum += a;
  return sum;
}

std::array<double, 3> LightSourceImage::mean_color() const {
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  double weight = 0.0;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double a = alpha[p];
    if (a <= 0.0) continue;
    for (int c = 0; c < 3; ++c) acc[c] += a * rgb[3 * p + c];
    weight += a;
  }
  if (weight > 0.0) {
    for (double& v : acc) v /= weight;
  }
  return acc;
}

void AugmentationParams::validate() const {
  check_range("rotation", rotation, 0.0, kTwoPi);
  check_range("brightness", brightness, 1.0, 3.0);
  check_range("contrast", contrast, 0.8, 1.2);
  check_range("saturation", saturation, 0.8, 1.2);
  check_range("blur_sigma", blur_sigma, 0.1, 3.0);
}

AugmentationParams sample_augmentation(RandomStream& stream,
                                       const AugmentationRanges& ranges) {
  AugmentationParams p;
  p.rotation = std::fmod(
      sample_uniform(stream, ranges.rotation.lo, ranges.rotation.hi), kTwoPi);
  p.flip_h = stream.next_bernoulli(ranges.flip_probability);
  p.brightness =
      sample_uniform(stream, ranges.brightness.lo, ranges.brightness.hi);
  p.contrast = sample_uniform(stream, ranges.contrast.lo, ranges.contrast.hi);
  p.saturation =
      sample_uniform(stream, ranges.saturation.lo, ranges.saturation.hi);
  p.blur_sigma =
      sample_uniform(stream, ranges.blur_sigma.lo, ranges.blur_sigma.hi);
  return p;
}

LightBank LightBank::load(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw IoError("light bank directory not found: " + directory.string());
  }
  std::vector<std::filesystem::path> candidates;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().starts_with(".")) continue;
    candidates.push_back(entry.path());
  }
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty()) {
    throw EmptyBankError("light bank directory is empty: " +
                         directory.string());
  }
  LightBank bank;
  for (const auto& path : candidates) {
    try {
      io::probe_png(path);
      bank.files_.push_back(path);
    } catch (const Error& e) {
      bank.warnings_.push_back("skipping " + path.filename().string() + ": " +
                               e.what());
    }
  }
  if (bank.files_.empty()) {
    throw EmptyBankError("no decodable light-source images in " +
                         directory.string());
  }
  return bank;
}

LightBank LightBank::from_images(std::vector<LightSourceImage> images) {
  LightBank bank;
  bank.images_ = std::move(images);
  return bank;
}

std::size_t LightBank::size() const { return files_.size() + images_.size(); }

LightSourceImage LightBank::get(std::size_t index) const {
  if (index < images_.size()) return images_[index];
  index -= images_.size();
  if (index >= files_.size()) throw ArgumentError("bank index out of range");
  // Flare captures are additive light on black, stored without gamma.
  io::LoadedRgba loaded =
      io::read_png_rgba(files_[index], io::DecodeOptions{.assume_linear = true});
  LightSourceImage out;
  out.alpha = loaded.has_alpha ? std::move(loaded.alpha)
                               : alpha_from_luminance(loaded.rgb);
  out.rgb = std::move(loaded.rgb);
  out.origin = SourceOrigin::kBankFile;
  return out;
}

LightSourceImage synthesize_flare(RandomStream& stream, int size) {
  if (size < 16) {
    throw SizeError("procedural flare size must be >= 16, got " +
                    std::to_string(size));
  }
  const double s = size;
  const double center = (s - 1.0) / 2.0;
  const double support = 0.45 * s;

  const double core_amp = sample_uniform(stream, 0.8, 1.5);
  const double core_radius = s * sample_uniform(stream, 0.01, 0.04);
  const double halo_amp = sample_uniform(stream, 0.05, 0.2);
  const double halo_radius = s * sample_uniform(stream, 0.08, 0.2);
  std::array<double, 3> tint{};
  for (double& t : tint) t = sample_uniform(stream, 0.7, 1.0);
  const double tint_max = std::max({tint[0], tint[1], tint[2]});
  for (double& t : tint) t /= tint_max;

  struct Streak {
    double nx, ny;  // unit normal of the streak line
    double width, length, amp;
  };
  const int streak_count = 2 + static_cast<int>(stream.next_below(7));
  std::vector<Streak> streaks;
  streaks.reserve(streak_count);
  for (int i = 0; i < streak_count; ++i) {
    const double theta = sample_uniform(stream, 0.0, std::numbers::pi);
    Streak st{};
    st.nx = -std::sin(theta);
    st.ny = std::cos(theta);
    st.width = std::max(0.6, s / 256.0 * sample_uniform(stream, 0.5, 2.0));
    st.length = s * sample_uniform(stream, 0.1, 0.4);
    st.amp = sample_uniform(stream, 0.2, 0.8);
    streaks.push_back(st);
  }

  LightSourceImage out;
  out.origin = SourceOrigin::kProcedural;
  out.rgb = Image(size, size, 0.f);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - center;
      const double dy = y - center;
      const double r = std::hypot(dx, dy);
      if (r >= support) continue;
      const double q = r / support;
      const double window = (1.0 - q * q) * (1.0 - q * q);
      double l = core_amp * std::exp(-r / core_radius) +
                 halo_amp * std::exp(-(r * r) / (halo_radius * halo_radius));
      for (const Streak& st : streaks) {
        const double d = (dx * st.nx + dy * st.ny) / st.width;
        l += st.amp * std::exp(-d * d) * std::exp(-r / st.length);
      }
      l *= window;
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = static_cast<float>(l * tint[c]);
      }
    }
  }
  out.alpha = alpha_from_luminance(out.rgb);
  return out;
}

LightSourceImage rotate(const LightSourceImage& src, double radians) {
  if (radians == 0.0) return src;
  const int w = src.width();
  const int h = src.height();
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double cs = std::cos(radians);
  const double sn = std::sin(radians);
  LightSourceImage out{Image(w, h, 0.f), Plane(w, h, 0.f), src.origin};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse mapping: rotate the output coordinate by -radians.
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = sample_bilinear_zero(src.rgb, sx, sy, c);
      }
      out.alpha.at(x, y) = sample_bilinear_zero(src.alpha, sx, sy, 0);
    }
  }
  return out;
}

LightSourceImage flip_horizontal(const LightSourceImage& src) {
  LightSourceImage out = src;
  const int w = src.width();
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = src.rgb.at(w - 1 - x, y, c);
      }
      out.alpha.at(x, y) = src.alpha.at(w - 1 - x, y);
    }
  }
  return out;
}

Image scale_brightness(const Image& rgb, double factor) {
  Image out = rgb;
  for (float& v : out.data()) v = static_cast<float>(v * factor);
  return out;
}

Image adjust_contrast(const Image& rgb, const Plane& alpha, double factor) {
  if (factor == 1.0) return rgb;
  double weighted = 0.0;
  double weight = 0.0;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double a = alpha[p];
    weighted += a * (rgb[3 * p] + rgb[3 * p + 1] + rgb[3 * p + 2]) / 3.0;
    weight += a;
  }
  if (weight <= 0.0) return rgb;
  const double mean = weighted / weight;
  // Full-strength contrast inside the support, fading out with alpha so the
  // empty surround stays empty.
  Image out = rgb;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double a = alpha[p];
    for (int c = 0; c < 3; ++c) {
      const double x = rgb[3 * p + c];
      const double y = x + a * (factor - 1.0) * (x - mean);
      out[3 * p + c] = static_cast<float>(std::max(0.0, y));
    }
  }
  return out;
}

Image adjust_saturation(const Image& rgb, double factor) {
  if (factor == 1.0) return rgb;
  Image out = rgb;
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double l = luma(rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]);
    for (int c = 0; c < 3; ++c) {
      const double y = l + factor * (rgb[3 * p + c] - l);
      out[3 * p + c] = static_cast<float>(std::max(0.0, y));
    }
  }
  return out;
}

Image gaussian_blur(const Image& rgb, double sigma) {
  if (!(sigma > 0.0)) return rgb;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = rgb.width();
  const int h = rgb.height();
  Image tmp(w, h, 0.f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = x + i;
          if (xx < 0 || xx >= w) continue;
          acc += k[i + radius] * rgb.at(xx, y, c);
        }
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  Image out(w, h, 0.f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = y + i;
          if (yy < 0 || yy >= h) continue;
          acc += k[i + radius] * tmp.at(x, yy, c);
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

LightSourceImage apply_augmentation(const LightSourceImage& src,
                                    const AugmentationParams& p) {
  p.validate();
  LightSourceImage out = rotate(src, p.rotation);
  if (p.flip_h) out = flip_horizontal(out);
  out.rgb = scale_brightness(out.rgb, p.brightness);
  out.rgb = adjust_contrast(out.rgb, out.alpha, p.contrast);
  out.rgb = adjust_saturation(out.rgb, p.saturation);
  out.rgb = gaussian_blur(out.rgb, p.blur_sigma);
  return out;
}

SourceChoice choose_standard_source(const LightBank& bank,
                                    RandomStream& stream, int target_width,
                                    int target_height,
                                    const AugmentationRanges& ranges,
                                    bool procedural_fallback) {
  SourceChoice choice;
  choice.side = std::max(target_width, target_height);
  if (!bank.empty()) {
    RandomStream pick = stream.child("pick");
    choice.origin = SourceOrigin::kBankFile;
    choice.bank_index = pick.next_below(bank.size());
  } else if (procedural_fallback) {
    const RandomStream flare = stream.child("flare");
    choice.origin = SourceOrigin::kProcedural;
    choice.flare_seed = flare.seed();
    choice.flare_path = flare.path();
  } else {
    throw EmptyBankError("light bank is empty and procedural flares are off");
  }
  RandomStream aug = stream.child("augment");
  choice.augmentation = sample_augmentation(aug, ranges);
  return choice;
}

LightSourceImage realize_source(const LightBank& bank,
                                const SourceChoice& choice) {
  LightSourceImage base;
  if (choice.origin == SourceOrigin::kBankFile) {
    const LightSourceImage raw = bank.get(choice.bank_index);
    base.origin = SourceOrigin::kBankFile;
    base.rgb = resize_bilinear(raw.rgb, choice.side, choice.side);
    base.alpha = resize_bilinear(raw.alpha, choice.side, choice.side);
  } else {
    RandomStream flare =
        RandomStream::from_path(choice.flare_seed, choice.flare_path);
    constexpr int kMinFlare = 16;
    base = synthesize_flare(flare, std::max(kMinFlare, choice.side));
    if (choice.side < kMinFlare) {
      base.rgb = resize_bilinear(base.rgb, choice.side, choice.side);
      base.alpha = resize_bilinear(base.alpha, choice.side, choice.side);
    }
  }
  return apply_augmentation(base, choice.augmentation);
}

LightSourceImage sample_standard_source(const LightBank& bank,
                                        RandomStream& stream,
                                        const Image& target,
                                        const AugmentationRanges& ranges,
                                        bool procedural_fallback) {
  const SourceChoice choice =
      choose_standard_source(bank, stream, target.width(), target.height(),
                             ranges, procedural_fallback);
  return realize_source(bank, choice);
}

}  // namespace nightsim::lights
