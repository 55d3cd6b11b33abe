#pragma once

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace nightsim {

// Closed interval with 0 < lo <= hi.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

enum class NoiseFamily { kGaussian, kTukeyLambda };

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

// One calibrated sensor: log(sigma_read) | log K ~ N(a log K + b, sigma_hat).
struct CalibrationEntry {
  std::string camera_id;
  NoiseFamily family = NoiseFamily::kGaussian;
  double a = 0.0;
  double b = 0.0;
  double sigma_hat = 0.0;
  double lambda_tl = 0.14;  // shape, used by the Tukey-lambda family only

  friend bool operator==(const CalibrationEntry&,
                         const CalibrationEntry&) = default;
};

struct CalibrationTable {
  std::vector<CalibrationEntry> entries;

  // Indices into `entries` with the given family.
  std::vector<std::size_t> indices_for(NoiseFamily family) const;
  // Throws ConfigError when sigma_hat < 0 or a parameter is not finite.
  void validate() const;

  // Example table shipped with the library. The numbers are synthetic and do
  // not describe any real sensor.
  static CalibrationTable synthetic_default();
  static CalibrationTable load(const std::filesystem::path& path);

  friend bool operator==(const CalibrationTable&,
                         const CalibrationTable&) = default;
};

// Ranges and constants for light-source augmentation.
struct AugmentationRanges {
  Range rotation{0.0, 6.283185307179586};
  double flip_probability = 0.5;
  Range brightness{1.0, 3.0};
  Range contrast{0.8, 1.2};
  Range saturation{0.8, 1.2};
  Range blur_sigma{0.1, 3.0};

  friend bool operator==(const AugmentationRanges&,
                         const AugmentationRanges&) = default;
};

// Every sampling range and constant used by the compensation pipeline.
struct CompensationConfig {
  Range s_d_range{0.4, 1.0};
  Range f_range{0.5, 2.0};
  Range s_f_range{0.5, 2.0};
  Range g_f_range{1.8, 2.2};
  Range k_range{0.1, 1.0};
  Range s_n_range{100.0, 300.0};
  double g_n = 1.0 / 2.2;
  int bit_depth = 10;
  double light_depth_cap_m = 25.0;
  double light_depth_min_m = 0.5;
  double bpg_rate = 0.5;
  double ing_rate = 0.5;
  double camera_height_m = 1.5;
  double k_d = 2.0;
  double k_s = 5.0;
  double g_r = 8.0;
  // Use s = H_c / H_c' instead of s = H_c' / H_c.
  bool invert_scale = false;
  std::size_t min_ground_pixels = 50;
  double ground_cone_deg = 10.0;
  bool rerender = true;
  NoiseFamily read_noise_family = NoiseFamily::kTukeyLambda;
  AugmentationRanges augmentation;
  CalibrationTable calibration = CalibrationTable::synthetic_default();

  // Throws ConfigError naming the first offending field.
  void validate() const;

  friend bool operator==(const CompensationConfig&,
                         const CompensationConfig&) = default;
};

void to_json(nlohmann::json& j, const Range& r);
void from_json(const nlohmann::json& j, Range& r);
void to_json(nlohmann::json& j, const CalibrationEntry& e);
void from_json(const nlohmann::json& j, CalibrationEntry& e);
void to_json(nlohmann::json& j, const CalibrationTable& t);
void from_json(const nlohmann::json& j, CalibrationTable& t);
void to_json(nlohmann::json& j, const AugmentationRanges& a);
void from_json(const nlohmann::json& j, AugmentationRanges& a);
void to_json(nlohmann::json& j, const CompensationConfig& c);
// Missing keys keep their defaults, so partial config files are accepted.
void from_json(const nlohmann::json& j, CompensationConfig& c);

CompensationConfig load_config(const std::filesystem::path& path);

}  // namespace nightsim
