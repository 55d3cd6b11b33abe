#include "nightsim/config.hpp"

#include <cmath>
#include <fstream>

#include "nightsim/error.hpp"

namespace nightsim {

using nlohmann::json;

std::string to_string(NoiseFamily family) {
  return family == NoiseFamily::kGaussian ? "gaussian" : "tukey_lambda";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian" || name == "Gaussian") return NoiseFamily::kGaussian;
  if (name == "tukey_lambda" || name == "tukey" || name == "TukeyLambda") {
    return NoiseFamily::kTukeyLambda;
  }
  throw ConfigError("unknown noise family '" + name + "'");
}

std::vector<std::size_t> CalibrationTable::indices_for(
    NoiseFamily family) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].family == family) out.push_back(i);
  }
  return out;
}

void CalibrationTable::validate() const {
  for (const auto& e : entries) {
    if (!std::isfinite(e.a) || !std::isfinite(e.b) ||
        !std::isfinite(e.sigma_hat) || !std::isfinite(e.lambda_tl)) {
      throw ConfigError("calibration '" + e.camera_id + "' is not finite");
    }
    if (e.sigma_hat < 0.0) {
      throw ConfigError("calibration '" + e.camera_id + "' has sigma_hat < 0");
    }
    if (e.family == NoiseFamily::kTukeyLambda && !(e.lambda_tl > -0.5)) {
      throw ConfigError("calibration '" + e.camera_id +
                        "' needs lambda_tl > -0.5 for a finite variance");
    }
  }
}

CalibrationTable CalibrationTable::synthetic_default() {
  CalibrationTable t;
  t.entries = {
      {"synthetic-gauss-a", NoiseFamily::kGaussian, 0.90, 0.40, 0.15, 0.14},
      {"synthetic-gauss-b", NoiseFamily::kGaussian, 1.10, 0.20, 0.10, 0.14},
      {"synthetic-tl-a", NoiseFamily::kTukeyLambda, 0.85, 0.30, 0.12, 0.14},
      {"synthetic-tl-b", NoiseFamily::kTukeyLambda, 0.95, 0.50, 0.12, 0.14},
  };
  return t;
}

CalibrationTable CalibrationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file " + path.string());
  CalibrationTable t;
  try {
    t = json::parse(in).get<CalibrationTable>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

void to_json(json& j, const Range& r) { j = json::array({r.lo, r.hi}); }

void from_json(const json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError("range must be a two-element array");
  }
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

void to_json(json& j, const CalibrationEntry& e) {
  j = json{{"camera_id", e.camera_id},
           {"family", to_string(e.family)},
           {"a", e.a},
           {"b", e.b},
           {"sigma_hat", e.sigma_hat}};
  if (e.family == NoiseFamily::kTukeyLambda) j["lambda_tl"] = e.lambda_tl;
}

void from_json(const json& j, CalibrationEntry& e) {
  e.camera_id = j.value("camera_id", std::string{});
  e.family = noise_family_from_string(j.at("family").get<std::string>());
  e.a = j.at("a").get<double>();
  e.b = j.at("b").get<double>();
  e.sigma_hat = j.at("sigma_hat").get<double>();
  e.lambda_tl = j.value("lambda_tl", 0.14);
}

void to_json(json& j, const CalibrationTable& t) {
  j = json{{"entries", t.entries}};
}

void from_json(const json& j, CalibrationTable& t) {
  t.entries = j.at("entries").get<std::vector<CalibrationEntry>>();
}

void to_json(json& j, const AugmentationRanges& a) {
  j = json{{"rotation", a.rotation},
           {"flip_probability", a.flip_probability},
           {"brightness", a.brightness},
           {"contrast", a.contrast},
           {"saturation", a.saturation},
           {"blur_sigma", a.blur_sigma}};
}

void from_json(const json& j, AugmentationRanges& a) {
  if (j.contains("rotation")) a.rotation = j["rotation"].get<Range>();
  a.flip_probability = j.value("flip_probability", a.flip_probability);
  if (j.contains("brightness")) a.brightness = j["brightness"].get<Range>();
  if (j.contains("contrast")) a.contrast = j["contrast"].get<Range>();
  if (j.contains("saturation")) a.saturation = j["saturation"].get<Range>();
  if (j.contains("blur_sigma")) a.blur_sigma = j["blur_sigma"].get<Range>();
}

void to_json(json& j, const CompensationConfig& c) {
  j = json{{"s_d_range", c.s_d_range},
           {"F_range", c.f_range},
           {"s_F_range", c.s_f_range},
           {"g_f_range", c.g_f_range},
           {"K_range", c.k_range},
           {"s_n_range", c.s_n_range},
           {"g_n", c.g_n},
           {"bit_depth", c.bit_depth},
           {"light_depth_cap_m", c.light_depth_cap_m},
           {"light_depth_min_m", c.light_depth_min_m},
           {"bpg_rate", c.bpg_rate},
           {"ing_rate", c.ing_rate},
           {"camera_height_m", c.camera_height_m},
           {"k_d", c.k_d},
           {"k_s", c.k_s},
           {"g_r", c.g_r},
           {"invert_scale", c.invert_scale},
           {"min_ground_pixels", c.min_ground_pixels},
           {"ground_cone_deg", c.ground_cone_deg},
           {"rerender", c.rerender},
           {"read_noise_family", to_string(c.read_noise_family)},
           {"augmentation", c.augmentation},
           {"calibration", c.calibration}};
}

void from_json(const json& j, CompensationConfig& c) {
  auto range = [&](const char* key, Range& r) {
    if (j.contains(key)) r = j[key].get<Range>();
  };
  range("s_d_range", c.s_d_range);
  range("F_range", c.f_range);
  range("s_F_range", c.s_f_range);
  range("g_f_range", c.g_f_range);
  range("K_range", c.k_range);
  range("s_n_range", c.s_n_range);
  c.g_n = j.value("g_n", c.g_n);
  c.bit_depth = j.value("bit_depth", c.bit_depth);
  c.light_depth_cap_m = j.value("light_depth_cap_m", c.light_depth_cap_m);
  c.light_depth_min_m = j.value("light_depth_min_m", c.light_depth_min_m);
  c.bpg_rate = j.value("bpg_rate", c.bpg_rate);
  c.ing_rate = j.value("ing_rate", c.ing_rate);
  c.camera_height_m = j.value("camera_height_m", c.camera_height_m);
  c.k_d = j.value("k_d", c.k_d);
  c.k_s = j.value("k_s", c.k_s);
  c.g_r = j.value("g_r", c.g_r);
  c.invert_scale = j.value("invert_scale", c.invert_scale);
  c.min_ground_pixels = j.value("min_ground_pixels", c.min_ground_pixels);
  c.ground_cone_deg = j.value("ground_cone_deg", c.ground_cone_deg);
  c.rerender = j.value("rerender", c.rerender);
  if (j.contains("read_noise_family")) {
    c.read_noise_family =
        noise_family_from_string(j["read_noise_family"].get<std::string>());
  }
  if (j.contains("augmentation")) {
    from_json(j["augmentation"], c.augmentation);
  }
  if (j.contains("calibration")) {
    c.calibration = j["calibration"].get<CalibrationTable>();
  }
}

void CompensationConfig::validate() const {
  auto check_range = [](const char* name, const Range& r) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo > 0.0) ||
        r.lo > r.hi) {
      throw ConfigError(std::string(name) + " must satisfy 0 < lo <= hi");
    }
  };
  check_range("s_d_range", s_d_range);
  check_range("F_range", f_range);
  check_range("s_F_range", s_f_range);
  check_range("g_f_range", g_f_range);
  check_range("K_range", k_range);
  check_range("s_n_range", s_n_range);
  check_range("augmentation.brightness", augmentation.brightness);
  check_range("augmentation.contrast", augmentation.contrast);
  check_range("augmentation.saturation", augmentation.saturation);
  check_range("augmentation.blur_sigma", augmentation.blur_sigma);
  if (augmentation.rotation.lo < 0.0 ||
      augmentation.rotation.lo > augmentation.rotation.hi) {
    throw ConfigError("augmentation.rotation must satisfy 0 <= lo <= hi");
  }
  if (!(augmentation.flip_probability >= 0.0 &&
        augmentation.flip_probability <= 1.0)) {
    throw ConfigError("augmentation.flip_probability must be in [0,1]");
  }
  if (!(bpg_rate >= 0.0 && bpg_rate <= 1.0)) {
    throw ConfigError("bpg_rate must be in [0,1]");
  }
  if (!(ing_rate >= 0.0 && ing_rate <= 1.0)) {
    throw ConfigError("ing_rate must be in [0,1]");
  }
  if (!(g_n > 0.0 && g_n <= 1.0)) throw ConfigError("g_n must be in (0,1]");
  if (bit_depth < 8 || bit_depth > 16) {
    throw ConfigError("bit_depth must be in [8,16]");
  }
  if (!(light_depth_cap_m > 0.0)) {
    throw ConfigError("light_depth_cap_m must be positive");
  }
  if (!(light_depth_min_m > 0.0) || light_depth_min_m > light_depth_cap_m) {
    throw ConfigError("light_depth_min_m must be in (0, light_depth_cap_m]");
  }
  if (!(camera_height_m > 0.0)) {
    throw ConfigError("camera_height_m must be positive");
  }
  if (!(k_d >= 0.0) || !(k_s >= 0.0)) {
    throw ConfigError("k_d and k_s must be nonnegative");
  }
  if (!(g_r > 0.0)) throw ConfigError("g_r must be positive");
  if (!(ground_cone_deg > 0.0 && ground_cone_deg < 90.0)) {
    throw ConfigError("ground_cone_deg must be in (0, 90)");
  }
  calibration.validate();
  if (calibration.indices_for(read_noise_family).empty()) {
    throw ConfigError("calibration table has no entry for family " +
                      to_string(read_noise_family));
  }
}

CompensationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  CompensationConfig c;
  try {
    from_json(json::parse(in), c);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace nightsim
