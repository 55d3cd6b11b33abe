#include "nightsim/ing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "nightsim/error.hpp"

namespace nightsim::ing {

namespace {

void check_develop_args(double g_n, double s_n, int bit_depth) {
  if (!(g_n > 0.0 && g_n <= 1.0)) throw DomainError("g_n must be in (0,1]");
  if (!(s_n > 0.0)) throw DomainError("s_n must be positive");
  if (bit_depth < 1 || bit_depth > 32) throw DomainError("bad bit depth");
}

// Q expressed through t = logit(p), stable for large |t|.
double quantile_at_logit(double t, double lambda) {
  if (std::abs(lambda) < 1e-12) return t;
  const double log_p = -std::log1p(std::exp(-t));
  const double log_q = -std::log1p(std::exp(t));
  return (std::expm1(lambda * log_p) - std::expm1(lambda * log_q)) / lambda;
}

}  // namespace

double quantization_factor(int bit_depth) {
  return std::ldexp(1.0, bit_depth) - 1.0;
}

RawImage to_simulated_raw(const Image& img, double g_n, double s_n,
                          int bit_depth) {
  check_develop_args(g_n, s_n, bit_depth);
  const double scale = quantization_factor(bit_depth) / s_n;
  const double exponent = 1.0 / g_n;
  RawImage out(img.width(), img.height(), 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::max(0.0, static_cast<double>(img[i]));
    out[i] = scale * std::pow(v, exponent);
  }
  return out;
}

double sample_gain(RandomStream& stream, const Range& k_range) {
  return sample_log_uniform(stream, k_range.lo, k_range.hi);
}

RawImage shot_noise(const RandomStream& stream, const RawImage& raw, double k) {
  if (!(k > 0.0)) throw DomainError("system gain K must be positive");
  RawImage out(raw.width(), raw.height(), 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) throw DomainError("raw values must be nonnegative");
    if (raw[i] == 0.0) continue;
    CounterRng rng = stream.element(i);
    out[i] = k * static_cast<double>(rng.next_poisson(raw[i] / k));
  }
  return out;
}

double tukey_lambda_quantile(double p, double lambda) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("Tukey-lambda quantile needs 0 < p < 1");
  }
  if (std::abs(lambda) < 1e-12) return std::log(p / (1.0 - p));
  return (std::expm1(lambda * std::log(p)) -
          std::expm1(lambda * std::log1p(-p))) /
         lambda;
}

double tukey_lambda_variance(double lambda) {
  if (!(lambda > -0.5)) {
    throw DomainError("Tukey-lambda variance is infinite for lambda <= -0.5");
  }
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(lambda); it != cache.end()) return it->second;
  }
  // With p = logistic(t), dp = p (1 - p) dt. The integrand is smooth and
  // decays exponentially, so the trapezoid rule converges fast.
  const double decay = 1.0 - 2.0 * std::max(0.0, -lambda);
  const double t_max = std::min(2000.0, 45.0 / decay);
  const double h = 1e-3 * std::max(1.0, t_max / 45.0);
  double sum = 0.0;
  for (double t = 0.0; t <= t_max; t += h) {
    const double q = quantile_at_logit(t, lambda);
    const double w = 1.0 / ((1.0 + std::exp(-t)) * (1.0 + std::exp(t)));
    sum += (t == 0.0 ? 1.0 : 2.0) * q * q * w;  // symmetric in t
  }
  const double var = sum * h;
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(lambda, var);
  return var;
}

double ReadNoise::draw(CounterRng& rng) const {
  if (family == NoiseFamily::kGaussian) return sigma * rng.next_normal();
  const double q = tukey_lambda_quantile(rng.next_open01(), lambda);
  return sigma * q / std::sqrt(tukey_lambda_variance(lambda));
}

ReadNoise sample_read_noise(RandomStream& stream, double k,
                            const CalibrationTable& cal, NoiseFamily family) {
  if (!(k > 0.0)) throw DomainError("system gain K must be positive");
  const std::vector<std::size_t> candidates = cal.indices_for(family);
  if (candidates.empty()) {
    throw ConfigError("no calibration entry for noise family " +
                      to_string(family));
  }
  RandomStream pick = stream.child("entry");
  const std::size_t index = candidates[pick.next_below(candidates.size())];
  const CalibrationEntry& e = cal.entries[index];
  RandomStream scale = stream.child("sigma");
  const double log_sigma =
      e.a * std::log(k) + e.b + e.sigma_hat * scale.next_normal();
  ReadNoise out;
  out.family = family;
  out.sigma = std::exp(log_sigma);
  out.lambda = e.lambda_tl;
  out.entry_index = index;
  out.camera_id = e.camera_id;
  return out;
}

RawImage read_noise_field(const RandomStream& stream, int width, int height,
                          const ReadNoise& noise) {
  RawImage out(width, height, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterRng rng = stream.element(i);
    out[i] = noise.draw(rng);
  }
  return out;
}

Image develop(const RawImage& raw_noisy, double s_n, int bit_depth,
              double g_n) {
  check_develop_args(g_n, s_n, bit_depth);
  const double scale = s_n / quantization_factor(bit_depth);
  Image out(raw_noisy.width(), raw_noisy.height(), 0.f);
  for (std::size_t i = 0; i < raw_noisy.size(); ++i) {
    const double v = std::clamp(scale * raw_noisy[i], 0.0, 1.0);
    out[i] = static_cast<float>(std::pow(v, g_n));
  }
  return out;
}

IngSample sample_ing(RandomStream& stream, const CompensationConfig& cfg) {
  IngSample s;
  RandomStream gain = stream.child("gain");
  s.k = sample_gain(gain, cfg.k_range);
  RandomStream light = stream.child("light_scale");
  s.s_n = sample_uniform(light, cfg.s_n_range.lo, cfg.s_n_range.hi);
  s.bit_depth = cfg.bit_depth;
  s.g_n = cfg.g_n;
  RandomStream read = stream.child("read_noise");
  s.read = sample_read_noise(read, s.k, cfg.calibration, cfg.read_noise_family);
  return s;
}

Image apply_ing(const Image& img, const IngSample& sample,
                const RandomStream& noise_stream) {
  const RawImage raw =
      to_simulated_raw(img, sample.g_n, sample.s_n, sample.bit_depth);
  const RawImage shot = shot_noise(noise_stream.child("shot"), raw, sample.k);
  const RawImage read = read_noise_field(noise_stream.child("read"),
                                         img.width(), img.height(),
                                         sample.read);
  RawImage noisy = raw;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    noisy[i] += (shot[i] - raw[i] + read[i]) / sample.s_n;
  }
  return develop(noisy, sample.s_n, sample.bit_depth, sample.g_n);
}

}  // namespace nightsim::ing
