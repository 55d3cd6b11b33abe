#include "nightsim/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nightsim/error.hpp"

namespace nightsim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kElementSalt = 0xD1B54A32D192ED03ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_key(std::uint64_t parent, std::string_view label) {
  return mix64(parent ^ mix64(fnv1a(label) + kGolden));
}

// Stirling series for log Gamma(x), x > 0.
double log_gamma(double x) {
  static constexpr double kCoef[10] = {
      8.333333333333333e-02, -2.777777777777778e-03, 7.936507936507937e-04,
      -5.952380952380952e-04, 8.417508417508418e-04, -1.917526917526918e-03,
      6.410256410256410e-03, -2.955065359477124e-02, 1.796443723688307e-01,
      -1.39243221690590e+00};
  if (x == 1.0 || x == 2.0) return 0.0;
  const int n = x < 7.0 ? static_cast<int>(7.0 - x) : 0;
  double x0 = x + n;
  const double x2 = (1.0 / x0) * (1.0 / x0);
  double series = kCoef[9];
  for (int k = 8; k >= 0; --k) {
    series = series * x2 + kCoef[k];
  }
  double gl = series / x0 + 0.5 * std::log(2.0 * std::numbers::pi) +
              (x0 - 0.5) * std::log(x0) - x0;
  for (int k = 1; k <= n; ++k) {
    gl -= std::log(x0 - 1.0);
    x0 -= 1.0;
  }
  return gl;
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix64(key_ ^ mix64(counter_ * kGolden));
}

double CounterRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_open01() {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double CounterRng::next_normal() {
  const double u1 = next_open01();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::next_poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    double prod = next_double();
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= next_double();
      ++k;
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = next_open01() - 0.5;
    const double v = next_open01();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kf * loglam - log_gamma(kf + 1.0)) {
      return static_cast<std::uint64_t>(kf);
    }
  }
}

RandomStream::RandomStream(std::uint64_t seed)
    : RandomStream(seed, {}, mix64(seed + kGolden)) {}

RandomStream::RandomStream(std::uint64_t seed, std::vector<std::string> path,
                           std::uint64_t key)
    : seed_(seed), path_(std::move(path)), rng_(key) {}

RandomStream RandomStream::from_path(std::uint64_t seed,
                                     std::span<const std::string> path) {
  RandomStream s(seed);
  for (const auto& label : path) s = s.child(label);
  return s;
}

RandomStream RandomStream::child(std::string_view label) const {
  std::vector<std::string> path = path_;
  path.emplace_back(label);
  return RandomStream(seed_, std::move(path), derive_key(rng_.key(), label));
}

RandomStream RandomStream::child(std::uint64_t index) const {
  return child(std::to_string(index));
}

CounterRng RandomStream::element(std::uint64_t index) const {
  return CounterRng(mix64(rng_.key() ^ mix64(index * kGolden + kElementSalt)));
}

std::string RandomStream::path_string() const {
  std::string out;
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (i) out += '/';
    out += path_[i];
  }
  return out;
}

std::uint64_t RandomStream::next_below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("next_below requires n > 0");
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

double sample_uniform(RandomStream& stream, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw RangeError("uniform bounds must be finite");
  }
  if (lo > hi) {
    throw RangeError("uniform range has lo > hi");
  }
  const double u = stream.next_double();
  if (lo == hi) return lo;
  return std::min(hi, lo + (hi - lo) * u);
}

double sample_log_uniform(RandomStream& stream, double lo, double hi) {
  if (!(lo > 0.0)) throw DomainError("log-uniform requires lo > 0");
  if (lo > hi) throw RangeError("log-uniform range has lo > hi");
  const double u = stream.next_double();
  if (lo == hi) return lo;
  const double v = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * u);
  return std::clamp(v, lo, hi);
}

}  // namespace nightsim
