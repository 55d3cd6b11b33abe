#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nightsim {

// Counter-based generator: the n-th output is a pure function of (key, n).
// All distributions are implemented here rather than taken from <random> so
// that draw sequences do not depend on the standard library vendor.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double next_double();
  // Uniform on the open interval (0, 1).
  double next_open01();
  // Standard normal via Box-Muller; consumes two outputs.
  double next_normal();
  // Poisson variate; inversion below mean 10, PTRS rejection above.
  std::uint64_t next_poisson(double mean);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Named, splittable stream. A child's key is derived from the parent key and
// the label only, so sibling streams never share state and the order in which
// children are created is irrelevant.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  static RandomStream from_path(std::uint64_t seed,
                                std::span<const std::string> path);

  RandomStream child(std::string_view label) const;
  RandomStream child(std::uint64_t index) const;

  // Independent per-element generator, e.g. one per pixel. Does not touch
  // this stream's counter.
  CounterRng element(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& path() const { return path_; }
  // "label/label/..." or "" at the root.
  std::string path_string() const;

  std::uint64_t next_u64() { return rng_.next_u64(); }
  double next_double() { return rng_.next_double(); }
  double next_open01() { return rng_.next_open01(); }
  double next_normal() { return rng_.next_normal(); }
  std::uint64_t next_poisson(double mean) { return rng_.next_poisson(mean); }
  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);
  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  RandomStream(std::uint64_t seed, std::vector<std::string> path,
               std::uint64_t key);

  std::uint64_t seed_;
  std::vector<std::string> path_;
  CounterRng rng_;
};

// x ~ U(lo, hi). Throws RangeError when lo > hi or either bound is not finite.
double sample_uniform(RandomStream& stream, double lo, double hi);
// log x ~ U(log lo, log hi). Throws DomainError when lo <= 0.
double sample_log_uniform(RandomStream& stream, double lo, double hi);

// SplitMix64 finalizer, exposed for tests.
std::uint64_t mix64(std::uint64_t z);

}  // namespace nightsim
