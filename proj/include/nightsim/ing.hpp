#pragma once

#include <cstddef>
#include <string>

#include "nightsim/config.hpp"
#include "nightsim/random.hpp"
#include "nightsim/raster.hpp"

// Imaging noise: dark raw simulation, shot + read noise, re-development.
namespace nightsim::ing {

// 2^bit_depth - 1
double quantization_factor(int bit_depth);

// R = s_bit * img^(1/g_n) / s_n
RawImage to_simulated_raw(const Image& img, double g_n, double s_n,
                          int bit_depth);

// log K ~ U(log K_min, log K_max)
double sample_gain(RandomStream& stream, const Range& k_range);

// K * Poisson(raw / K) per element, i.e. raw + K * N_p. Element i draws from
// stream.element(i), so the result does not depend on iteration order.
RawImage shot_noise(const RandomStream& stream, const RawImage& raw, double k);

// Q(p; l) = (p^l - (1-p)^l) / l, and log(p / (1-p)) at l = 0.
// Throws DomainError unless 0 < p < 1.
double tukey_lambda_quantile(double p, double lambda);

// Variance of the standard Tukey-lambda law, integral of Q(p)^2 over (0,1),
// evaluated by quadrature. Finite for lambda > -0.5 only.
double tukey_lambda_variance(double lambda);

struct ReadNoise {
  NoiseFamily family = NoiseFamily::kGaussian;
  double sigma = 0.0;   // standard deviation of a single draw
  double lambda = 0.14; // Tukey-lambda shape
  std::size_t entry_index = 0;
  std::string camera_id;

  // Zero-mean draw with standard deviation sigma.
  double draw(CounterRng& rng) const;
};

// Picks a calibration entry of the family uniformly, then
// log sigma ~ N(a log K + b, sigma_hat). Throws ConfigError when the table has
// no entry for the family.
ReadNoise sample_read_noise(RandomStream& stream, double k,
                            const CalibrationTable& cal, NoiseFamily family);

// Read-noise field, one i.i.d. draw per raster element.
RawImage read_noise_field(const RandomStream& stream, int width, int height,
                          const ReadNoise& noise);

// I = clamp01(s_n * raw_noisy / s_bit)^g_n. raw_noisy is the simulated raw
// with the noise terms already divided by s_n, so s_n * raw_noisy is
// s_n R + K N_p + N_read.
Image develop(const RawImage& raw_noisy, double s_n, int bit_depth,
              double g_n);

struct IngSample {
  double k = 0.1;
  double s_n = 100.0;
  int bit_depth = 10;
  double g_n = 1.0 / 2.2;
  ReadNoise read;
};

IngSample sample_ing(RandomStream& stream, const CompensationConfig& cfg);

// Full chain for one image. Per-pixel noise draws come from
// noise_stream.child("shot") and noise_stream.child("read").
Image apply_ing(const Image& img, const IngSample& sample,
                const RandomStream& noise_stream);

}  // namespace nightsim::ing
