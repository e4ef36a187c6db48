#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <stdexcept>
#include <vector>

namespace lsgt {

/// Counter-based generator (Philox4x32-10). The key is the 64-bit seed and
/// the upper half of the counter is the stream id, so every (seed, stream)
/// pair is an independent, reproducible sequence. Not shareable between
/// threads; give each worker its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Box-Muller, second variate cached).
  double standard_normal();

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Deterministic 64-bit mixer for deriving child seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

double sample_uniform(RngStream& rng, double lo, double hi);
double sample_normal(RngStream& rng, double mean, double variance);
/// Gamma with the given shape and unit scale.
double sample_gamma(RngStream& rng, double shape);
/// Inverse-gamma with shape a and scale b: density ∝ x^{-a-1} exp(-b/x).
double sample_inverse_gamma(RngStream& rng, double shape, double scale);
double sample_beta(RngStream& rng, double a, double b);
double sample_student_t(RngStream& rng, double nu, double location, double scale);
std::size_t sample_categorical(RngStream& rng, std::span<const double> weights);
/// Categorical draw from unnormalised log weights; -inf entries get zero mass.
std::size_t sample_log_categorical(RngStream& rng, std::span<const double> log_weights);

/// Normalised probabilities from log weights (log-sum-exp stabilised).
std::vector<double> normalise_log_weights(std::span<const double> log_weights);

double student_t_log_density(double x, double nu, double location, double scale);
double normal_log_density(double x, double mean, double variance);
double inverse_gamma_log_density(double x, double shape, double scale);

}  // namespace lsgt
