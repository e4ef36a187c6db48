#include "lsgt/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string_view>

#include <fmt/format.h>

namespace lsgt {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(fmt::format("{} must be finite and positive, got {}", what, v));
  }
}

}  // namespace

std::array<std::uint32_t, 4> RngStream::philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox(ctr, key);
  ++block_;
  used_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double sample_uniform(RngStream& rng, double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument(fmt::format("uniform bounds must satisfy lo < hi, got [{}, {})", lo, hi));
  }
  return lo + (hi - lo) * rng.uniform();
}

double sample_normal(RngStream& rng, double mean, double variance) {
  if (!std::isfinite(mean)) throw std::invalid_argument("normal mean must be finite");
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument(fmt::format("normal variance must be non-negative, got {}", variance));
  }
  return mean + std::sqrt(variance) * rng.standard_normal();
}

double sample_gamma(RngStream& rng, double shape) {
  require_positive(shape, "gamma shape");
  if (shape < 1.0) {
    // Boost to shape + 1 and rescale by U^{1/shape}.
    const double g = sample_gamma(rng, shape + 1.0);
    return g * std::exp(std::log(rng.uniform_open()) / shape);
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = rng.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_inverse_gamma(RngStream& rng, double shape, double scale) {
  require_positive(shape, "inverse-gamma shape");
  require_positive(scale, "inverse-gamma scale");
  double g = sample_gamma(rng, shape);
  // Guard against underflow to zero for tiny shapes.
  if (g < std::numeric_limits<double>::min()) g = std::numeric_limits<double>::min();
  return scale / g;
}

double sample_beta(RngStream& rng, double a, double b) {
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  while (true) {
    const double x = sample_gamma(rng, a);
    const double y = sample_gamma(rng, b);
    const double r = x / (x + y);
    if (r > 0.0 && r < 1.0) return r;
  }
}

double sample_student_t(RngStream& rng, double nu, double location, double scale) {
  require_positive(nu, "degrees of freedom");
  require_positive(scale, "t scale");
  const double omega2 = sample_inverse_gamma(rng, 0.5 * nu, 0.5 * nu);
  return location + scale * std::sqrt(omega2) * rng.standard_normal();
}

std::size_t sample_categorical(RngStream& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("categorical weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical weights must not all be zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::vector<double> normalise_log_weights(std::span<const double> log_weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("log weights must not be NaN or +inf");
    }
    mx = std::max(mx, lw);
  }
  if (!std::isfinite(mx)) throw std::invalid_argument("all log weights are -inf");
  std::vector<double> p(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t sample_log_categorical(RngStream& rng, std::span<const double> log_weights) {
  const auto p = normalise_log_weights(log_weights);
  return sample_categorical(rng, p);
}

double student_t_log_density(double x, double nu, double location, double scale) {
  require_positive(nu, "degrees of freedom");
  require_positive(scale, "t scale");
  const double z = (x - location) / scale;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - std::log(scale) -
         0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

double inverse_gamma_log_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

}  // namespace lsgt
