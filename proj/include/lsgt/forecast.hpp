#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lsgt/model.hpp"
#include "lsgt/random.hpp"
#include "lsgt/sampler.hpp"

namespace lsgt {

inline const std::vector<double> kDefaultQuantiles{0.01, 0.05, 0.5, 0.95, 0.99};

struct ForecastConfig {
  std::size_t horizon = 1;
  std::size_t paths_per_draw = 2;
  std::vector<double> quantile_levels = kDefaultQuantiles;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t retry_cap = 100;
};

struct ForecastResult {
  std::vector<double> point;  // per-horizon median
  std::vector<double> mean;
  std::vector<double> levels;
  std::vector<std::vector<double>> quantiles;  // quantiles[level index][horizon]
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::size_t floor_events = 0;

  /// Per-horizon values at `level`; throws std::out_of_range if it was not computed.
  const std::vector<double>& at(double level) const;
};

/// Posterior-predictive simulation. Draw d uses RngStream(seed, d), so the
/// result does not depend on `workers`.
ForecastResult simulate_paths(const PosteriorSamples& samples, std::span<const double> y,
                              const ForecastConfig& cfg);

/// Type-7 empirical quantile of `sorted` (ascending).
double empirical_quantile(std::span<const double> sorted, double p);

/// Continues one simulated path for `horizon` steps from the end of `paths`.
/// Non-positive draws are retried up to `retry_cap` times and then floored.
std::vector<double> simulate_forward(RngStream& rng, const ParameterDraw& theta, const PriorConfig& prior,
                                     const StatePaths& paths, std::size_t horizon, std::size_t retry_cap,
                                     std::size_t& floor_events);

/// Generates a length-T series from the model with y[0] = y0. Returns nullopt
/// when a generated value is non-positive or non-finite.
std::optional<std::vector<double>> simulate_series(RngStream& rng, const ParameterDraw& theta,
                                                   const PriorConfig& prior, std::size_t T, double y0);

}  // namespace lsgt
