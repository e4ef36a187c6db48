#include "lsgt/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace lsgt {

namespace {

struct State {
  double level;
  double trend;
  std::vector<double> log_season;  // indexed by absolute time
  std::size_t t;                   // time of the current level/trend
};

double lambda_of(const ParameterDraw& theta, const PriorConfig& prior) {
  return prior.seasonal() ? 0.0 : theta.lambda;
}

// One-step forecast and variance for time s.t + 1.
std::pair<double, double> one_step(const State& s, const ParameterDraw& theta, const PriorConfig& prior) {
  const double lc = std::max(s.level, kLevelFloor);
  const double yhat = (s.level + theta.gamma * std::pow(lc, theta.rho) + lambda_of(theta, prior) * s.trend) *
                      std::exp(s.log_season[s.t + 1]);
  return {yhat, conditional_variance(lc, theta, prior)};
}

void advance(State& s, double y, const ParameterDraw& theta, const PriorConfig& prior) {
  const std::size_t next = s.t + 1;
  const double l = theta.alpha * y * std::exp(-s.log_season[next]) + (1.0 - theta.alpha) * s.level;
  s.trend = theta.beta * (l - s.level) + (1.0 - theta.beta) * s.trend;
  s.level = l;
  if (prior.seasonal()) {
    const std::size_t m = prior.period;
    if (s.log_season.size() <= next + m) s.log_season.resize(next + m + 1, 0.0);
    s.log_season[next + m] = theta.zeta * std::log(y / l) + (1.0 - theta.zeta) * s.log_season[next];
  } else if (s.log_season.size() <= next + 1) {
    s.log_season.resize(next + 2, 0.0);
  }
  s.t = next;
}

}  // namespace

const std::vector<double>& ForecastResult::at(double level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - level) < 1e-12) return quantiles[i];
  }
  throw std::out_of_range(fmt::format("quantile level {} was not computed", level));
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> simulate_forward(RngStream& rng, const ParameterDraw& theta, const PriorConfig& prior,
                                     const StatePaths& paths, std::size_t horizon, std::size_t retry_cap,
                                     std::size_t& floor_events) {
  const std::size_t T = paths.size();
  State s{paths.level[T - 1], paths.trend[T - 1], paths.log_season, T - 1};
  s.log_season.resize(std::max(s.log_season.size(), T + horizon + paths.period + 1), 0.0);
  std::vector<double> out(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    const auto [yhat, s2] = one_step(s, theta, prior);
    const double scale = std::sqrt(s2);
    double y = 0.0;
    bool ok = false;
    for (std::size_t attempt = 0; attempt <= retry_cap; ++attempt) {
      y = sample_student_t(rng, theta.nu, yhat, scale);
      if (y > 0.0 && std::isfinite(y)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      y = kLevelFloor;
      ++floor_events;
    }
    out[j] = y;
    advance(s, y, theta, prior);
  }
  return out;
}

ForecastResult simulate_paths(const PosteriorSamples& samples, std::span<const double> y,
                              const ForecastConfig& cfg) {
  if (samples.draws.empty()) throw std::invalid_argument("no posterior draws to forecast from");
  if (cfg.horizon < 1 || cfg.paths_per_draw < 1) {
    throw std::invalid_argument("horizon and paths per draw must be positive");
  }
  for (std::size_t i = 0; i < cfg.quantile_levels.size(); ++i) {
    const double q = cfg.quantile_levels[i];
    if (!(q > 0.0 && q < 1.0) || (i > 0 && !(q > cfg.quantile_levels[i - 1]))) {
      throw std::invalid_argument("quantile levels must be sorted and inside (0, 1)");
    }
  }
  const std::size_t D = samples.draws.size();
  const std::size_t P = cfg.paths_per_draw;
  const std::size_t H = cfg.horizon;
  // sims[h][d * P + p]
  std::vector<std::vector<double>> sims(H, std::vector<double>(D * P));
  std::vector<std::size_t> floors(D, 0);
  std::vector<std::string> errors(D);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      try {
        const auto& theta = samples.draws[d];
        const StatePaths paths = run_recursion(y, theta, samples.prior);
        RngStream rng(cfg.seed, d);
        for (std::size_t p = 0; p < P; ++p) {
          const auto path = simulate_forward(rng, theta, samples.prior, paths, H, cfg.retry_cap, floors[d]);
          for (std::size_t h = 0; h < H; ++h) sims[h][d * P + p] = path[h];
        }
      } catch (const std::exception& e) {
        errors[d] = e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, D));
  if (workers == 1) {
    work(0, D);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (D + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(D, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (!errors[d].empty()) throw std::runtime_error(fmt::format("forecast draw {} failed: {}", d, errors[d]));
  }

  ForecastResult out;
  out.levels = cfg.quantile_levels;
  out.quantiles.assign(out.levels.size(), std::vector<double>(H));
  out.point.resize(H);
  out.mean.resize(H);
  out.n_paths = D * P;
  out.seed = cfg.seed;
  for (std::size_t d = 0; d < D; ++d) out.floor_events += floors[d];
  for (std::size_t h = 0; h < H; ++h) {
    auto& v = sims[h];
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean[h] = sum / static_cast<double>(v.size());
    out.point[h] = empirical_quantile(v, 0.5);
    for (std::size_t i = 0; i < out.levels.size(); ++i) out.quantiles[i][h] = empirical_quantile(v, out.levels[i]);
  }
  return out;
}

std::optional<std::vector<double>> simulate_series(RngStream& rng, const ParameterDraw& theta,
                                                   const PriorConfig& prior, std::size_t T, double y0) {
  if (T < 1 || !(y0 > 0.0)) throw std::invalid_argument("simulation needs T >= 1 and a positive start");
  const std::size_t m = prior.seasonal() ? prior.period : 1;
  State s{0.0, theta.b1, std::vector<double>(T + m + 1, 0.0), 0};
  if (prior.seasonal()) std::copy(theta.log_s_init.begin(), theta.log_s_init.end(), s.log_season.begin());
  std::vector<double> y(T);
  y[0] = y0;
  s.level = y0 * std::exp(-s.log_season[0]);
  if (prior.seasonal()) s.log_season[m] = theta.zeta * std::log(y0 / s.level) + (1.0 - theta.zeta) * s.log_season[0];
  for (std::size_t t = 1; t < T; ++t) {
    const auto [yhat, s2] = one_step(s, theta, prior);
    const double v = sample_student_t(rng, theta.nu, yhat, std::sqrt(s2));
    if (!(v > 0.0) || !std::isfinite(v)) return std::nullopt;
    y[t] = v;
    advance(s, v, theta, prior);
  }
  return y;
}

}  // namespace lsgt
