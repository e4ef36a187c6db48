#include "lsgt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace lsgt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t season_count(const PriorConfig& cfg) { return cfg.seasonal() ? cfg.period : 1; }

double effective_phi(const ParameterDraw& theta, const PriorConfig& cfg) {
  return cfg.heteroscedastic() ? theta.phi : 1.0;
}

double effective_lambda(const ParameterDraw& theta, const PriorConfig& cfg) {
  return cfg.seasonal() ? 0.0 : theta.lambda;
}

void require_range(bool ok, const char* name, double v) {
  if (!ok) throw std::domain_error(fmt::format("parameter {} = {} is out of range", name, v));
}

enum class DirectionKind { alpha, beta, season };

// Directional derivative of the NLL kernel along one parameter, by forward
// propagation of d(level), d(trend) and d(log season) through the recursion.
double directional_derivative(std::span<const double> y, const ParameterDraw& theta,
                              const PriorConfig& cfg, const StatePaths& paths,
                              DirectionKind kind, std::size_t season_index) {
  const std::size_t T = y.size();
  const std::size_t m = season_count(cfg);
  const bool seasonal = cfg.seasonal();
  const double alpha = theta.alpha;
  const double beta = theta.beta;
  const double zeta = theta.zeta;
  const double lambda = effective_lambda(theta, cfg);
  const double phi = effective_phi(theta, cfg);
  const double nu = theta.nu;
  const double hetero_coeff = theta.chi2 * (1.0 - phi) * (1.0 - phi) * 2.0 * theta.tau;

  std::vector<double> dlog_s(T + m, 0.0);
  if (kind == DirectionKind::season) {
    dlog_s[season_index] = 1.0;
    dlog_s[m - 1] = -1.0;
  }

  double grad = 0.0;
  auto accumulate = [&](std::size_t t, double dl, double db) {
    const std::size_t k = t;  // forecast of y[t + 1]
    const double l = paths.level[t];
    if (l < kLevelFloor) return;
    const double factor = std::exp(paths.log_season[t + 1]);
    const double g = l + theta.gamma * std::pow(l, theta.rho) + lambda * paths.trend[t];
    const double dg = dl * (1.0 + theta.gamma * theta.rho * std::pow(l, theta.rho - 1.0)) + lambda * db;
    const double dyhat = dg * factor + g * factor * dlog_s[t + 1];
    const double dsigma2 = hetero_coeff == 0.0
                               ? 0.0
                               : hetero_coeff * std::pow(l, 2.0 * theta.tau - 1.0) * dl;
    const double e = paths.residual[k];
    const double s2 = paths.sigma2hat[k];
    grad += -0.5 * nu * dsigma2 / s2 +
            0.5 * (nu + 1.0) * (nu * dsigma2 - 2.0 * e * dyhat) / (nu * s2 + e * e);
  };

  double dl_prev = -paths.level[0] * dlog_s[0];
  double db_prev = 0.0;
  if (seasonal) {
    dlog_s[m] = -zeta * dl_prev / paths.level[0] + (1.0 - zeta) * dlog_s[0];
  }
  if (T >= 2) accumulate(0, dl_prev, db_prev);

  for (std::size_t t = 1; t < T; ++t) {
    const double deseason = y[t] * std::exp(-paths.log_season[t]);
    double dl = -alpha * deseason * dlog_s[t] + (1.0 - alpha) * dl_prev;
    if (kind == DirectionKind::alpha) dl += deseason - paths.level[t - 1];
    double db = beta * (dl - dl_prev) + (1.0 - beta) * db_prev;
    if (kind == DirectionKind::beta) {
      db += (paths.level[t] - paths.level[t - 1]) - paths.trend[t - 1];
    }
    if (seasonal) {
      dlog_s[t + m] = -zeta * dl / paths.level[t] + (1.0 - zeta) * dlog_s[t];
    }
    if (t + 1 < T) accumulate(t, dl, db);
    dl_prev = dl;
    db_prev = db;
  }
  return grad;
}

}  // namespace

PriorConfig PriorConfig::defaults_for(std::span<const double> y, ModelKind kind, std::size_t period) {
  PriorConfig cfg;
  const double ymax = y.empty() ? 1.0 : *std::max_element(y.begin(), y.end());
  cfg.s_gamma = ymax / 100.0;
  cfg.s_b1 = ymax / 100.0;
  cfg.s_lambda = 1.0;
  cfg.model_kind = kind;
  cfg.period = kind == ModelKind::seasonal ? period : 1;
  return cfg;
}

void PriorConfig::validate() const {
  if (!(s_gamma > 0.0) || !(s_lambda > 0.0) || !(s_b1 > 0.0)) {
    throw std::invalid_argument("Cauchy prior scales must be positive");
  }
  if (!(beta_a > 0.0) || !(beta_b > 0.0)) {
    throw std::invalid_argument("Beta hyperparameters must be positive");
  }
  if (!(nu_lower > 0.0) || !(nu_lower < nu_upper)) {
    throw std::invalid_argument("nu bounds must satisfy 0 < nu_lower < nu_upper");
  }
  if (chi2_prior_shape < 0.0 || chi2_prior_scale < 0.0) {
    throw std::invalid_argument("chi2 prior parameters must be non-negative");
  }
  if (seasonal_prior.kind == SeasonalPrior::Kind::cauchy && !(seasonal_prior.scale > 0.0)) {
    throw std::invalid_argument("Cauchy seasonal prior scale must be positive");
  }
  if (model_kind == ModelKind::seasonal && period < 1) {
    throw std::invalid_argument("seasonal model needs a period of at least 1");
  }
  if (!(lambda_lower < lambda_upper) || !(b1_lower < b1_upper)) {
    throw std::invalid_argument("truncation bounds must be ordered");
  }
}

void check_invariants(const ParameterDraw& theta, const PriorConfig& cfg) {
  require_range(theta.nu > 0.0, "nu", theta.nu);
  require_range(theta.rho >= -0.5 && theta.rho <= 1.0, "rho", theta.rho);
  require_range(theta.alpha > 0.0 && theta.alpha < 1.0, "alpha", theta.alpha);
  require_range(theta.beta > 0.0 && theta.beta < 1.0, "beta", theta.beta);
  require_range(theta.zeta > 0.0 && theta.zeta < 1.0, "zeta", theta.zeta);
  require_range(theta.chi2 > 0.0 && std::isfinite(theta.chi2), "chi2", theta.chi2);
  require_range(theta.phi >= 0.0 && theta.phi <= 1.0, "phi", theta.phi);
  require_range(theta.tau >= 0.0 && theta.tau <= 1.0, "tau", theta.tau);
  require_range(theta.lambda >= cfg.lambda_lower && theta.lambda <= cfg.lambda_upper, "lambda",
                theta.lambda);
  require_range(theta.b1 >= cfg.b1_lower && theta.b1 <= cfg.b1_upper, "b1", theta.b1);
  for (double w : theta.omega2) require_range(w > 0.0, "omega2", w);
  require_range(theta.xi_gamma2 > 0.0, "xi_gamma2", theta.xi_gamma2);
  require_range(theta.xi_lambda2 > 0.0, "xi_lambda2", theta.xi_lambda2);
  require_range(theta.xi_b1_2 > 0.0, "xi_b1_2", theta.xi_b1_2);
  for (double v : theta.psi2) require_range(v > 0.0, "psi2", v);
  for (double v : theta.eta_s) require_range(v > 0.0, "eta_s", v);
  require_range(theta.delta2 > 0.0, "delta2", theta.delta2);
  require_range(theta.eta_delta > 0.0, "eta_delta", theta.eta_delta);
  if (cfg.seasonal()) {
    if (theta.log_s_init.size() != cfg.period) {
      throw std::domain_error(fmt::format("expected {} initial log-seasonals, got {}", cfg.period,
                                          theta.log_s_init.size()));
    }
    const double sum = std::accumulate(theta.log_s_init.begin(), theta.log_s_init.end(), 0.0);
    if (std::abs(sum) > 1e-12) {
      throw std::domain_error(fmt::format("initial log-seasonals sum to {}, not zero", sum));
    }
  }
}

double conditional_variance(double level, const ParameterDraw& theta, const PriorConfig& cfg) {
  const double phi = effective_phi(theta, cfg);
  if (phi == 1.0) return theta.chi2;
  const double l = std::max(level, kLevelFloor);
  return theta.chi2 * (phi * phi + (1.0 - phi) * (1.0 - phi) * std::pow(l, 2.0 * theta.tau));
}

bool run_recursion_into(std::span<const double> y, const ParameterDraw& theta,
                        const PriorConfig& cfg, StatePaths& out, std::size_t* failed_step) {
  const std::size_t T = y.size();
  const std::size_t m = season_count(cfg);
  const bool seasonal = cfg.seasonal();
  auto fail = [&](std::size_t t) {
    if (failed_step) *failed_step = t;
    return false;
  };
  if (T < 1) return fail(0);
  if (seasonal && theta.log_s_init.size() != m) return fail(0);

  out.period = m;
  out.clamp_events = 0;
  out.level.resize(T);
  out.trend.resize(T);
  out.log_season.assign(T + m, 0.0);
  out.yhat.resize(T - 1);
  out.sigma2hat.resize(T - 1);
  out.residual.resize(T - 1);

  const double alpha = theta.alpha;
  const double beta = theta.beta;
  const double zeta = theta.zeta;
  const double lambda = effective_lambda(theta, cfg);
  if (seasonal) std::copy(theta.log_s_init.begin(), theta.log_s_init.end(), out.log_season.begin());

  for (std::size_t t = 0; t < T; ++t) {
    const double deseason = y[t] * std::exp(-out.log_season[t]);
    double l, b;
    if (t == 0) {
      l = deseason;
      b = theta.b1;
    } else {
      l = alpha * deseason + (1.0 - alpha) * out.level[t - 1];
      b = beta * (l - out.level[t - 1]) + (1.0 - beta) * out.trend[t - 1];
    }
    if (!std::isfinite(l) || !std::isfinite(b)) return fail(t);
    out.level[t] = l;
    out.trend[t] = b;
    if (seasonal) {
      if (!(l > 0.0)) return fail(t);
      const double ls = zeta * std::log(y[t] / l) + (1.0 - zeta) * out.log_season[t];
      if (!std::isfinite(ls)) return fail(t);
      out.log_season[t + m] = ls;
    }
    if (t + 1 < T) {
      double lc = l;
      if (lc < kLevelFloor) {
        lc = kLevelFloor;
        ++out.clamp_events;
      }
      const double yhat =
          (l + theta.gamma * std::pow(lc, theta.rho) + lambda * b) * std::exp(out.log_season[t + 1]);
      const double s2 = conditional_variance(lc, theta, cfg);
      if (!std::isfinite(yhat) || !std::isfinite(s2) || !(s2 > 0.0)) return fail(t);
      out.yhat[t] = yhat;
      out.sigma2hat[t] = s2;
      out.residual[t] = y[t + 1] - yhat;
    }
  }
  return true;
}

StatePaths run_recursion(std::span<const double> y, const ParameterDraw& theta,
                         const PriorConfig& cfg) {
  StatePaths paths;
  std::size_t step = 0;
  if (!run_recursion_into(y, theta, cfg, paths, &step)) {
    throw RecursionError(fmt::format("non-finite state in recursion at t = {}", step), step);
  }
  return paths;
}

double negative_log_likelihood_kernel(const StatePaths& paths, double nu) {
  if (!(nu > 0.0) || paths.clamp_events > 0) return kInf;
  double total = 0.0;
  for (std::size_t k = 0; k < paths.residual.size(); ++k) {
    const double e = paths.residual[k];
    const double s2 = paths.sigma2hat[k];
    total += 0.5 * (nu + 1.0) * std::log1p(e * e / (nu * s2)) + 0.5 * std::log(s2);
  }
  return std::isfinite(total) ? total : kInf;
}

double negative_log_likelihood(const StatePaths& paths, double nu) {
  const double kernel = negative_log_likelihood_kernel(paths, nu);
  if (!std::isfinite(kernel)) return kInf;
  const double n = static_cast<double>(paths.residual.size());
  const double constants = n * (std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 1.0)) +
                                0.5 * std::log(nu * std::numbers::pi));
  const double total = kernel + constants;
  return std::isfinite(total) ? total : kInf;
}

SmoothingGradient smoothing_gradient(std::span<const double> y, const ParameterDraw& theta,
                                     const PriorConfig& cfg, const StatePaths& paths) {
  return {directional_derivative(y, theta, cfg, paths, DirectionKind::alpha, 0),
          directional_derivative(y, theta, cfg, paths, DirectionKind::beta, 0)};
}

std::vector<double> seasonal_gradient(std::span<const double> y, const ParameterDraw& theta,
                                      const PriorConfig& cfg, const StatePaths& paths) {
  if (!cfg.seasonal() || cfg.period < 2) return {};
  std::vector<double> grad(cfg.period - 1);
  for (std::size_t i = 0; i + 1 < cfg.period; ++i) {
    grad[i] = directional_derivative(y, theta, cfg, paths, DirectionKind::season, i);
  }
  return grad;
}

void centre_log_seasonals(std::vector<double>& log_s) {
  if (log_s.empty()) return;
  const double mean = std::accumulate(log_s.begin(), log_s.end(), 0.0) / static_cast<double>(log_s.size());
  for (double& v : log_s) v -= mean;
  // Put the rounding residue on the last factor so the sum is zero to the last bit we can manage.
  double residue = std::accumulate(log_s.begin(), log_s.end(), 0.0);
  log_s.back() -= residue;
}

std::vector<double> initial_log_seasonals(std::span<const double> y, std::size_t period) {
  std::vector<double> out(period, 0.0);
  const std::size_t periods = y.size() / period;
  if (period < 2 || periods == 0) return out;
  std::vector<double> ratio_sum(period, 0.0);
  for (std::size_t p = 0; p < periods; ++p) {
    const auto block = y.subspan(p * period, period);
    const double mean = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(period);
    for (std::size_t j = 0; j < period; ++j) ratio_sum[j] += block[j] / mean;
  }
  for (std::size_t j = 0; j < period; ++j) {
    out[j] = std::log(ratio_sum[j] / static_cast<double>(periods));
  }
  centre_log_seasonals(out);
  return out;
}

}  // namespace lsgt
