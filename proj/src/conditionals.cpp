#include "lsgt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace lsgt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double season_factor(const StatePaths& paths, std::size_t k) { return std::exp(paths.log_season[k + 1]); }

double observation_variance(const StatePaths& paths, const ParameterDraw& theta, std::size_t k) {
  const double w = k < theta.omega2.size() ? theta.omega2[k] : 1.0;
  return w * paths.sigma2hat[k];
}

double clamped_level(double l) { return std::max(l, kLevelFloor); }

double log_terms(std::span<const double> residual, std::span<const double> sigma2, double nu) {
  double total = 0.0;
  for (std::size_t k = 0; k < residual.size(); ++k) {
    total += std::log1p(residual[k] * residual[k] / (nu * sigma2[k]));
  }
  return 0.5 * (nu + 1.0) * total;
}

}  // namespace

NormalParams conjugate_normal_posterior(const ConjugateNormalSpec& spec) {
  const std::size_t n = spec.y.size();
  if (spec.x.size() != n || spec.s.size() != n || spec.c.size() != n || spec.sigma2.size() != n) {
    throw std::invalid_argument("conjugate normal spec has mismatched lengths");
  }
  if (!(spec.prior_variance > 0.0)) throw std::invalid_argument("prior variance must be positive");
  double precision = 1.0 / spec.prior_variance;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(spec.sigma2[i] > 0.0)) throw std::invalid_argument("observation variance must be positive");
    const double xs = spec.x[i] * spec.s[i];
    precision += xs * xs / spec.sigma2[i];
    weighted += xs * (spec.y[i] - spec.c[i] * spec.s[i]) / spec.sigma2[i];
  }
  const double variance = 1.0 / precision;
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(weighted)) {
    throw std::runtime_error(fmt::format("conjugate normal posterior variance is {}", variance));
  }
  return {variance * weighted, variance};
}

void SamplerConfig::validate() const {
  if (iterations == 0 || burn_in == 0 || thinning == 0 || chains == 0) {
    throw std::invalid_argument("iterations, burn-in, thinning and chains must be positive");
  }
  if (burn_in >= iterations) throw std::invalid_argument("burn-in must be smaller than iterations");
  if (!(mh_target_acceptance > 0.0 && mh_target_acceptance < 1.0)) {
    throw std::invalid_argument("target acceptance must lie in (0, 1)");
  }
  if (!(step_size_init > 0.0)) throw std::invalid_argument("initial step size must be positive");
  if (nu_grid_size < 1 || rho_grid_size < 1 || phi_grid_size < 1 || tau_grid_size < 1) {
    throw std::invalid_argument("grid sizes must be positive");
  }
}

ParameterGrids ParameterGrids::make(const PriorConfig& prior, const SamplerConfig& cfg) {
  ParameterGrids g;
  g.nu = cfg.nu_grid_size == 1 ? NuGrid{{prior.nu_upper}}
                               : cached_nu_grid(prior.nu_lower, prior.nu_upper, cfg.nu_grid_size);
  g.rho = uniform_grid(-0.5, 1.0, cfg.rho_grid_size);
  g.phi = uniform_grid(0.0, 1.0, cfg.phi_grid_size);
  g.tau = uniform_grid(0.0, 1.0, cfg.tau_grid_size);
  return g;
}

InverseGammaParams chi2_conditional(const StatePaths& paths, const ParameterDraw& theta,
                                    const PriorConfig& prior) {
  const std::size_t n = paths.residual.size();
  double scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double unit = paths.sigma2hat[k] / theta.chi2;  // phi^2 + (1-phi)^2 l^{2 tau}
    const double w = k < theta.omega2.size() ? theta.omega2[k] : 1.0;
    scale += paths.residual[k] * paths.residual[k] / (2.0 * w * unit);
  }
  scale += prior.chi2_prior_scale;
  const double shape = 0.5 * static_cast<double>(n) + prior.chi2_prior_shape;
  if (!(scale > 0.0) || !std::isfinite(scale) || !(shape > 0.0)) {
    throw DegenerateSeriesError(
        fmt::format("chi2 conditional is degenerate (shape {}, scale {}); residuals are all zero", shape, scale));
  }
  return {shape, scale};
}

std::vector<InverseGammaParams> omega2_conditional(const StatePaths& paths, const ParameterDraw& theta) {
  std::vector<InverseGammaParams> out(paths.residual.size());
  const double shape = 0.5 * (theta.nu + 1.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double e = paths.residual[k];
    out[k] = {shape, e * e / (2.0 * paths.sigma2hat[k]) + 0.5 * theta.nu};
  }
  return out;
}

InverseGammaParams cauchy_latent_conditional(double value, double scale) {
  return {1.0, value * value / (2.0 * scale * scale) + 0.5};
}

ConjugateNormalSpec gamma_design(std::span<const double> y, const StatePaths& paths,
                                 const ParameterDraw& theta, const PriorConfig& prior) {
  const std::size_t n = paths.residual.size();
  const double lambda = prior.seasonal() ? 0.0 : theta.lambda;
  ConjugateNormalSpec spec;
  spec.y.resize(n);
  spec.x.resize(n);
  spec.s.resize(n);
  spec.c.resize(n);
  spec.sigma2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    spec.y[k] = y[k + 1];
    spec.x[k] = std::pow(clamped_level(paths.level[k]), theta.rho);
    spec.s[k] = season_factor(paths, k);
    spec.c[k] = paths.level[k] + lambda * paths.trend[k];
    spec.sigma2[k] = observation_variance(paths, theta, k);
  }
  spec.prior_variance = theta.xi_gamma2 * prior.s_gamma * prior.s_gamma;
  return spec;
}

ConjugateNormalSpec lambda_design(std::span<const double> y, const StatePaths& paths,
                                  const ParameterDraw& theta, const PriorConfig& prior) {
  const std::size_t n = paths.residual.size();
  ConjugateNormalSpec spec;
  spec.y.resize(n);
  spec.x.resize(n);
  spec.s.resize(n);
  spec.c.resize(n);
  spec.sigma2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = paths.level[k];
    spec.y[k] = y[k + 1];
    spec.x[k] = paths.trend[k];
    spec.s[k] = season_factor(paths, k);
    spec.c[k] = l + theta.gamma * std::pow(clamped_level(l), theta.rho);
    spec.sigma2[k] = observation_variance(paths, theta, k);
  }
  spec.prior_variance = theta.xi_lambda2 * prior.s_lambda * prior.s_lambda;
  return spec;
}

ConjugateNormalSpec b1_design(std::span<const double> y, const StatePaths& paths,
                              const ParameterDraw& theta, const PriorConfig& prior) {
  const std::size_t n = paths.residual.size();
  const double lambda = prior.seasonal() ? 0.0 : theta.lambda;
  ConjugateNormalSpec spec;
  spec.y.resize(n);
  spec.x.resize(n);
  spec.s.resize(n);
  spec.c.resize(n);
  spec.sigma2.resize(n);
  // b_t = (1-beta)^t b1 + (terms free of b1); levels do not depend on b1.
  double decay = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = season_factor(paths, k);
    spec.y[k] = y[k + 1];
    spec.x[k] = lambda * decay;
    spec.s[k] = s;
    spec.c[k] = paths.yhat[k] / s - spec.x[k] * theta.b1;
    spec.sigma2[k] = observation_variance(paths, theta, k);
    decay *= 1.0 - theta.beta;
  }
  spec.prior_variance = theta.xi_b1_2 * prior.s_b1 * prior.s_b1;
  return spec;
}

NormalParams b1_conditional(const StatePaths& paths, const ParameterDraw& theta,
                            const PriorConfig& prior) {
  // Alternative form: sum over x s (y - yhat + x s b1) / sigma2, which only
  // needs the current forecasts.
  const std::size_t n = paths.residual.size();
  const double lambda = prior.seasonal() ? 0.0 : theta.lambda;
  double precision = 1.0 / (theta.xi_b1_2 * prior.s_b1 * prior.s_b1);
  double weighted = 0.0;
  double decay = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double xs = lambda * decay * season_factor(paths, k);
    const double s2 = observation_variance(paths, theta, k);
    precision += xs * xs / s2;
    weighted += xs * (paths.residual[k] + xs * theta.b1) / s2;
    decay *= 1.0 - theta.beta;
  }
  const double variance = 1.0 / precision;
  if (!(variance > 0.0) || !std::isfinite(weighted)) {
    throw std::runtime_error(fmt::format("b1 posterior variance is {}", variance));
  }
  return {variance * weighted, variance};
}

InverseGammaParams psi2_conditional(double log_s, double eta, double delta2) {
  return {1.0, 1.0 / eta + log_s * log_s / (2.0 * delta2)};
}

InverseGammaParams delta2_conditional(std::span<const double> log_s, std::span<const double> psi2,
                                      double eta_delta) {
  double q = 0.0;
  for (std::size_t i = 0; i < log_s.size(); ++i) q += log_s[i] * log_s[i] / psi2[i];
  return {0.5 * static_cast<double>(log_s.size()), 1.0 / eta_delta + 0.5 * q};
}

InverseGammaParams horseshoe_latent_conditional(double variance) { return {1.0, 1.0 + 1.0 / variance}; }

std::vector<double> nu_neg_log_posterior(std::span<const double> omega2, std::span<const double> candidates) {
  const double n = static_cast<double>(omega2.size());
  double sum_log = 0.0;
  double sum_inv = 0.0;
  for (double w : omega2) {
    sum_log += std::log(w);
    sum_inv += 1.0 / w;
  }
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double nu = candidates[i];
    const double half = 0.5 * nu;
    out[i] = -n * half * std::log(half) + n * std::lgamma(half) + 0.5 * (nu + 1.0) * sum_log + half * sum_inv;
  }
  return out;
}

std::vector<double> rho_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates,
                                          bool include_penalty) {
  const std::size_t n = paths.residual.size();
  const double lambda = ctx.prior.seasonal() ? 0.0 : theta.lambda;
  std::vector<double> out(candidates.size(), kInf);
  if (paths.clamp_events > 0) return out;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double rho = candidates[i];
    for (std::size_t k = 0; k < n; ++k) {
      const double l = paths.level[k];
      const double yhat = (l + theta.gamma * std::pow(clamped_level(l), rho) + lambda * paths.trend[k]) *
                          season_factor(paths, k);
      e[k] = ctx.y[k + 1] - yhat;
    }
    double value = log_terms(e, paths.sigma2hat, theta.nu);
    if (include_penalty) value += std::log(rho * rho + 1.0);
    out[i] = std::isfinite(value) ? value : kInf;
  }
  return out;
}

namespace {

std::vector<double> variance_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                               ParameterDraw theta, std::span<const double> candidates,
                                               double ParameterDraw::*field) {
  const std::size_t n = paths.residual.size();
  std::vector<double> out(candidates.size(), kInf);
  if (paths.clamp_events > 0) return out;
  std::vector<double> s2(n);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    theta.*field = candidates[i];
    double half_log = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < n; ++k) {
      s2[k] = conditional_variance(paths.level[k], theta, ctx.prior);
      if (!(s2[k] > 0.0) || !std::isfinite(s2[k])) {
        ok = false;
        break;
      }
      half_log += 0.5 * std::log(s2[k]);
    }
    if (!ok) continue;
    const double value = log_terms(paths.residual, s2, theta.nu) + half_log;
    out[i] = std::isfinite(value) ? value : kInf;
  }
  return out;
}

}  // namespace

std::vector<double> tau_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates) {
  return variance_neg_log_posterior(ctx, paths, theta, candidates, &ParameterDraw::tau);
}

std::vector<double> phi_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates) {
  return variance_neg_log_posterior(ctx, paths, theta, candidates, &ParameterDraw::phi);
}

std::size_t sample_grid(RngStream& rng, std::span<const double> neg_log_posterior) {
  std::vector<double> log_w(neg_log_posterior.size());
  bool any = false;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    const double L = neg_log_posterior[i];
    log_w[i] = std::isfinite(L) ? -L : -kInf;
    any = any || std::isfinite(L);
  }
  if (!any) throw DegenerateSeriesError("every grid candidate has zero posterior mass");
  return sample_log_categorical(rng, log_w);
}

double seasonal_log_prior(const PriorConfig& prior, const ParameterDraw& theta) {
  const auto& v = theta.log_s_init;
  double total = 0.0;
  if (prior.seasonal_prior.kind == SeasonalPrior::Kind::horseshoe) {
    for (std::size_t i = 0; i < v.size(); ++i) total -= v[i] * v[i] / (2.0 * theta.psi2[i] * theta.delta2);
  } else {
    const double c = prior.seasonal_prior.scale;
    for (double x : v) total -= std::log1p(x * x / (c * c));
  }
  return total;
}

double smoothing_target(const SamplerContext& ctx, const StatePaths& paths, const ParameterDraw& theta) {
  const double kernel = negative_log_likelihood_kernel(paths, theta.nu);
  if (!std::isfinite(kernel)) return kInf;
  const double a = ctx.prior.beta_a;
  const double b = ctx.prior.beta_b;
  auto log_prior = [&](double p) { return a * std::log(p) + b * std::log1p(-p); };
  double lp = log_prior(theta.alpha) + log_prior(theta.beta);
  if (ctx.prior.seasonal()) lp += log_prior(theta.zeta);
  const double value = kernel - lp;
  return std::isfinite(value) ? value : kInf;
}

double seasonal_target(const SamplerContext& ctx, const StatePaths& paths, const ParameterDraw& theta) {
  const double kernel = negative_log_likelihood_kernel(paths, theta.nu);
  if (!std::isfinite(kernel)) return kInf;
  const double value = kernel - seasonal_log_prior(ctx.prior, theta);
  return std::isfinite(value) ? value : kInf;
}

}  // namespace lsgt
