#include "lsgt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace lsgt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kTruncationTries = 100;

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double u) { return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }

void refresh(const SamplerContext& ctx, const ParameterDraw& theta, StatePaths& paths) {
  std::size_t step = 0;
  if (!run_recursion_into(ctx.y, theta, ctx.prior, paths, &step)) {
    throw DegenerateSeriesError(fmt::format("recursion failed at t = {} for an accepted state", step));
  }
}

double draw_ig(RngStream& rng, InverseGammaParams p) { return sample_inverse_gamma(rng, p.shape, p.scale); }

// log q(to | from) for the Langevin proposal, up to a constant shared by both directions.
double langevin_log_density(std::span<const double> to, std::span<const double> from,
                            std::span<const double> grad_from, double eps) {
  double ss = 0.0;
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double mean = from[i] - 0.5 * eps * eps * grad_from[i];
    ss += (to[i] - mean) * (to[i] - mean);
  }
  return -ss / (2.0 * eps * eps);
}

// Gradient of smoothing_target with respect to the logits.
std::vector<double> smoothing_target_gradient(const SamplerContext& ctx, const StatePaths& paths,
                                              const ParameterDraw& theta) {
  const auto g = smoothing_gradient(ctx.y, theta, ctx.prior, paths);
  const double a = ctx.prior.beta_a;
  const double b = ctx.prior.beta_b;
  auto chain = [&](double dL, double p) { return dL * p * (1.0 - p) - a * (1.0 - p) + b * p; };
  std::vector<double> out{chain(g.alpha, theta.alpha), chain(g.beta, theta.beta)};
  if (ctx.prior.seasonal()) out.push_back(chain(0.0, theta.zeta));
  return out;
}

double seasonal_prior_slope(const PriorConfig& prior, const ParameterDraw& theta, std::size_t i) {
  const double v = theta.log_s_init[i];
  if (prior.seasonal_prior.kind == SeasonalPrior::Kind::horseshoe) {
    return v / (theta.psi2[i] * theta.delta2);
  }
  const double c = prior.seasonal_prior.scale;
  return 2.0 * v / (c * c + v * v);
}

std::vector<double> seasonal_target_gradient(const SamplerContext& ctx, const StatePaths& paths,
                                             const ParameterDraw& theta) {
  auto g = seasonal_gradient(ctx.y, theta, ctx.prior, paths);
  const std::size_t last = ctx.prior.period - 1;
  const double tail = seasonal_prior_slope(ctx.prior, theta, last);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seasonal_prior_slope(ctx.prior, theta, i) - tail;
  return g;
}

void set_smoothing(ParameterDraw& theta, std::span<const double> u, bool seasonal) {
  theta.alpha = sigmoid(u[0]);
  theta.beta = sigmoid(u[1]);
  if (seasonal) theta.zeta = sigmoid(u[2]);
}

bool in_open_unit(double p) { return p > 0.0 && p < 1.0; }

void set_seasonals(ParameterDraw& theta, std::span<const double> free) {
  double sum = 0.0;
  for (std::size_t i = 0; i < free.size(); ++i) {
    theta.log_s_init[i] = free[i];
    sum += free[i];
  }
  theta.log_s_init.back() = -sum;
}

// Shared Langevin MH step. `get`/`set` move between theta and the unconstrained
// block; `target`/`gradient` evaluate the negative log target on refreshed paths.
template <class Get, class Set, class Target, class Gradient>
bool langevin_step(RngStream& rng, const SamplerContext& ctx, StatePaths& paths, ParameterDraw& theta,
                   StepState& step, std::size_t iteration, std::size_t burn_in, double target_acceptance,
                   Get get, Set set, Target target, Gradient gradient) {
  const std::vector<double> u = get(theta);
  const std::vector<double> grad = gradient(paths, theta);
  const double current = target(paths, theta);
  const double eps = step.step();

  std::vector<double> proposal(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    proposal[i] = u[i] - 0.5 * eps * eps * grad[i] + eps * rng.standard_normal();
  }

  ParameterDraw candidate = theta;
  StatePaths candidate_paths;
  double accept_prob = 0.0;
  bool accepted = false;
  bool finite = set(candidate, proposal) &&
                run_recursion_into(ctx.y, candidate, ctx.prior, candidate_paths);
  double proposed = kInf;
  std::vector<double> grad_new;
  if (finite) {
    proposed = target(candidate_paths, candidate);
    finite = std::isfinite(proposed);
  }
  if (finite) {
    grad_new = gradient(candidate_paths, candidate);
    finite = std::all_of(grad_new.begin(), grad_new.end(), [](double g) { return std::isfinite(g); });
  }
  if (finite) {
    const double log_ratio = current - proposed + langevin_log_density(u, proposal, grad_new, eps) -
                             langevin_log_density(proposal, u, grad, eps);
    accept_prob = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
    if (rng.uniform() < accept_prob) {
      theta = std::move(candidate);
      paths = std::move(candidate_paths);
      accepted = true;
    }
  } else {
    ++step.rejected_nonfinite;
  }
  step.record(accepted, iteration >= burn_in);
  if (iteration < burn_in) step.adapt(iteration, accept_prob, target_acceptance);
  return accepted;
}

}  // namespace

void StepState::adapt(std::size_t iteration, double accept_prob, double target) {
  const double gain = std::pow(static_cast<double>(iteration + 1), -0.6);
  log_step += gain * (accept_prob - target);
  log_step = std::clamp(log_step, std::log(1e-6), std::log(10.0));
}

void StepState::record(bool accepted_move, bool after_burn_in) {
  ++proposals;
  if (accepted_move) ++accepted;
  if (after_burn_in) {
    ++post_burn_proposals;
    if (accepted_move) ++post_burn_accepted;
  }
}

double StepState::acceptance_after_burn_in() const {
  return post_burn_proposals == 0 ? 0.0
                                  : static_cast<double>(post_burn_accepted) / static_cast<double>(post_burn_proposals);
}

double sample_truncated_normal(RngStream& rng, NormalParams p, double lo, double hi, bool& clamped) {
  clamped = false;
  double x = p.mean;
  for (std::size_t i = 0; i < kTruncationTries; ++i) {
    x = sample_normal(rng, p.mean, p.variance);
    if (x >= lo && x <= hi) return x;
  }
  clamped = true;
  return std::clamp(x, lo, hi);
}

void update_omega2(RngStream& rng, const StatePaths& paths, ParameterDraw& theta) {
  const auto params = omega2_conditional(paths, theta);
  theta.omega2.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) theta.omega2[k] = draw_ig(rng, params[k]);
}

void update_chi2(RngStream& rng, const SamplerContext& ctx, StatePaths& paths, ParameterDraw& theta) {
  const double old = theta.chi2;
  theta.chi2 = draw_ig(rng, chi2_conditional(paths, theta, ctx.prior));
  // sigma2hat is linear in chi2.
  const double ratio = theta.chi2 / old;
  for (double& s2 : paths.sigma2hat) s2 *= ratio;
}

void update_nu(RngStream& rng, const SamplerContext& ctx, ParameterDraw& theta) {
  const auto& cand = ctx.grids.nu.candidates;
  theta.nu = cand[sample_grid(rng, nu_neg_log_posterior(theta.omega2, cand))];
}

void update_gamma(RngStream& rng, const SamplerContext& ctx, StatePaths& paths, ParameterDraw& theta) {
  const auto post = conjugate_normal_posterior(gamma_design(ctx.y, paths, theta, ctx.prior));
  theta.gamma = sample_normal(rng, post.mean, post.variance);
  refresh(ctx, theta, paths);
  theta.xi_gamma2 = draw_ig(rng, cauchy_latent_conditional(theta.gamma, ctx.prior.s_gamma));
}

void update_lambda_b1(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                      ParameterDraw& theta, UpdateCounters& counters) {
  if (ctx.prior.seasonal()) return;
  bool clamped = false;
  const auto lam = conjugate_normal_posterior(lambda_design(ctx.y, paths, theta, ctx.prior));
  theta.lambda = sample_truncated_normal(rng, lam, ctx.prior.lambda_lower, ctx.prior.lambda_upper, clamped);
  if (clamped) ++counters.truncation_clamps;
  refresh(ctx, theta, paths);

  const auto b1 = b1_conditional(paths, theta, ctx.prior);
  theta.b1 = sample_truncated_normal(rng, b1, ctx.prior.b1_lower, ctx.prior.b1_upper, clamped);
  if (clamped) ++counters.truncation_clamps;
  refresh(ctx, theta, paths);

  theta.xi_lambda2 = draw_ig(rng, cauchy_latent_conditional(theta.lambda, ctx.prior.s_lambda));
  theta.xi_b1_2 = draw_ig(rng, cauchy_latent_conditional(theta.b1, ctx.prior.s_b1));
}

bool update_smoothing_mh(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                         ParameterDraw& theta, StepState& step, std::size_t iteration,
                         std::size_t burn_in, double target_acceptance) {
  const bool seasonal = ctx.prior.seasonal();
  auto get = [&](const ParameterDraw& t) {
    std::vector<double> u{logit(t.alpha), logit(t.beta)};
    if (seasonal) u.push_back(logit(t.zeta));
    return u;
  };
  auto set = [&](ParameterDraw& t, std::span<const double> u) {
    set_smoothing(t, u, seasonal);
    return in_open_unit(t.alpha) && in_open_unit(t.beta) && in_open_unit(t.zeta);
  };
  auto target = [&](const StatePaths& p, const ParameterDraw& t) { return smoothing_target(ctx, p, t); };
  auto gradient = [&](const StatePaths& p, const ParameterDraw& t) { return smoothing_target_gradient(ctx, p, t); };
  return langevin_step(rng, ctx, paths, theta, step, iteration, burn_in, target_acceptance, get, set, target,
                       gradient);
}

bool update_seasonals_mh(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                         ParameterDraw& theta, StepState& step, std::size_t iteration,
                         std::size_t burn_in, double target_acceptance) {
  if (!ctx.prior.seasonal() || ctx.prior.period < 2) return false;
  auto get = [](const ParameterDraw& t) {
    return std::vector<double>(t.log_s_init.begin(), t.log_s_init.end() - 1);
  };
  auto set = [](ParameterDraw& t, std::span<const double> free) {
    set_seasonals(t, free);
    return std::all_of(t.log_s_init.begin(), t.log_s_init.end(), [](double v) { return std::isfinite(v); });
  };
  auto target = [&](const StatePaths& p, const ParameterDraw& t) { return seasonal_target(ctx, p, t); };
  auto gradient = [&](const StatePaths& p, const ParameterDraw& t) { return seasonal_target_gradient(ctx, p, t); };
  return langevin_step(rng, ctx, paths, theta, step, iteration, burn_in, target_acceptance, get, set, target,
                       gradient);
}

void update_horseshoe(RngStream& rng, ParameterDraw& theta) {
  const std::size_t m = theta.log_s_init.size();
  for (std::size_t i = 0; i < m; ++i) {
    theta.psi2[i] = draw_ig(rng, psi2_conditional(theta.log_s_init[i], theta.eta_s[i], theta.delta2));
  }
  theta.delta2 = draw_ig(rng, delta2_conditional(theta.log_s_init, theta.psi2, theta.eta_delta));
  for (std::size_t i = 0; i < m; ++i) theta.eta_s[i] = draw_ig(rng, horseshoe_latent_conditional(theta.psi2[i]));
  theta.eta_delta = draw_ig(rng, horseshoe_latent_conditional(theta.delta2));
}

void update_grid_params(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                        ParameterDraw& theta) {
  const auto& g = ctx.grids;
  theta.rho = g.rho[sample_grid(rng, rho_neg_log_posterior(ctx, paths, theta, g.rho))];
  refresh(ctx, theta, paths);
  if (!ctx.prior.heteroscedastic()) return;
  theta.tau = g.tau[sample_grid(rng, tau_neg_log_posterior(ctx, paths, theta, g.tau))];
  refresh(ctx, theta, paths);
  theta.phi = g.phi[sample_grid(rng, phi_neg_log_posterior(ctx, paths, theta, g.phi))];
  refresh(ctx, theta, paths);
}

ParameterDraw initial_draw(std::span<const double> y, const PriorConfig& prior, const ParameterGrids& grids) {
  ParameterDraw theta;
  theta.nu = grids.nu.candidates[grids.nu.nearest(10.0)];
  theta.phi = prior.heteroscedastic() ? 0.5 : 1.0;
  // Sample variance of first differences.
  double chi2 = 0.0;
  if (y.size() >= 3) {
    std::vector<double> d(y.size() - 1);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    for (double v : d) chi2 += (v - mean) * (v - mean);
    chi2 /= static_cast<double>(d.size() - 1);
  }
  if (!(chi2 > 0.0) || !std::isfinite(chi2)) {
    const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(std::max<std::size_t>(1, y.size()));
    chi2 = std::max(1e-4 * ymean * ymean, 1e-8);
  }
  theta.chi2 = chi2;
  theta.omega2.assign(y.size() > 0 ? y.size() - 1 : 0, 1.0);
  if (prior.seasonal()) {
    theta.log_s_init = initial_log_seasonals(y, prior.period);
    theta.psi2.assign(prior.period, 1.0);
    theta.eta_s.assign(prior.period, 1.0);
  }
  return theta;
}

std::vector<ParameterDraw> run_chain(std::span<const double> y, const PriorConfig& prior,
                                     const SamplerConfig& cfg, const ParameterGrids& grids,
                                     RngStream& rng, ChainDiagnostics& diag) {
  const SamplerContext ctx{y, prior, grids};
  ParameterDraw theta = initial_draw(y, prior, grids);
  StatePaths paths;
  refresh(ctx, theta, paths);

  StepState smoothing_step;
  StepState seasonal_step;
  smoothing_step.log_step = std::log(cfg.step_size_init);
  seasonal_step.log_step = std::log(cfg.step_size_init);
  UpdateCounters counters;
  std::vector<ParameterDraw> kept;
  kept.reserve((cfg.iterations - cfg.burn_in) / cfg.thinning + 1);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    update_omega2(rng, paths, theta);
    update_chi2(rng, ctx, paths, theta);
    update_nu(rng, ctx, theta);
    update_gamma(rng, ctx, paths, theta);
    update_lambda_b1(rng, ctx, paths, theta, counters);
    update_smoothing_mh(rng, ctx, paths, theta, smoothing_step, it, cfg.burn_in, cfg.mh_target_acceptance);
    if (prior.seasonal() && prior.period >= 2) {
      update_seasonals_mh(rng, ctx, paths, theta, seasonal_step, it, cfg.burn_in, cfg.mh_target_acceptance);
      if (prior.seasonal_prior.kind == SeasonalPrior::Kind::horseshoe) update_horseshoe(rng, theta);
    }
    update_grid_params(rng, ctx, paths, theta);
    diag.clamp_events += paths.clamp_events;
    check_invariants(theta, prior);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) kept.push_back(theta);
  }

  diag.smoothing_acceptance = smoothing_step.acceptance_after_burn_in();
  diag.seasonal_acceptance = seasonal_step.acceptance_after_burn_in();
  diag.smoothing_step = smoothing_step.step();
  diag.seasonal_step = seasonal_step.step();
  diag.truncation_clamps = counters.truncation_clamps;
  diag.rejected_nonfinite = smoothing_step.rejected_nonfinite + seasonal_step.rejected_nonfinite;
  return kept;
}

PosteriorSamples fit(std::span<const double> y, const PriorConfig& prior, const SamplerConfig& cfg,
                     const std::string& series_id) {
  cfg.validate();
  prior.validate();
  if (y.size() < 2) throw std::invalid_argument(fmt::format("series {} needs at least two points", series_id));
  const ParameterGrids grids = ParameterGrids::make(prior, cfg);

  PosteriorSamples out;
  out.prior = prior;
  std::string last_error;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    RngStream rng(cfg.seed, c);
    ChainDiagnostics diag;
    diag.chain = c;
    try {
      auto draws = run_chain(y, prior, cfg, grids, rng, diag);
      for (auto& d : draws) {
        out.draws.push_back(std::move(d));
        out.draw_chain.push_back(c);
      }
    } catch (const std::exception& e) {
      diag.failed = true;
      diag.error = e.what();
      last_error = e.what();
      spdlog::warn("series {}: chain {} failed: {}", series_id, c, e.what());
    }
    out.chains.push_back(std::move(diag));
  }
  if (out.draws.empty()) {
    throw DegenerateSeriesError(fmt::format("series {}: every chain failed ({})", series_id, last_error));
  }
  return out;
}

PosteriorSamples fit(const TimeSeries& series, const PriorConfig& prior, const SamplerConfig& cfg) {
  return fit(series.values, prior, cfg, series.id);
}

ParameterDraw sample_prior(RngStream& rng, const PriorConfig& prior, const ParameterGrids& grids) {
  if (!(prior.chi2_prior_shape > 0.0) || !(prior.chi2_prior_scale > 0.0)) {
    throw std::invalid_argument("prior draws need a proper chi2 prior");
  }
  ParameterDraw theta;
  const auto& nus = grids.nu.candidates;
  theta.nu = nus[static_cast<std::size_t>(rng.uniform() * static_cast<double>(nus.size()))];
  theta.alpha = sample_beta(rng, prior.beta_a, prior.beta_b);
  theta.beta = sample_beta(rng, prior.beta_a, prior.beta_b);
  theta.zeta = sample_beta(rng, prior.beta_a, prior.beta_b);
  theta.chi2 = sample_inverse_gamma(rng, prior.chi2_prior_shape, prior.chi2_prior_scale);

  // Cauchy coefficients as normal / inverse-gamma mixtures.
  theta.xi_gamma2 = sample_inverse_gamma(rng, 0.5, 0.5);
  theta.gamma = sample_normal(rng, 0.0, theta.xi_gamma2 * prior.s_gamma * prior.s_gamma);
  if (!prior.seasonal()) {
    do {
      theta.xi_lambda2 = sample_inverse_gamma(rng, 0.5, 0.5);
      theta.lambda = sample_normal(rng, 0.0, theta.xi_lambda2 * prior.s_lambda * prior.s_lambda);
    } while (theta.lambda < prior.lambda_lower || theta.lambda > prior.lambda_upper);
    do {
      theta.xi_b1_2 = sample_inverse_gamma(rng, 0.5, 0.5);
      theta.b1 = sample_normal(rng, 0.0, theta.xi_b1_2 * prior.s_b1 * prior.s_b1);
    } while (theta.b1 < prior.b1_lower || theta.b1 > prior.b1_upper);
  }

  std::vector<double> rho_w(grids.rho.size());
  for (std::size_t i = 0; i < rho_w.size(); ++i) rho_w[i] = 1.0 / (1.0 + grids.rho[i] * grids.rho[i]);
  theta.rho = grids.rho[sample_categorical(rng, rho_w)];
  if (prior.heteroscedastic()) {
    theta.phi = grids.phi[static_cast<std::size_t>(rng.uniform() * static_cast<double>(grids.phi.size()))];
    theta.tau = grids.tau[static_cast<std::size_t>(rng.uniform() * static_cast<double>(grids.tau.size()))];
  } else {
    theta.phi = 1.0;
  }

  if (prior.seasonal()) {
    const std::size_t m = prior.period;
    theta.psi2.resize(m);
    theta.eta_s.resize(m);
    std::vector<double> var(m);
    if (prior.seasonal_prior.kind == SeasonalPrior::Kind::horseshoe) {
      theta.eta_delta = sample_inverse_gamma(rng, 0.5, 1.0);
      theta.delta2 = sample_inverse_gamma(rng, 0.5, 1.0 / theta.eta_delta);
      for (std::size_t i = 0; i < m; ++i) {
        theta.eta_s[i] = sample_inverse_gamma(rng, 0.5, 1.0);
        theta.psi2[i] = sample_inverse_gamma(rng, 0.5, 1.0 / theta.eta_s[i]);
        var[i] = theta.psi2[i] * theta.delta2;
      }
    } else {
      // Approximate: independent Cauchy mixtures, then conditioned on the sum.
      theta.psi2.assign(m, 1.0);
      theta.eta_s.assign(m, 1.0);
      const double c = prior.seasonal_prior.scale;
      for (std::size_t i = 0; i < m; ++i) var[i] = sample_inverse_gamma(rng, 0.5, 0.5) * c * c;
    }
    // Gaussian draw conditioned on sum zero: z - D 1 (1'z) / (1'D 1).
    std::vector<double> z(m);
    double total = 0.0;
    double total_var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = sample_normal(rng, 0.0, var[i]);
      total += z[i];
      total_var += var[i];
    }
    for (std::size_t i = 0; i < m; ++i) z[i] -= var[i] * total / total_var;
    theta.log_s_init = std::move(z);
    centre_log_seasonals(theta.log_s_init);
  }
  return theta;
}

}  // namespace lsgt
