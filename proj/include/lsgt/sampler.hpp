#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgt/model.hpp"
#include "lsgt/nu_grid.hpp"
#include "lsgt/random.hpp"
#include "lsgt/series.hpp"

namespace lsgt {

struct SamplerConfig {
  std::size_t iterations = 5000;
  std::size_t burn_in = 2500;
  std::size_t thinning = 1;
  std::size_t chains = 2;
  double mh_target_acceptance = 0.55;
  double step_size_init = 0.1;
  std::uint64_t seed = 0;
  std::size_t nu_grid_size = 100;
  std::size_t rho_grid_size = 64;
  std::size_t phi_grid_size = 64;
  std::size_t tau_grid_size = 64;

  void validate() const;
};

/// Raised when a series gives a conditional with no mass (e.g. a perfectly
/// fitted constant series).
class DegenerateSeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InverseGammaParams {
  double shape;
  double scale;
};

struct NormalParams {
  double mean;
  double variance;
};

/// Observation model y_i ~ N((w x_i + c_i) s_i, sigma2_i) with prior
/// w ~ N(0, prior_variance).
struct ConjugateNormalSpec {
  std::vector<double> y;
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> c;
  std::vector<double> sigma2;
  double prior_variance = 1.0;
};

NormalParams conjugate_normal_posterior(const ConjugateNormalSpec& spec);

/// Candidate sets for the grid-sampled parameters.
struct ParameterGrids {
  NuGrid nu;
  std::vector<double> rho;
  std::vector<double> phi;
  std::vector<double> tau;

  static ParameterGrids make(const PriorConfig& prior, const SamplerConfig& cfg);
};

/// Adaptive step size for one MH block. Adapted by Robbins-Monro on
/// log(step) during burn-in and frozen afterwards.
struct StepState {
  double log_step = std::log(0.1);
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t post_burn_proposals = 0;
  std::size_t post_burn_accepted = 0;
  std::size_t rejected_nonfinite = 0;

  double step() const { return std::exp(log_step); }
  void adapt(std::size_t iteration, double accept_prob, double target);
  void record(bool accepted_move, bool after_burn_in);
  double acceptance_after_burn_in() const;
};

/// Per-series data the conditionals need besides the parameters.
struct SamplerContext {
  std::span<const double> y;
  const PriorConfig& prior;
  const ParameterGrids& grids;
};

// --- Conditional distributions (pure) -------------------------------------

InverseGammaParams chi2_conditional(const StatePaths& paths, const ParameterDraw& theta,
                                    const PriorConfig& prior);
std::vector<InverseGammaParams> omega2_conditional(const StatePaths& paths, const ParameterDraw& theta);
/// Posterior of the Cauchy mixing variance given the coefficient:
/// IG(1, value^2 / (2 scale^2) + 1/2).
InverseGammaParams cauchy_latent_conditional(double value, double scale);

ConjugateNormalSpec gamma_design(std::span<const double> y, const StatePaths& paths,
                                 const ParameterDraw& theta, const PriorConfig& prior);
ConjugateNormalSpec lambda_design(std::span<const double> y, const StatePaths& paths,
                                  const ParameterDraw& theta, const PriorConfig& prior);
ConjugateNormalSpec b1_design(std::span<const double> y, const StatePaths& paths,
                              const ParameterDraw& theta, const PriorConfig& prior);
/// b1 posterior using the alternative-form mean, which only needs the
/// current forecasts and b1.
NormalParams b1_conditional(const StatePaths& paths, const ParameterDraw& theta,
                            const PriorConfig& prior);

InverseGammaParams psi2_conditional(double log_s, double eta, double delta2);
InverseGammaParams delta2_conditional(std::span<const double> log_s, std::span<const double> psi2,
                                      double eta_delta);
InverseGammaParams horseshoe_latent_conditional(double variance);

/// Negative log conditional posteriors over each grid (index-aligned).
std::vector<double> nu_neg_log_posterior(std::span<const double> omega2, std::span<const double> candidates);
std::vector<double> rho_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates,
                                          bool include_penalty = true);
std::vector<double> tau_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates);
std::vector<double> phi_neg_log_posterior(const SamplerContext& ctx, const StatePaths& paths,
                                          const ParameterDraw& theta, std::span<const double> candidates);

/// Draws an index with probability proportional to exp(-L); throws
/// DegenerateSeriesError when no candidate is finite.
std::size_t sample_grid(RngStream& rng, std::span<const double> neg_log_posterior);

// --- Gibbs updates (mutate theta; paths are refreshed when they change) ----

struct UpdateCounters {
  std::size_t truncation_clamps = 0;
};

void update_omega2(RngStream& rng, const StatePaths& paths, ParameterDraw& theta);
void update_chi2(RngStream& rng, const SamplerContext& ctx, StatePaths& paths, ParameterDraw& theta);
void update_nu(RngStream& rng, const SamplerContext& ctx, ParameterDraw& theta);
void update_gamma(RngStream& rng, const SamplerContext& ctx, StatePaths& paths, ParameterDraw& theta);
void update_lambda_b1(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                      ParameterDraw& theta, UpdateCounters& counters);
/// Joint gradient-assisted MH move on logit(alpha), logit(beta) and, for
/// seasonal fits, logit(zeta). Returns true when the proposal is accepted.
bool update_smoothing_mh(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                         ParameterDraw& theta, StepState& step, std::size_t iteration,
                         std::size_t burn_in, double target_acceptance);
/// Gradient-assisted MH move on the m-1 free initial log-seasonals.
bool update_seasonals_mh(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                         ParameterDraw& theta, StepState& step, std::size_t iteration,
                         std::size_t burn_in, double target_acceptance);
void update_horseshoe(RngStream& rng, ParameterDraw& theta);
void update_grid_params(RngStream& rng, const SamplerContext& ctx, StatePaths& paths,
                        ParameterDraw& theta);

/// Draws from a normal truncated to [lo, hi] by resampling up to 100 times,
/// then clamping. `clamped` is set when the cap was hit.
double sample_truncated_normal(RngStream& rng, NormalParams p, double lo, double hi, bool& clamped);

/// Negative log of the smoothing-parameter MH target (likelihood kernel
/// plus Beta priors with the logit Jacobian), as a function of the logits.
double smoothing_target(const SamplerContext& ctx, const StatePaths& paths, const ParameterDraw& theta);
/// Negative log of the seasonal MH target (likelihood kernel plus prior on
/// all m log-seasonals).
double seasonal_target(const SamplerContext& ctx, const StatePaths& paths, const ParameterDraw& theta);
double seasonal_log_prior(const PriorConfig& prior, const ParameterDraw& theta);

// --- Whole-chain driver ---------------------------------------------------

struct ChainDiagnostics {
  std::size_t chain = 0;
  bool failed = false;
  std::string error;
  double smoothing_acceptance = 0.0;
  double seasonal_acceptance = 0.0;
  double smoothing_step = 0.0;
  double seasonal_step = 0.0;
  std::size_t clamp_events = 0;
  std::size_t truncation_clamps = 0;
  std::size_t rejected_nonfinite = 0;
};

struct PosteriorSamples {
  PriorConfig prior;
  std::vector<ParameterDraw> draws;
  std::vector<std::size_t> draw_chain;  // chain index of each draw
  std::vector<ChainDiagnostics> chains;
};

/// Starting values: smoothing 0.3, gamma = lambda = 0, rho = phi = tau = 0.5,
/// nu at the grid point nearest 10, chi2 from first differences, latents at 1.
ParameterDraw initial_draw(std::span<const double> y, const PriorConfig& prior, const ParameterGrids& grids);

/// Runs one chain with its own stream and returns post-burn-in, thinned draws.
std::vector<ParameterDraw> run_chain(std::span<const double> y, const PriorConfig& prior,
                                     const SamplerConfig& cfg, const ParameterGrids& grids,
                                     RngStream& rng, ChainDiagnostics& diag);

/// Fits all chains; chain c uses RngStream(cfg.seed, c). Throws
/// DegenerateSeriesError (naming the series) only if every chain fails.
PosteriorSamples fit(const TimeSeries& series, const PriorConfig& prior, const SamplerConfig& cfg);
PosteriorSamples fit(std::span<const double> y, const PriorConfig& prior, const SamplerConfig& cfg,
                     const std::string& series_id = "series");

/// Draws parameters from the prior (grid parameters uniformly over their
/// grids, rho with weight 1/(1+rho^2)). Requires a proper chi2 prior.
ParameterDraw sample_prior(RngStream& rng, const PriorConfig& prior, const ParameterGrids& grids);

}  // namespace lsgt
