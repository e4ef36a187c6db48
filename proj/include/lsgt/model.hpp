#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsgt {

enum class ModelKind { non_seasonal, seasonal };
enum class VarianceMode { homoscedastic, heteroscedastic };

struct SeasonalPrior {
  enum class Kind { horseshoe, cauchy };
  Kind kind = Kind::horseshoe;
  double scale = 1.0;  // used by the Cauchy prior only

  static SeasonalPrior horseshoe() { return {Kind::horseshoe, 1.0}; }
  static SeasonalPrior cauchy(double scale) { return {Kind::cauchy, scale}; }
  bool operator==(const SeasonalPrior&) const = default;
};

/// Hyperparameters and structural switches of the model.
struct PriorConfig {
  double s_gamma = 1.0;
  double s_lambda = 1.0;
  double s_b1 = 1.0;
  double beta_a = 1.0;  // Beta(a, b) prior on alpha, beta, zeta
  double beta_b = 0.5;
  double nu_lower = 1.6;
  double nu_upper = 1000.0;
  // Optional proper IG(shape, scale) prior on chi2; shape = scale = 0 is
  // the scale-invariant 1/chi2 prior.
  double chi2_prior_shape = 0.0;
  double chi2_prior_scale = 0.0;
  // Truncation bounds for lambda and b1.
  double lambda_lower = -100.0;
  double lambda_upper = 1.0;
  double b1_lower = -100.0;
  double b1_upper = 1.0;
  SeasonalPrior seasonal_prior = SeasonalPrior::horseshoe();
  VarianceMode variance_mode = VarianceMode::heteroscedastic;
  ModelKind model_kind = ModelKind::non_seasonal;
  std::size_t period = 1;

  /// Defaults with s_gamma = s_b1 = max(y)/100 and s_lambda = 1.
  static PriorConfig defaults_for(std::span<const double> y, ModelKind kind, std::size_t period);

  bool seasonal() const { return model_kind == ModelKind::seasonal; }
  bool heteroscedastic() const { return variance_mode == VarianceMode::heteroscedastic; }
  void validate() const;
};

/// One complete posterior sample of parameters and latent variables.
struct ParameterDraw {
  double nu = 10.0;
  double gamma = 0.0;
  double rho = 0.5;
  double lambda = 0.0;
  double alpha = 0.3;
  double beta = 0.3;
  double zeta = 0.3;
  double chi2 = 1.0;
  double phi = 0.5;
  double tau = 0.5;
  double b1 = 0.0;
  std::vector<double> log_s_init;  // length m for seasonal fits, empty otherwise

  // Latent variables. omega2[k] pairs with observation y[k + 1] (0-based).
  std::vector<double> omega2;
  double xi_gamma2 = 1.0;
  double xi_lambda2 = 1.0;
  double xi_b1_2 = 1.0;
  std::vector<double> psi2;   // horseshoe local variances, length m
  std::vector<double> eta_s;  // length m
  double delta2 = 1.0;
  double eta_delta = 1.0;

  bool operator==(const ParameterDraw&) const = default;
};

/// Throws std::domain_error naming the first violated invariant.
void check_invariants(const ParameterDraw& theta, const PriorConfig& cfg);

/// Deterministic trajectories for one parameter setting. Index conventions
/// are 0-based: level[t] and trend[t] for t = 0..T-1; log_season[j] is the
/// log factor applied to time j, j = 0..T+m-1 (the last m feed forecasts);
/// yhat[k], sigma2hat[k] and residual[k] describe y[k + 1], k = 0..T-2.
struct StatePaths {
  std::size_t period = 1;
  std::vector<double> level;
  std::vector<double> trend;
  std::vector<double> log_season;
  std::vector<double> yhat;
  std::vector<double> sigma2hat;
  std::vector<double> residual;
  std::size_t clamp_events = 0;

  std::size_t size() const { return level.size(); }
};

class RecursionError : public std::runtime_error {
 public:
  RecursionError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Levels below this are clamped before fractional powers.
inline constexpr double kLevelFloor = 1e-10;

/// Runs the level / trend / log-seasonal recursions and produces one-step
/// forecasts and conditional variances. Throws RecursionError carrying the
/// offending 0-based time index on a non-finite intermediate.
StatePaths run_recursion(std::span<const double> y, const ParameterDraw& theta,
                         const PriorConfig& cfg);

/// Non-throwing variant that reuses `out`'s storage. Returns false and sets
/// `failed_step` on a non-finite intermediate.
bool run_recursion_into(std::span<const double> y, const ParameterDraw& theta,
                        const PriorConfig& cfg, StatePaths& out, std::size_t* failed_step = nullptr);

/// Conditional variance chi2 (phi^2 + (1-phi)^2 l^{2 tau}); phi is taken as
/// one in homoscedastic mode.
double conditional_variance(double level, const ParameterDraw& theta, const PriorConfig& cfg);

/// Student-t negative log-likelihood of the residuals, including the
/// nu-dependent normalising constants. Returns +inf for non-finite input
/// or when the paths carry clamp events.
double negative_log_likelihood(const StatePaths& paths, double nu);

/// Same as above with the constants dropped (the form the MH steps use).
double negative_log_likelihood_kernel(const StatePaths& paths, double nu);

struct SmoothingGradient {
  double alpha = 0.0;
  double beta = 0.0;
};

/// d(NLL)/d(alpha) and d(NLL)/d(beta) by forward propagation of the
/// recursion derivatives. Seasonal feedback is included for seasonal fits.
SmoothingGradient smoothing_gradient(std::span<const double> y, const ParameterDraw& theta,
                                     const PriorConfig& cfg, const StatePaths& paths);

/// d(NLL)/d(log s_i) for the m-1 free initial log-seasonals, with
/// log s_m = -sum of the others.
std::vector<double> seasonal_gradient(std::span<const double> y, const ParameterDraw& theta,
                                      const PriorConfig& cfg, const StatePaths& paths);

/// Initial log-seasonal factors from period-average ratios to the mean of
/// each complete period, logged and centred to sum zero.
std::vector<double> initial_log_seasonals(std::span<const double> y, std::size_t period);

/// Projects log factors onto the sum-zero constraint by subtracting the mean.
void centre_log_seasonals(std::vector<double>& log_s);

}  // namespace lsgt
