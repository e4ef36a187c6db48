#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>

#include "test_support.hpp"

using namespace lsgt;
using namespace lsgt::testing;

namespace {

const PriorConfig kNonSeasonal = make_prior(ModelKind::non_seasonal, 1, VarianceMode::heteroscedastic);

ParameterDraw base_theta() {
  ParameterDraw th;
  th.alpha = 0.4;
  th.beta = 0.2;
  th.gamma = 0.0;
  th.lambda = 0.0;
  th.rho = 0.5;
  th.chi2 = 1.3;
  th.phi = 0.6;
  th.tau = 0.4;
  th.b1 = 0.1;
  return th;
}

const std::vector<double> kY{10, 12, 11, 14, 15, 13, 17, 18, 20, 19, 22, 24};

// Straight-line reference with a ring buffer of the m latest log factors.
struct Reference {
  std::vector<double> level, trend, yhat, sigma2;
};

Reference reference_recursion(const std::vector<double>& y, const ParameterDraw& th, const PriorConfig& cfg) {
  const std::size_t m = cfg.seasonal() ? cfg.period : 1;
  std::vector<double> ring(m, 0.0);
  if (cfg.seasonal()) ring = th.log_s_init;
  const double lam = cfg.seasonal() ? 0.0 : th.lambda;
  const double phi = cfg.heteroscedastic() ? th.phi : 1.0;
  Reference r;
  double l = 0, b = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double ls_t = ring[t % m];
    const double des = y[t] * std::exp(-ls_t);
    const double lprev = l;
    if (t == 0) {
      l = des;
      b = th.b1;
    } else {
      l = th.alpha * des + (1.0 - th.alpha) * lprev;
      b = th.beta * (l - lprev) + (1.0 - th.beta) * b;
    }
    if (cfg.seasonal()) ring[t % m] = th.zeta * std::log(y[t] / l) + (1.0 - th.zeta) * ls_t;
    r.level.push_back(l);
    r.trend.push_back(b);
    if (t + 1 < y.size()) {
      const double ls_next = ring[(t + 1) % m];
      r.yhat.push_back((l + th.gamma * std::pow(l, th.rho) + lam * b) * std::exp(ls_next));
      r.sigma2.push_back(phi == 1.0 ? th.chi2
                                    : th.chi2 * (phi * phi + (1.0 - phi) * (1.0 - phi) * std::pow(l, 2.0 * th.tau)));
    }
  }
  return r;
}

}  // namespace

TEST_CASE("alpha = 1 tracks the data") {
  auto th = base_theta();
  th.alpha = 1.0;
  const auto p = run_recursion(kY, th, kNonSeasonal);
  for (std::size_t t = 0; t < kY.size(); ++t) CHECK(p.level[t] == doctest::Approx(kY[t]).epsilon(1e-14));
}

TEST_CASE("alpha = 0 keeps the first level") {
  auto th = base_theta();
  th.alpha = 0.0;
  const auto p = run_recursion(kY, th, kNonSeasonal);
  for (double l : p.level) CHECK(l == kY[0]);
}

TEST_CASE("no trends means yhat equals level") {
  auto th = base_theta();
  const auto p = run_recursion(kY, th, kNonSeasonal);
  for (std::size_t k = 0; k < p.yhat.size(); ++k) CHECK(p.yhat[k] == p.level[k]);
}

TEST_CASE("phi = 1 gives constant variance") {
  auto th = base_theta();
  th.phi = 1.0;
  const auto p = run_recursion(kY, th, kNonSeasonal);
  for (double s2 : p.sigma2hat) CHECK(s2 == th.chi2);
  auto homo = kNonSeasonal;
  homo.variance_mode = VarianceMode::homoscedastic;
  th.phi = 0.3;
  const auto q = run_recursion(kY, th, homo);
  for (double s2 : q.sigma2hat) CHECK(s2 == th.chi2);
}

TEST_CASE("recursion matches a straight-line reference bit for bit") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const bool seasonal = rep % 2 == 1;
    const auto cfg = seasonal ? make_prior(ModelKind::seasonal, 4, VarianceMode::heteroscedastic) : kNonSeasonal;
    const auto th = random_theta(rng, cfg, 30);
    const auto y = simulate_positive(rng, th, cfg, 30);
    const auto p = run_recursion(y, th, cfg);
    const auto r = reference_recursion(y, th, cfg);
    CHECK(p.level == r.level);
    CHECK(p.trend == r.trend);
    CHECK(p.yhat == r.yhat);
    CHECK(p.sigma2hat == r.sigma2);
  }
}

TEST_CASE("zero residuals leave only the scale terms") {
  auto th = base_theta();
  th.alpha = 1.0;
  const std::vector<double> flat(8, 5.0);
  auto cfg = kNonSeasonal;
  const auto p = run_recursion(flat, th, cfg);
  const double nu = 4.0;
  double expected = 0.0;
  for (double s2 : p.sigma2hat) {
    expected += 0.5 * std::log(s2) + std::lgamma(0.5 * nu) - std::lgamma(0.5 * (nu + 1)) + 0.5 * std::log(nu * M_PI);
  }
  CHECK(negative_log_likelihood(p, nu) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single residual with nu = 1 is a Cauchy density") {
  StatePaths p;
  p.level = {1.0, 1.0};
  p.trend = {0.0, 0.0};
  p.log_season = {0.0, 0.0, 0.0};
  p.yhat = {1.0};
  p.sigma2hat = {1.0};
  for (double e : {0.0, 0.7, -2.5, 10.0}) {
    p.residual = {e};
    const double cauchy = -std::log(M_PI * (1.0 + e * e));
    CHECK(-negative_log_likelihood(p, 1.0) == doctest::Approx(cauchy).epsilon(1e-12));
  }
}

TEST_CASE("likelihood equals a sum of textbook Student-t log densities") {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const auto th = random_theta(rng, kNonSeasonal, 25);
    const auto y = simulate_positive(rng, th, kNonSeasonal, 25);
    const auto p = run_recursion(y, th, kNonSeasonal);
    boost::math::students_t dist(th.nu);
    double total = 0.0;
    for (std::size_t k = 0; k < p.residual.size(); ++k) {
      const double s = std::sqrt(p.sigma2hat[k]);
      total += std::log(boost::math::pdf(dist, p.residual[k] / s) / s);
    }
    CHECK(-negative_log_likelihood(p, th.nu) == doctest::Approx(total).epsilon(1e-10));
  }
}

TEST_CASE("invalid paths give +inf, not a crash") {
  StatePaths p;
  p.residual = {std::nan("")};
  p.sigma2hat = {1.0};
  CHECK(std::isinf(negative_log_likelihood(p, 3.0)));
  p.residual = {0.1};
  p.clamp_events = 1;
  CHECK(std::isinf(negative_log_likelihood(p, 3.0)));
  p.clamp_events = 0;
  CHECK(std::isinf(negative_log_likelihood(p, -1.0)));
}

TEST_CASE("seasonal sum constraint and product") {
  const std::vector<double> y{10, 20, 30, 40, 12, 22, 33, 41, 11, 19, 31, 44};
  const auto s = initial_log_seasonals(y, 4);
  double sum = 0.0, prod = 1.0;
  for (double v : s) {
    sum += v;
    prod *= std::exp(v);
  }
  CHECK(std::abs(sum) < 1e-10);
  CHECK(std::abs(prod - 1.0) < 1e-10);
  CHECK(s[0] < s[3]);
}

TEST_CASE("seasonal model with zero factors and zeta = 0 equals the non-seasonal model") {
  auto th = base_theta();
  th.gamma = 0.3;
  th.rho = 0.7;
  th.lambda = 0.0;
  th.zeta = 0.0;
  th.log_s_init.assign(4, 0.0);
  const auto seasonal = make_prior(ModelKind::seasonal, 4, VarianceMode::heteroscedastic);
  const auto a = run_recursion(kY, th, seasonal);
  th.log_s_init.clear();
  const auto b = run_recursion(kY, th, kNonSeasonal);
  CHECK(a.level == b.level);
  CHECK(a.yhat == b.yhat);
  CHECK(a.sigma2hat == b.sigma2hat);
}

TEST_CASE("non-seasonal paths keep log seasons at zero") {
  const auto p = run_recursion(kY, base_theta(), kNonSeasonal);
  for (double v : p.log_season) CHECK(v == 0.0);
}

TEST_CASE("recursion is deterministic") {
  const auto a = run_recursion(kY, base_theta(), kNonSeasonal);
  const auto b = run_recursion(kY, base_theta(), kNonSeasonal);
  CHECK(a.level == b.level);
  CHECK(a.residual == b.residual);
}

TEST_CASE("non-finite state is reported with its step") {
  auto th = base_theta();
  std::vector<double> y = kY;
  y[5] = std::numeric_limits<double>::infinity();
  try {
    run_recursion(y, th, kNonSeasonal);
    FAIL("expected a recursion error");
  } catch (const RecursionError& e) {
    CHECK(e.step() == 5);
  }
}

TEST_CASE("tiny levels are clamped and flagged") {
  auto th = base_theta();
  th.gamma = 1.0;
  th.rho = 0.5;
  const std::vector<double> y{1e-12, 1e-12, 1e-12};
  th.alpha = 0.5;
  const auto p = run_recursion(y, th, kNonSeasonal);
  CHECK(p.clamp_events > 0);
  CHECK(std::isinf(negative_log_likelihood(p, 5.0)));
}

TEST_CASE("smoothing gradients match finite differences") {
  RngStream rng(21, 0);
  for (int rep = 0; rep < 6; ++rep) {
    const bool seasonal = rep % 2 == 1;
    const auto cfg = seasonal ? make_prior(ModelKind::seasonal, 4, VarianceMode::heteroscedastic) : kNonSeasonal;
    const auto th = random_theta(rng, cfg, 30);
    const auto y = simulate_positive(rng, th, cfg, 30);
    const auto p = run_recursion(y, th, cfg);
    const auto g = smoothing_gradient(y, th, cfg, p);
    auto along = [&](double ParameterDraw::*field) {
      return [&, field](double v) {
        auto t = th;
        t.*field = v;
        return negative_log_likelihood_kernel(run_recursion(y, t, cfg), t.nu);
      };
    };
    CHECK(g.alpha == doctest::Approx(central_difference(along(&ParameterDraw::alpha), th.alpha)).epsilon(1e-4));
    CHECK(g.beta == doctest::Approx(central_difference(along(&ParameterDraw::beta), th.beta)).epsilon(1e-4));
  }
}

TEST_CASE("seasonal gradient matches finite differences") {
  RngStream rng(22, 0);
  const auto cfg = make_prior(ModelKind::seasonal, 4, VarianceMode::heteroscedastic);
  for (int rep = 0; rep < 4; ++rep) {
    const auto th = random_theta(rng, cfg, 32);
    const auto y = simulate_positive(rng, th, cfg, 32);
    const auto g = seasonal_gradient(y, th, cfg, run_recursion(y, th, cfg));
    REQUIRE(g.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      auto f = [&](double v) {
        auto t = th;
        const double d = v - th.log_s_init[i];
        t.log_s_init[i] += d;
        t.log_s_init[3] -= d;
        return negative_log_likelihood_kernel(run_recursion(y, t, cfg), t.nu);
      };
      CHECK(g[i] == doctest::Approx(central_difference(f, th.log_s_init[i])).epsilon(1e-4));
    }
  }
}

TEST_CASE("invariant checks") {
  auto th = base_theta();
  CHECK_NOTHROW(check_invariants(th, kNonSeasonal));
  th.rho = 1.5;
  CHECK_THROWS_AS(check_invariants(th, kNonSeasonal), std::domain_error);
  th = base_theta();
  th.lambda = 2.0;
  CHECK_THROWS_AS(check_invariants(th, kNonSeasonal), std::domain_error);
  th = base_theta();
  const auto seasonal = make_prior(ModelKind::seasonal, 3, VarianceMode::heteroscedastic);
  th.log_s_init = {0.1, 0.2, -0.25};
  th.psi2.assign(3, 1.0);
  th.eta_s.assign(3, 1.0);
  CHECK_THROWS_AS(check_invariants(th, seasonal), std::domain_error);
  th.log_s_init = {0.1, 0.2, -0.3};
  centre_log_seasonals(th.log_s_init);
  CHECK_NOTHROW(check_invariants(th, seasonal));
}

TEST_CASE("prior defaults follow the data scale") {
  const auto p = PriorConfig::defaults_for(kY, ModelKind::non_seasonal, 1);
  CHECK(p.s_gamma == doctest::Approx(0.24));
  CHECK(p.s_b1 == doctest::Approx(0.24));
  CHECK(p.s_lambda == 1.0);
  CHECK(p.beta_a == 1.0);
  CHECK(p.beta_b == 0.5);
  CHECK(p.nu_lower == 1.6);
  CHECK(p.nu_upper == 1000.0);
  PriorConfig bad = p;
  bad.nu_lower = 2000;
  CHECK_THROWS(bad.validate());
}
