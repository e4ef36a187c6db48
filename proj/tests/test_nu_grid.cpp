#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace lsgt;
using namespace lsgt::testing;

TEST_CASE("symmetric KL basics") {
  CHECK(symmetric_kl_t(3.0, 3.0) == 0.0);
  CHECK(symmetric_kl_t(2.0, 7.0) == symmetric_kl_t(7.0, 2.0));
  CHECK(symmetric_kl_t(2.0, 4.0) > 0.0);
  CHECK(symmetric_kl_t(2.0, 4.0) == doctest::Approx(symmetric_kl_reference(2.0, 4.0)).epsilon(1e-8));
  CHECK_THROWS_AS(symmetric_kl_t(0.0, 2.0), std::invalid_argument);
}

TEST_CASE("symmetric KL agrees with a Monte-Carlo estimate") {
  // E_p[log p - log q] + E_q[log q - log p] with 1e7 draws each.
  RngStream rng(99, 0);
  auto logpdf = [](double x, double nu) { return student_t_log_density(x, nu, 0.0, 1.0); };
  const int n = 10000000;
  double kl_pq = 0.0, kl_qp = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_student_t(rng, 2.0, 0.0, 1.0);
    kl_pq += logpdf(x, 2.0) - logpdf(x, 4.0);
    const double z = sample_student_t(rng, 4.0, 0.0, 1.0);
    kl_qp += logpdf(z, 4.0) - logpdf(z, 2.0);
  }
  const double mc = (kl_pq + kl_qp) / n;
  CHECK(symmetric_kl_t(2.0, 4.0) == doctest::Approx(mc).epsilon(0.02));
}

TEST_CASE("two-point grid") {
  const auto g = build_nu_grid(1.6, 1000.0, 2);
  CHECK(g.candidates == std::vector<double>{1.6, 1000.0});
}

TEST_CASE("q = 50 grid has equal gaps and is ascending") {
  const auto g = build_nu_grid(1.6, 1000.0, 50);
  REQUIRE(g.size() == 50);
  CHECK(g.candidates.front() == 1.6);
  CHECK(g.candidates.back() == 1000.0);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g.candidates[i] > g.candidates[i - 1]);
    gaps.push_back(symmetric_kl_reference(g.candidates[i - 1], g.candidates[i]));
  }
  const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
  CHECK((*hi - *lo) / *hi < 0.01);
}

TEST_CASE("grid helpers") {
  const auto g = build_nu_grid(1.6, 1000.0, 10);
  CHECK(g.candidates[g.nearest(1.6)] == 1.6);
  CHECK(g.candidates[g.nearest(5000.0)] == 1000.0);
  CHECK(&cached_nu_grid(1.6, 1000.0, 10) == &cached_nu_grid(1.6, 1000.0, 10));
  CHECK(cached_nu_grid(1.6, 1000.0, 10).candidates == g.candidates);
  CHECK_THROWS_AS(build_nu_grid(5.0, 2.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(build_nu_grid(1.0, 2.0, 1), std::invalid_argument);
  const auto u = uniform_grid(0.0, 1.0, 5);
  CHECK(u == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}
