#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>

#include "test_support.hpp"

using namespace lsgt;
using namespace lsgt::testing;

namespace {

constexpr int kDraws = 1000000;

template <class F>
std::pair<double, double> mean_var(F draw, int n = kDraws) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  return {m, s2 / n - m * m};
}

}  // namespace

TEST_CASE("philox known answer") {
  const auto out = RngStream::philox({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ_c = differ_c || x != c.next_u64();
    differ_d = differ_d || x != d.next_u64();
  }
  CHECK(differ_c);
  CHECK(differ_d);
}

TEST_CASE("inverse gamma with shape one has exponential reciprocal") {
  RngStream rng(1, 0);
  const double beta = 2.5;
  const auto [m, v] = mean_var([&] { return 1.0 / sample_inverse_gamma(rng, 1.0, beta); });
  CHECK(m == doctest::Approx(1.0 / beta).epsilon(0.01));
  CHECK(v == doctest::Approx(1.0 / (beta * beta)).epsilon(0.01));
}

TEST_CASE("inverse gamma moments") {
  RngStream rng(2, 0);
  const auto [m, v] = mean_var([&] { return sample_inverse_gamma(rng, 3.0, 2.0); });
  CHECK(m == doctest::Approx(1.0).epsilon(0.01));
  RngStream rng2(3, 0);
  const auto [m2, v2] = mean_var([&] { return sample_inverse_gamma(rng2, 6.0, 5.0); });
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.01));
  CHECK(v2 == doctest::Approx(25.0 / (25.0 * 4.0)).epsilon(0.01));
  (void)v;
}

TEST_CASE("invalid distribution parameters throw") {
  RngStream rng(0, 0);
  CHECK_THROWS_AS(sample_inverse_gamma(rng, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_inverse_gamma(rng, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_beta(rng, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_normal(rng, 0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_uniform(rng, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_gamma(rng, -2.0), std::invalid_argument);
}

TEST_CASE("normal moments") {
  RngStream rng(4, 0);
  const auto [m, v] = mean_var([&] { return sample_normal(rng, 0.0, 1.0); });
  CHECK(std::abs(m) < 3e-3);
  CHECK(v == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("beta(1, 1/2) moments") {
  RngStream rng(5, 0);
  const auto [m, v] = mean_var([&] { return sample_beta(rng, 1.0, 0.5); });
  CHECK(m == doctest::Approx(2.0 / 3.0).epsilon(0.01));
  // a b / ((a+b)^2 (a+b+1))
  CHECK(v == doctest::Approx(0.5 / (2.25 * 2.5)).epsilon(0.01));
}

TEST_CASE("gamma moments for small and large shapes") {
  for (double shape : {0.3, 1.0, 7.5}) {
    RngStream rng(6, static_cast<std::uint64_t>(shape * 10));
    const auto [m, v] = mean_var([&] { return sample_gamma(rng, shape); });
    CHECK(m == doctest::Approx(shape).epsilon(0.01));
    CHECK(v == doctest::Approx(shape).epsilon(0.01));
  }
}

TEST_CASE("uniform bounds") {
  RngStream rng(7, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double u = sample_uniform(rng, 0.0, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("categorical frequencies") {
  RngStream rng(8, 0);
  const std::vector<double> w0{1, 0, 0};
  for (int i = 0; i < 1000; ++i) CHECK(sample_categorical(rng, w0) == 0);

  const std::vector<double> w1{1, 1};
  int zeros = 0;
  for (int i = 0; i < kDraws; ++i) zeros += sample_categorical(rng, w1) == 0;
  CHECK(std::abs(zeros / double(kDraws) - 0.5) < 0.01);

  const std::vector<double> w2{1, 2, 3};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < kDraws; ++i) ++counts[sample_categorical(rng, w2)];
  CHECK(std::abs(counts[0] / double(kDraws) - 1.0 / 6.0) < 0.01);
  CHECK(std::abs(counts[1] / double(kDraws) - 1.0 / 3.0) < 0.01);
  CHECK(std::abs(counts[2] / double(kDraws) - 0.5) < 0.01);

  const std::vector<double> zero{0, 0};
  const std::vector<double> bad{1, std::nan("")};
  CHECK_THROWS_AS(sample_categorical(rng, zero), std::invalid_argument);
  CHECK_THROWS_AS(sample_categorical(rng, bad), std::invalid_argument);
}

TEST_CASE("log categorical is stable for huge offsets") {
  RngStream rng(9, 0);
  const std::vector<double> lw{-1e6, -1e6 + std::log(3.0), -std::numeric_limits<double>::infinity()};
  int first = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto k = sample_log_categorical(rng, lw);
    CHECK(k < 2);
    first += k == 0;
  }
  CHECK(std::abs(first / double(n) - 0.25) < 0.01);
}

TEST_CASE("student t log density") {
  CHECK(student_t_log_density(0.0, 1e6, 0.0, 1.0) == doctest::Approx(-0.9189385).epsilon(1e-3));
  CHECK(student_t_log_density(2.0, 1.0, 2.0, 3.0) == doctest::Approx(-std::log(M_PI * 3.0)).epsilon(1e-14));
  boost::math::students_t d(4.5);
  CHECK(student_t_log_density(1.7, 4.5, 0.0, 1.0) == doctest::Approx(std::log(boost::math::pdf(d, 1.7))).epsilon(1e-12));
}

TEST_CASE("normal / inverse-gamma mixture is Student t") {
  for (double nu : {2.0, 5.0, 30.0}) {
    RngStream rng(10, static_cast<std::uint64_t>(nu));
    std::vector<double> xs(100000);
    for (auto& x : xs) x = sample_normal(rng, 0.0, sample_inverse_gamma(rng, nu / 2, nu / 2));
    boost::math::students_t d(nu);
    CHECK(ks_p_value(xs, [&](double x) { return boost::math::cdf(d, x); }) > 0.01);
  }
}

TEST_CASE("sampled Student t matches its cdf") {
  RngStream rng(12, 0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_student_t(rng, 3.0, 1.0, 2.0);
  boost::math::students_t d(3.0);
  CHECK(ks_p_value(xs, [&](double x) { return boost::math::cdf(d, (x - 1.0) / 2.0); }) > 0.01);
}

TEST_CASE("hash and splitmix are fixed functions") {
  CHECK(hash_string("") == 0xcbf29ce484222325ull);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cull);
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(0) != splitmix64(1));
}
