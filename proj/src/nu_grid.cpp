#include "lsgt/nu_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace lsgt {

namespace {

constexpr double kQuadratureTolerance = 1e-10;
constexpr std::size_t kTableSize = 2000;
constexpr double kNuCeiling = 1e9;

struct TLogDensity {
  double nu;
  double log_norm;
  explicit TLogDensity(double v)
      : nu(v),
        log_norm(std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) - 0.5 * std::log(v * M_PI)) {}
  double operator()(double x) const { return log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu); }
};

double tail_root(double lo, double hi, const auto& f) {
  boost::math::tools::eps_tolerance<double> tol(45);
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

std::size_t NuGrid::nearest(double nu) const {
  if (candidates.empty()) throw std::logic_error("empty nu grid");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double d = std::abs(std::log(candidates[i]) - std::log(nu));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double symmetric_kl_t(double nu1, double nu2) {
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) {
    throw std::invalid_argument("degrees of freedom must be positive");
  }
  if (nu1 == nu2) return 0.0;
  // Canonical argument order makes the result exactly symmetric.
  const TLogDensity p(std::min(nu1, nu2));
  const TLogDensity q(std::max(nu1, nu2));
  auto integrand = [&](double x) {
    const double lp = p(x);
    const double lq = q(x);
    const double diff = lp - lq;
    // (p - q)(log p - log q), with p - q = p (1 - exp(lq - lp)).
    return std::exp(lp) * -std::expm1(-diff) * diff;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double half =
      integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(),
                           kQuadratureTolerance, &error, &l1);
  if (!(error <= 1e-6 * l1 + 1e-15)) {
    throw std::runtime_error(fmt::format(
        "symmetric KL quadrature did not converge for ({}, {}): error {} vs integral {} (tolerance {})",
        nu1, nu2, error, half, kQuadratureTolerance));
  }
  return 2.0 * half;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t q) {
  if (q == 0) throw std::invalid_argument("grid needs at least one candidate");
  if (q == 1) return {lo};
  std::vector<double> out(q);
  for (std::size_t i = 0; i < q; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(q - 1);
  }
  out.back() = hi;
  return out;
}

NuGrid build_nu_grid(double nu_lower, double nu_upper, std::size_t q) {
  if (!(nu_lower > 0.0) || !(nu_lower < nu_upper)) {
    throw std::invalid_argument(
        fmt::format("nu grid bounds must satisfy 0 < lower < upper, got [{}, {}]", nu_lower, nu_upper));
  }
  if (q < 2) throw std::invalid_argument("nu grid needs at least two candidates");
  if (q == 2) return NuGrid{{nu_lower, nu_upper}};

  // Dense monotone table of cumulative sqrt-sKL arc length in log(nu).
  std::vector<double> table_nu(kTableSize);
  std::vector<double> arc(kTableSize, 0.0);
  const double log_lo = std::log(nu_lower);
  const double log_hi = std::log(nu_upper);
  for (std::size_t j = 0; j < kTableSize; ++j) {
    table_nu[j] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(j) / (kTableSize - 1));
  }
  table_nu.front() = nu_lower;
  table_nu.back() = nu_upper;
  for (std::size_t j = 1; j < kTableSize; ++j) {
    arc[j] = arc[j - 1] + std::sqrt(symmetric_kl_t(table_nu[j - 1], table_nu[j]));
  }
  const double total_arc = arc.back();

  // Arc coordinate -> nu by bisection on the table, linear in log(nu) within a cell.
  auto nu_at_arc = [&](double a) {
    if (a >= total_arc) {
      // Extrapolate beyond the upper bound using the last cell's slope.
      const double slope = (std::log(table_nu[kTableSize - 1]) - std::log(table_nu[kTableSize - 2])) /
                           (arc[kTableSize - 1] - arc[kTableSize - 2]);
      return std::exp(log_hi + slope * (a - total_arc));
    }
    const auto it = std::upper_bound(arc.begin(), arc.end(), a);
    const std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - arc.begin()));
    const double w = (a - arc[j - 1]) / (arc[j] - arc[j - 1]);
    return std::exp((1.0 - w) * std::log(table_nu[j - 1]) + w * std::log(table_nu[j]));
  };
  auto arc_at_nu = [&](double nu) {
    if (nu >= nu_upper) return total_arc;
    const auto it = std::upper_bound(table_nu.begin(), table_nu.end(), nu);
    const std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - table_nu.begin()));
    const double w = (std::log(nu) - std::log(table_nu[j - 1])) /
                     (std::log(table_nu[j]) - std::log(table_nu[j - 1]));
    return (1.0 - w) * arc[j - 1] + w * arc[j];
  };

  // Shooting: march q-1 steps of exact symmetric-KL gap c from nu_lower and
  // solve for the c that lands on nu_upper.
  std::vector<double> grid(q);
  auto march = [&](double c) {
    grid[0] = nu_lower;
    for (std::size_t i = 1; i < q; ++i) {
      const double prev = grid[i - 1];
      auto gap = [&](double x) { return symmetric_kl_t(prev, x) - c; };
      double hi = std::max(nu_at_arc(arc_at_nu(prev) + std::sqrt(c)) * 1.05, prev * 1.001);
      while (gap(hi) < 0.0) {
        if (hi >= kNuCeiling) return std::numeric_limits<double>::infinity();
        hi = std::min(hi * 2.0, kNuCeiling);
      }
      grid[i] = tail_root(prev, hi, gap);
    }
    return grid[q - 1];
  };
  auto miss = [&](double c) {
    const double end = march(c);
    return std::isfinite(end) ? std::log(end) - log_hi : 50.0;
  };

  const double c0 = std::pow(total_arc / static_cast<double>(q - 1), 2.0);
  double c_lo = 0.8 * c0;
  double c_hi = 1.25 * c0;
  while (miss(c_lo) > 0.0) c_lo *= 0.8;
  while (miss(c_hi) < 0.0) c_hi *= 1.25;
  const double c = tail_root(c_lo, c_hi, miss);
  march(c);
  grid.back() = nu_upper;
  for (std::size_t i = 1; i < q; ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw std::runtime_error("nu grid root finding produced a non-ascending grid");
    }
  }
  return NuGrid{std::move(grid)};
}

const NuGrid& cached_nu_grid(double nu_lower, double nu_upper, std::size_t q) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, std::size_t>, NuGrid> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(nu_lower, nu_upper, q);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_nu_grid(nu_lower, nu_upper, q)).first;
  return it->second;
}

}  // namespace lsgt
