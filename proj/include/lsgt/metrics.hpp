#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsgt {

/// Raised when a metric's denominator is zero.
class DegenerateMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// (200/h) sum |y - f| / (|y| + |f|).
double smape(std::span<const double> actual, std::span<const double> forecast);

/// Mean absolute error scaled by the in-sample seasonal-naive error with lag s.
double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> insample, std::size_t s);

/// Mean scaled interval score for a central (1 - alpha) interval.
double msis(std::span<const double> actual, std::span<const double> lower, std::span<const double> upper,
            double alpha, std::span<const double> insample, std::size_t s);

/// Mean absolute seasonal-naive in-sample difference; throws on zero.
double seasonal_naive_scale(std::span<const double> insample, std::size_t s);

/// Fraction of actuals strictly below each forecast quantile, keyed by level.
std::map<double, double> coverage_flags(std::span<const double> actual,
                                        const std::map<double, std::vector<double>>& quantile_forecasts);

/// Fraction of actuals inside [lower, upper].
double interval_coverage(std::span<const double> actual, std::span<const double> lower,
                         std::span<const double> upper);

}  // namespace lsgt
