#include "lsgt/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

namespace lsgt {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
  if (a.empty()) throw std::invalid_argument("metric needs at least one point");
}

}  // namespace

double smape(std::span<const double> actual, std::span<const double> forecast) {
  require_same_length(actual, forecast);
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double den = std::abs(actual[i]) + std::abs(forecast[i]);
    if (den == 0.0) throw DegenerateMetricError(fmt::format("sMAPE denominator is zero at step {}", i));
    total += std::abs(actual[i] - forecast[i]) / den;
  }
  return 200.0 * total / static_cast<double>(actual.size());
}

double seasonal_naive_scale(std::span<const double> insample, std::size_t s) {
  if (s < 1) throw std::invalid_argument("seasonal lag must be positive");
  if (insample.size() <= s) {
    throw DegenerateMetricError(fmt::format("in-sample length {} does not exceed lag {}", insample.size(), s));
  }
  double total = 0.0;
  for (std::size_t t = s; t < insample.size(); ++t) total += std::abs(insample[t] - insample[t - s]);
  const double scale = total / static_cast<double>(insample.size() - s);
  if (!(scale > 0.0)) throw DegenerateMetricError("in-sample seasonal-naive error is zero");
  return scale;
}

double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> insample, std::size_t s) {
  require_same_length(actual, forecast);
  const double scale = seasonal_naive_scale(insample, s);
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) total += std::abs(actual[i] - forecast[i]);
  return total / static_cast<double>(actual.size()) / scale;
}

double msis(std::span<const double> actual, std::span<const double> lower, std::span<const double> upper,
            double alpha, std::span<const double> insample, std::size_t s) {
  require_same_length(actual, lower);
  require_same_length(actual, upper);
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const double scale = seasonal_naive_scale(insample, s);
  const double penalty = 2.0 / alpha;
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (upper[i] < lower[i]) throw std::invalid_argument(fmt::format("upper < lower at step {}", i));
    total += upper[i] - lower[i];
    if (actual[i] < lower[i]) total += penalty * (lower[i] - actual[i]);
    if (actual[i] > upper[i]) total += penalty * (actual[i] - upper[i]);
  }
  return total / static_cast<double>(actual.size()) / scale;
}

std::map<double, double> coverage_flags(std::span<const double> actual,
                                        const std::map<double, std::vector<double>>& quantile_forecasts) {
  if (quantile_forecasts.empty()) throw std::invalid_argument("no quantile forecasts given");
  if (actual.empty()) throw std::invalid_argument("coverage needs at least one point");
  std::map<double, double> out;
  for (const auto& [level, q] : quantile_forecasts) {
    if (q.size() != actual.size()) {
      throw std::invalid_argument(fmt::format("quantile {} has {} values for {} actuals", level, q.size(),
                                              actual.size()));
    }
    std::size_t below = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) below += actual[i] < q[i] ? 1 : 0;
    out[level] = static_cast<double>(below) / static_cast<double>(actual.size());
  }
  return out;
}

double interval_coverage(std::span<const double> actual, std::span<const double> lower,
                         std::span<const double> upper) {
  require_same_length(actual, lower);
  require_same_length(actual, upper);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) inside += (actual[i] >= lower[i] && actual[i] <= upper[i]) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(actual.size());
}

}  // namespace lsgt
