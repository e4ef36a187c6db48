#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsgt/forecast.hpp"
#include "lsgt/model.hpp"
#include "lsgt/sampler.hpp"
#include "lsgt/series.hpp"

namespace lsgt {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = "out";
  ModelKind model_kind = ModelKind::non_seasonal;
  VarianceMode variance_mode = VarianceMode::heteroscedastic;
  SeasonalPrior seasonal_prior = SeasonalPrior::horseshoe();
  SamplerConfig sampler;
  std::vector<double> quantiles = kDefaultQuantiles;
  std::size_t paths_per_draw = 2;
  std::size_t workers = 1;
  std::optional<std::size_t> first_n;
  std::vector<std::string> ids;  // empty selects everything

  void validate() const;
};

/// Per-series evaluation. Metric fields are empty when their denominator
/// was degenerate.
struct EvalRecord {
  std::string id;
  std::string category;
  std::string model;  // "lgt" or "sgt", the model actually fitted
  bool fell_back = false;
  std::optional<double> smape;
  std::optional<double> mase;
  std::map<std::string, double> msis;             // "90", "98"
  std::map<std::string, double> below;            // quantile level -> fraction of test points below
  std::map<std::string, std::vector<int>> below_flags;  // per-horizon indicators
  std::optional<double> coverage_90;
  std::vector<double> actual;
  std::vector<double> point;
  std::map<std::string, std::vector<double>> quantiles;
  double smoothing_acceptance = 0.0;
  std::size_t draws = 0;
  std::size_t floor_events = 0;
  double runtime_seconds = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

struct CategorySummary {
  std::string category;
  std::size_t series = 0;
  std::size_t metric_series = 0;  // series with finite sMAPE/MASE
  std::optional<double> smape;
  std::optional<double> mase;
  std::map<std::string, double> msis;
  std::map<std::string, double> below_percent;
  std::optional<double> coverage_90_percent;
  double mean_runtime_seconds = 0.0;

  bool operator==(const CategorySummary&) const = default;
};

struct SeriesError {
  std::string id;
  std::string message;
  bool operator==(const SeriesError&) const = default;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::vector<CategorySummary> categories;
  std::vector<EvalRecord> records;
  std::vector<SeriesError> errors;
  std::size_t excluded_metrics = 0;

  bool operator==(const RunSummary&) const = default;
};

/// Seed for one series: depends on the run seed and the id only.
std::uint64_t series_seed(std::uint64_t seed, const std::string& id);

/// Formats a probability level as a stable key ("0.05", "0.5").
std::string level_key(double level);

std::vector<TimeSeries> select_series(const std::vector<TimeSeries>& all, const RunConfig& cfg);

/// Split, fit, forecast and score one series.
EvalRecord evaluate_series(const TimeSeries& series, const RunConfig& cfg);

/// Category aggregates as arithmetic means over records.
std::vector<CategorySummary> aggregate(const std::vector<EvalRecord>& records);

RunSummary run_benchmark(const RunConfig& cfg);
RunSummary run_benchmark(const std::vector<TimeSeries>& series, const RunConfig& cfg);

enum class ReportFormat { json, csv, markdown };

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);
/// Per-series record without runtime, so output is identical across worker counts.
std::string record_to_json(const EvalRecord& record);
std::string records_to_csv(const RunSummary& summary);
std::string summary_to_markdown(const RunSummary& summary);

/// Writes summary.json, records.csv, table.md and records/<id>.json under `dir`.
void emit_report(const RunSummary& summary, const std::filesystem::path& dir);
void emit_report(const RunSummary& summary, const std::filesystem::path& dir, ReportFormat format);

}  // namespace lsgt
