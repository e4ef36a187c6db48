#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsgt {

/// A positive-valued univariate series with its seasonal period and
/// forecast horizon. Immutable after load.
struct TimeSeries {
  std::string id;
  std::vector<double> values;
  std::size_t period = 1;   // m; 1 means non-seasonal
  std::size_t horizon = 1;  // h
  std::optional<std::string> category;

  std::size_t size() const { return values.size(); }
  bool supports_seasonal_fit() const { return period > 1 && values.size() >= 2 * period; }

  bool operator==(const TimeSeries&) const = default;
};

struct TrainTestSplit {
  TimeSeries train;
  std::vector<double> test;
};

enum class CollectionFormat { csv, json };

/// Raised for malformed files. `record` is the 1-based line (CSV) or
/// 0-based array index (JSON) where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t record)
      : std::runtime_error(what), record_(record) {}
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

/// Raised when a parsed series violates the TimeSeries invariants.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::string series_id, std::size_t index)
      : std::runtime_error(what), series_id_(std::move(series_id)), index_(index) {}
  const std::string& series_id() const { return series_id_; }
  std::size_t index() const { return index_; }

 private:
  std::string series_id_;
  std::size_t index_;
};

void validate(const TimeSeries& series);

std::vector<TimeSeries> load_collection(const std::filesystem::path& path, CollectionFormat format);
std::vector<TimeSeries> load_collection(const std::filesystem::path& path);  // format from extension

std::vector<TimeSeries> parse_csv(const std::string& text);
std::vector<TimeSeries> parse_json(const std::string& text);

/// Canonical JSON: one object per line inside a top-level array, fields in
/// the order id, category, m, h, values, numbers in shortest round-trip form.
std::string to_json(const std::vector<TimeSeries>& series);
std::string to_csv(const std::vector<TimeSeries>& series);

void save_collection(const std::filesystem::path& path, const std::vector<TimeSeries>& series,
                     CollectionFormat format);

TrainTestSplit split(const TimeSeries& series);

CollectionFormat format_from_path(const std::filesystem::path& path);

}  // namespace lsgt
