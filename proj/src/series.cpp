#include "lsgt/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace lsgt {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& tok, std::size_t record) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(fmt::format("record {}: '{}' is not a number", record, tok), record);
  }
  return v;
}

std::size_t parse_count(const std::string& tok, std::size_t record, const char* field) {
  std::size_t v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || v == 0) {
    throw ParseError(fmt::format("record {}: field {} must be a positive integer, got '{}'", record,
                                 field, tok),
                     record);
  }
  return v;
}

}  // namespace

void validate(const TimeSeries& series) {
  if (series.values.size() < 2) {
    throw ValidationError(fmt::format("series {}: needs at least 2 observations", series.id),
                          series.id, series.values.size());
  }
  if (series.period == 0 || series.horizon == 0) {
    throw ValidationError(fmt::format("series {}: m and h must be positive", series.id), series.id,
                          0);
  }
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double v = series.values[i];
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError(
          fmt::format("series {}: value {} at index {} is not strictly positive", series.id, v, i),
          series.id, i);
    }
  }
}

std::vector<TimeSeries> parse_csv(const std::string& text) {
  std::vector<TimeSeries> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_on(line, ',');
    if (!header_seen) {
      if (fields != std::vector<std::string>{"id", "category", "m", "h", "values"}) {
        throw ParseError(fmt::format("line {}: expected header id,category,m,h,values", lineno),
                         lineno);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) {
      throw ParseError(fmt::format("line {}: expected 5 fields, got {}", lineno, fields.size()),
                       lineno);
    }
    TimeSeries s;
    s.id = fields[0];
    if (s.id.empty()) throw ParseError(fmt::format("line {}: empty id", lineno), lineno);
    if (!fields[1].empty()) s.category = fields[1];
    s.period = parse_count(fields[2], lineno, "m");
    s.horizon = parse_count(fields[3], lineno, "h");
    for (const auto& tok : split_on(fields[4], ';')) {
      if (tok.empty()) throw ParseError(fmt::format("line {}: empty value", lineno), lineno);
      s.values.push_back(parse_double(tok, lineno));
    }
    validate(s);
    out.push_back(std::move(s));
  }
  if (!header_seen) throw ParseError("missing CSV header", 0);
  return out;
}

std::vector<TimeSeries> parse_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("invalid JSON at byte {}: {}", e.byte, e.what()), 0);
  }
  if (!doc.is_array()) throw ParseError("top-level JSON value must be an array", 0);
  std::vector<TimeSeries> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    try {
      TimeSeries s;
      s.id = rec.at("id").get<std::string>();
      if (rec.contains("category") && !rec["category"].is_null()) {
        s.category = rec["category"].get<std::string>();
      }
      const auto m = rec.at("m").get<long long>();
      const auto h = rec.at("h").get<long long>();
      if (m <= 0 || h <= 0) throw ParseError(fmt::format("record {}: m and h must be positive", i), i);
      s.period = static_cast<std::size_t>(m);
      s.horizon = static_cast<std::size_t>(h);
      s.values = rec.at("values").get<std::vector<double>>();
      validate(s);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("record {}: {}", i, e.what()), i);
    }
  }
  return out;
}

std::string to_json(const std::vector<TimeSeries>& series) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out += fmt::format("{{\"id\":{},\"category\":{},\"m\":{},\"h\":{},\"values\":[",
                       nlohmann::json(s.id).dump(),
                       s.category ? nlohmann::json(*s.category).dump() : std::string("null"),
                       s.period, s.horizon);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (k) out += ',';
      out += fmt::format("{}", s.values[k]);
    }
    out += "]}";
    out += (i + 1 < series.size()) ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

std::string to_csv(const std::vector<TimeSeries>& series) {
  std::string out = "id,category,m,h,values\n";
  for (const auto& s : series) {
    out += fmt::format("{},{},{},{},", s.id, s.category.value_or(""), s.period, s.horizon);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (k) out += ';';
      out += fmt::format("{}", s.values[k]);
    }
    out += '\n';
  }
  return out;
}

CollectionFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return CollectionFormat::csv;
  if (ext == ".json") return CollectionFormat::json;
  throw std::invalid_argument("cannot infer collection format from extension of " + path.string());
}

std::vector<TimeSeries> load_collection(const std::filesystem::path& path, CollectionFormat format) {
  const auto text = read_file(path);
  return format == CollectionFormat::csv ? parse_csv(text) : parse_json(text);
}

std::vector<TimeSeries> load_collection(const std::filesystem::path& path) {
  return load_collection(path, format_from_path(path));
}

void save_collection(const std::filesystem::path& path, const std::vector<TimeSeries>& series,
                     CollectionFormat format) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (format == CollectionFormat::csv ? to_csv(series) : to_json(series));
}

TrainTestSplit split(const TimeSeries& series) {
  const auto n = series.values.size();
  const auto h = series.horizon;
  if (n <= h) {
    throw std::invalid_argument(
        fmt::format("series {}: length {} does not exceed horizon {}", series.id, n, h));
  }
  TrainTestSplit out;
  out.train = series;
  out.train.values.assign(series.values.begin(), series.values.end() - static_cast<long>(h));
  out.test.assign(series.values.end() - static_cast<long>(h), series.values.end());
  return out;
}

}  // namespace lsgt
