#include "lsgt/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "lsgt/metrics.hpp"

namespace lsgt {

using ojson = nlohmann::ordered_json;

namespace {

// Interval levels reported as MSIS, with their quantile endpoints.
struct IntervalSpec {
  const char* key;
  double lower;
  double upper;
  double alpha;
};
constexpr IntervalSpec kIntervals[] = {{"90", 0.05, 0.95, 0.1}, {"98", 0.01, 0.99, 0.02}};

template <class T>
ojson optional_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

template <class T>
std::optional<T> optional_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

ojson record_json(const EvalRecord& r, bool with_runtime) {
  ojson j;
  j["id"] = r.id;
  j["category"] = r.category;
  j["model"] = r.model;
  j["fell_back"] = r.fell_back;
  j["smape"] = optional_json(r.smape);
  j["mase"] = optional_json(r.mase);
  j["msis"] = r.msis;
  j["below"] = r.below;
  j["below_flags"] = r.below_flags;
  j["coverage_90"] = optional_json(r.coverage_90);
  j["actual"] = r.actual;
  j["point"] = r.point;
  j["quantiles"] = r.quantiles;
  j["smoothing_acceptance"] = r.smoothing_acceptance;
  j["draws"] = r.draws;
  j["floor_events"] = r.floor_events;
  if (with_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

EvalRecord record_from(const ojson& j) {
  EvalRecord r;
  r.id = j.at("id").get<std::string>();
  r.category = j.at("category").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.fell_back = j.at("fell_back").get<bool>();
  r.smape = optional_from<double>(j.at("smape"));
  r.mase = optional_from<double>(j.at("mase"));
  r.msis = j.at("msis").get<std::map<std::string, double>>();
  r.below = j.at("below").get<std::map<std::string, double>>();
  r.below_flags = j.at("below_flags").get<std::map<std::string, std::vector<int>>>();
  r.coverage_90 = optional_from<double>(j.at("coverage_90"));
  r.actual = j.at("actual").get<std::vector<double>>();
  r.point = j.at("point").get<std::vector<double>>();
  r.quantiles = j.at("quantiles").get<std::map<std::string, std::vector<double>>>();
  r.smoothing_acceptance = j.at("smoothing_acceptance").get<double>();
  r.draws = j.at("draws").get<std::size_t>();
  r.floor_events = j.at("floor_events").get<std::size_t>();
  r.runtime_seconds = j.value("runtime_seconds", 0.0);
  return r;
}

ojson category_json(const CategorySummary& c) {
  ojson j;
  j["category"] = c.category;
  j["series"] = c.series;
  j["metric_series"] = c.metric_series;
  j["smape"] = optional_json(c.smape);
  j["mase"] = optional_json(c.mase);
  j["msis"] = c.msis;
  j["below_percent"] = c.below_percent;
  j["coverage_90_percent"] = optional_json(c.coverage_90_percent);
  j["mean_runtime_seconds"] = c.mean_runtime_seconds;
  return j;
}

CategorySummary category_from(const ojson& j) {
  CategorySummary c;
  c.category = j.at("category").get<std::string>();
  c.series = j.at("series").get<std::size_t>();
  c.metric_series = j.at("metric_series").get<std::size_t>();
  c.smape = optional_from<double>(j.at("smape"));
  c.mase = optional_from<double>(j.at("mase"));
  c.msis = j.at("msis").get<std::map<std::string, double>>();
  c.below_percent = j.at("below_percent").get<std::map<std::string, double>>();
  c.coverage_90_percent = optional_from<double>(j.at("coverage_90_percent"));
  c.mean_runtime_seconds = j.at("mean_runtime_seconds").get<double>();
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

std::string safe_file_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out.empty() ? std::string("_") : out;
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "n/a"; }

std::string cell(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? "n/a" : fmt::format("{:.2f}", it->second);
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

}  // namespace

void RunConfig::validate() const {
  if (workers < 1) throw std::invalid_argument("worker count must be at least 1");
  if (paths_per_draw < 1) throw std::invalid_argument("paths per draw must be at least 1");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0)) {
      throw std::invalid_argument(fmt::format("quantile level {} is outside (0, 1)", quantiles[i]));
    }
    if (i > 0 && !(quantiles[i] > quantiles[i - 1])) {
      throw std::invalid_argument("quantile levels must be strictly increasing");
    }
  }
  sampler.validate();
}

std::uint64_t series_seed(std::uint64_t seed, const std::string& id) {
  return splitmix64(seed ^ hash_string(id));
}

std::string level_key(double level) { return fmt::format("{}", level); }

std::vector<TimeSeries> select_series(const std::vector<TimeSeries>& all, const RunConfig& cfg) {
  std::vector<TimeSeries> out;
  if (!cfg.ids.empty()) {
    const std::set<std::string> wanted(cfg.ids.begin(), cfg.ids.end());
    for (const auto& s : all) {
      if (wanted.count(s.id)) out.push_back(s);
    }
  } else {
    out = all;
  }
  if (cfg.first_n && out.size() > *cfg.first_n) out.resize(*cfg.first_n);
  return out;
}

EvalRecord evaluate_series(const TimeSeries& series, const RunConfig& cfg) {
  const TrainTestSplit parts = split(series);
  const auto& train = parts.train.values;

  ModelKind kind = cfg.model_kind;
  bool fell_back = false;
  if (kind == ModelKind::seasonal && !parts.train.supports_seasonal_fit()) {
    spdlog::warn("series {}: period {} with {} training points is too short for a seasonal fit; using the "
                 "non-seasonal model",
                 series.id, series.period, train.size());
    kind = ModelKind::non_seasonal;
    fell_back = true;
  }
  PriorConfig prior = PriorConfig::defaults_for(train, kind, series.period);
  prior.variance_mode = cfg.variance_mode;
  prior.seasonal_prior = cfg.seasonal_prior;

  const std::uint64_t seed = series_seed(cfg.sampler.seed, series.id);
  SamplerConfig scfg = cfg.sampler;
  scfg.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  const PosteriorSamples samples = fit(train, prior, scfg, series.id);
  ForecastConfig fcfg;
  fcfg.horizon = series.horizon;
  fcfg.paths_per_draw = cfg.paths_per_draw;
  fcfg.quantile_levels = cfg.quantiles;
  fcfg.seed = splitmix64(seed + 1);
  const ForecastResult fc = simulate_paths(samples, train, fcfg);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  EvalRecord r;
  r.id = series.id;
  r.category = series.category.value_or("all");
  r.model = kind == ModelKind::seasonal ? "sgt" : "lgt";
  r.fell_back = fell_back;
  r.actual = parts.test;
  r.point = fc.point;
  r.draws = samples.draws.size();
  r.floor_events = fc.floor_events;
  r.runtime_seconds = runtime;
  double acc = 0.0;
  std::size_t ok_chains = 0;
  for (const auto& c : samples.chains) {
    if (!c.failed) {
      acc += c.smoothing_acceptance;
      ++ok_chains;
    }
  }
  r.smoothing_acceptance = ok_chains ? acc / static_cast<double>(ok_chains) : 0.0;

  std::map<double, std::vector<double>> qmap;
  for (std::size_t i = 0; i < fc.levels.size(); ++i) {
    qmap[fc.levels[i]] = fc.quantiles[i];
    r.quantiles[level_key(fc.levels[i])] = fc.quantiles[i];
    std::vector<int> flags(parts.test.size());
    for (std::size_t h = 0; h < flags.size(); ++h) flags[h] = parts.test[h] < fc.quantiles[i][h] ? 1 : 0;
    r.below_flags[level_key(fc.levels[i])] = std::move(flags);
  }
  if (!qmap.empty()) {
    for (const auto& [level, frac] : coverage_flags(parts.test, qmap)) r.below[level_key(level)] = frac;
  }

  const std::size_t lag = std::max<std::size_t>(1, series.period);
  try {
    r.smape = smape(parts.test, fc.point);
  } catch (const DegenerateMetricError& e) {
    spdlog::warn("series {}: sMAPE excluded: {}", series.id, e.what());
  }
  try {
    r.mase = mase(parts.test, fc.point, train, lag);
  } catch (const DegenerateMetricError& e) {
    spdlog::warn("series {}: MASE excluded: {}", series.id, e.what());
  }
  for (const auto& iv : kIntervals) {
    const auto lo = qmap.find(iv.lower);
    const auto hi = qmap.find(iv.upper);
    if (lo == qmap.end() || hi == qmap.end()) continue;
    if (std::string(iv.key) == "90") r.coverage_90 = interval_coverage(parts.test, lo->second, hi->second);
    try {
      r.msis[iv.key] = msis(parts.test, lo->second, hi->second, iv.alpha, train, lag);
    } catch (const DegenerateMetricError& e) {
      spdlog::warn("series {}: MSIS {} excluded: {}", series.id, iv.key, e.what());
    }
  }
  return r;
}

std::vector<CategorySummary> aggregate(const std::vector<EvalRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) {
    if (!groups.count(r.category)) order.push_back(r.category);
    groups[r.category].push_back(&r);
  }
  std::vector<CategorySummary> out;
  for (const auto& name : order) {
    const auto& rs = groups[name];
    CategorySummary c;
    c.category = name;
    c.series = rs.size();
    auto mean_of = [&](auto getter) -> std::optional<double> {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto* r : rs) {
        if (const std::optional<double> v = getter(*r)) {
          sum += *v;
          ++n;
        }
      }
      if (n == 0) return std::nullopt;
      return sum / static_cast<double>(n);
    };
    c.smape = mean_of([](const EvalRecord& r) { return r.smape; });
    c.mase = mean_of([](const EvalRecord& r) { return r.mase; });
    for (const auto* r : rs) c.metric_series += (r->smape && r->mase) ? 1 : 0;
    std::set<std::string> msis_keys;
    std::set<std::string> below_keys;
    for (const auto* r : rs) {
      for (const auto& [k, v] : r->msis) msis_keys.insert(k);
      for (const auto& [k, v] : r->below) below_keys.insert(k);
    }
    for (const auto& k : msis_keys) {
      auto v = mean_of([&](const EvalRecord& r) -> std::optional<double> {
        const auto it = r.msis.find(k);
        return it == r.msis.end() ? std::nullopt : std::optional<double>(it->second);
      });
      if (v) c.msis[k] = *v;
    }
    for (const auto& k : below_keys) {
      auto v = mean_of([&](const EvalRecord& r) -> std::optional<double> {
        const auto it = r.below.find(k);
        return it == r.below.end() ? std::nullopt : std::optional<double>(100.0 * it->second);
      });
      if (v) c.below_percent[k] = *v;
    }
    c.coverage_90_percent = mean_of([](const EvalRecord& r) -> std::optional<double> {
      return r.coverage_90 ? std::optional<double>(100.0 * *r.coverage_90) : std::nullopt;
    });
    c.mean_runtime_seconds = *mean_of([](const EvalRecord& r) { return std::optional<double>(r.runtime_seconds); });
    out.push_back(std::move(c));
  }
  return out;
}

RunSummary run_benchmark(const std::vector<TimeSeries>& all, const RunConfig& cfg) {
  cfg.validate();
  const auto selected = select_series(all, cfg);
  std::vector<std::optional<EvalRecord>> results(selected.size());
  std::vector<std::string> failures(selected.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < selected.size(); i = next++) {
      try {
        results[i] = evaluate_series(selected[i], cfg);
        spdlog::info("series {} done ({:.2f} s)", selected[i].id, results[i]->runtime_seconds);
      } catch (const std::exception& e) {
        failures[i] = e.what();
        if (failures[i].empty()) failures[i] = "unknown error";
        spdlog::error("series {} failed: {}", selected[i].id, e.what());
      }
    }
  };
  {
    const std::size_t n = std::max<std::size_t>(1, std::min(cfg.workers, selected.size()));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  }

  RunSummary summary;
  summary.seed = cfg.sampler.seed;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (results[i]) {
      summary.records.push_back(std::move(*results[i]));
      const auto& r = summary.records.back();
      summary.excluded_metrics += (r.smape ? 0 : 1) + (r.mase ? 0 : 1);
    } else {
      summary.errors.push_back({selected[i].id, failures[i]});
    }
  }
  summary.categories = aggregate(summary.records);
  return summary;
}

RunSummary run_benchmark(const RunConfig& cfg) { return run_benchmark(load_collection(cfg.input), cfg); }

std::string summary_to_json(const RunSummary& summary) {
  ojson j;
  j["seed"] = summary.seed;
  j["excluded_metrics"] = summary.excluded_metrics;
  j["categories"] = ojson::array();
  for (const auto& c : summary.categories) j["categories"].push_back(category_json(c));
  j["records"] = ojson::array();
  for (const auto& r : summary.records) j["records"].push_back(record_json(r, true));
  j["errors"] = ojson::array();
  for (const auto& e : summary.errors) j["errors"].push_back(ojson{{"id", e.id}, {"message", e.message}});
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const ojson j = ojson::parse(text);
  RunSummary s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.excluded_metrics = j.at("excluded_metrics").get<std::size_t>();
  for (const auto& c : j.at("categories")) s.categories.push_back(category_from(c));
  for (const auto& r : j.at("records")) s.records.push_back(record_from(r));
  for (const auto& e : j.at("errors")) {
    s.errors.push_back({e.at("id").get<std::string>(), e.at("message").get<std::string>()});
  }
  return s;
}

std::string record_to_json(const EvalRecord& record) { return record_json(record, false).dump(2) + "\n"; }

std::string records_to_csv(const RunSummary& summary) {
  std::set<std::string> level_set;
  for (const auto& r : summary.records) {
    for (const auto& [k, v] : r.below) level_set.insert(k);
  }
  std::vector<std::string> levels(level_set.begin(), level_set.end());
  std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
    return std::stod(a) < std::stod(b);
  });
  std::ostringstream out;
  out << "id,category,model,smape,mase,msis_90,msis_98,coverage_90";
  for (const auto& l : levels) out << ",below_" << l;
  out << ",runtime_seconds\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  auto lookup = [](const std::map<std::string, double>& m, const std::string& k) -> std::optional<double> {
    const auto it = m.find(k);
    return it == m.end() ? std::nullopt : std::optional<double>(it->second);
  };
  for (const auto& r : summary.records) {
    out << quote(r.id) << ',' << quote(r.category) << ',' << r.model << ',' << csv_number(r.smape) << ','
        << csv_number(r.mase) << ',' << csv_number(lookup(r.msis, "90")) << ','
        << csv_number(lookup(r.msis, "98")) << ',' << csv_number(r.coverage_90);
    for (const auto& l : levels) out << ',' << csv_number(lookup(r.below, l));
    out << ',' << fmt::format("{}", r.runtime_seconds) << '\n';
  }
  return out.str();
}

std::string summary_to_markdown(const RunSummary& summary) {
  std::ostringstream out;
  out << "| Category | sMAPE | MASE | Avg Runtime (s) | Below 99p | Below 95p | Below 5p | Below 1p | MSIS 90p | MSIS 98p |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : summary.categories) {
    out << "| " << c.category << " | " << cell(c.smape) << " | " << cell(c.mase) << " | "
        << fmt::format("{:.2f}", c.mean_runtime_seconds) << " | " << cell(c.below_percent, level_key(0.99)) << " | "
        << cell(c.below_percent, level_key(0.95)) << " | " << cell(c.below_percent, level_key(0.05)) << " | "
        << cell(c.below_percent, level_key(0.01)) << " | " << cell(c.msis, "90") << " | " << cell(c.msis, "98")
        << " |\n";
  }
  return out.str();
}

void emit_report(const RunSummary& summary, const std::filesystem::path& dir, ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  switch (format) {
    case ReportFormat::json: {
      write_file(dir / "summary.json", summary_to_json(summary));
      const auto rec_dir = dir / "records";
      std::filesystem::create_directories(rec_dir, ec);
      if (ec) throw std::runtime_error(fmt::format("cannot create {}: {}", rec_dir.string(), ec.message()));
      for (const auto& r : summary.records) write_file(rec_dir / (safe_file_name(r.id) + ".json"), record_to_json(r));
      break;
    }
    case ReportFormat::csv:
      write_file(dir / "records.csv", records_to_csv(summary));
      break;
    case ReportFormat::markdown:
      write_file(dir / "table.md", summary_to_markdown(summary));
      break;
  }
}

void emit_report(const RunSummary& summary, const std::filesystem::path& dir) {
  emit_report(summary, dir, ReportFormat::json);
  emit_report(summary, dir, ReportFormat::csv);
  emit_report(summary, dir, ReportFormat::markdown);
}

}  // namespace lsgt
