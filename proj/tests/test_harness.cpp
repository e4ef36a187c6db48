#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsgt/harness.hpp"
#include "test_support.hpp"

using namespace lsgt;
using namespace lsgt::testing;

namespace {

TimeSeries synthetic(const std::string& id, std::uint64_t seed, std::size_t T, std::size_t period, std::size_t h,
                     std::optional<std::string> category) {
  const auto prior = make_prior(period > 1 ? ModelKind::seasonal : ModelKind::non_seasonal, period,
                                VarianceMode::heteroscedastic);
  RngStream rng(seed, 0);
  auto th = random_theta(rng, prior, T);
  th.chi2 = 0.5;
  return TimeSeries{id, simulate_positive(rng, th, prior, T, 40.0), period, h, std::move(category)};
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.sampler.iterations = 200;
  cfg.sampler.burn_in = 100;
  cfg.sampler.chains = 1;
  cfg.sampler.seed = 17;
  return cfg;
}

std::vector<TimeSeries> collection() {
  return {synthetic("Y1", 1, 20, 1, 6, "yearly"), synthetic("Y2", 2, 24, 1, 6, "yearly"),
          synthetic("Q1", 3, 30, 4, 8, "quarterly"), synthetic("Y3", 4, 18, 1, 6, "yearly"),
          synthetic("X1", 5, 16, 1, 4, std::nullopt)};
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("single synthetic series gives one record") {
  const std::vector<TimeSeries> one{synthetic("S", 8, 25, 1, 5, std::nullopt)};
  const auto s = run_benchmark(one, small_config());
  REQUIRE(s.records.size() == 1);
  CHECK(s.errors.empty());
  const auto& r = s.records[0];
  CHECK(r.id == "S");
  CHECK(r.category == "all");
  CHECK(r.model == "lgt");
  CHECK(r.point.size() == 5);
  CHECK(r.actual.size() == 5);
  CHECK(r.draws == 100);
  REQUIRE(r.smape);
  CHECK(*r.smape >= 0.0);
  CHECK(*r.smape <= 200.0);
  CHECK(r.msis.count("90") == 1);
  CHECK(r.msis.count("98") == 1);
  CHECK(r.below.size() == 5);
  CHECK(r.quantiles.count("0.05") == 1);
  REQUIRE(s.categories.size() == 1);
  CHECK(s.categories[0].series == 1);
}

TEST_CASE("series selection") {
  const auto all = collection();
  auto cfg = small_config();
  cfg.first_n = 2;
  auto sel = select_series(all, cfg);
  REQUIRE(sel.size() == 2);
  CHECK(sel[1].id == "Y2");
  cfg.first_n.reset();
  cfg.ids = {"Q1", "X1"};
  sel = select_series(all, cfg);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].id == "Q1");
  CHECK(sel[1].id == "X1");
}

TEST_CASE("series seeds depend on run seed and id only") {
  CHECK(series_seed(1, "a") == series_seed(1, "a"));
  CHECK(series_seed(1, "a") != series_seed(1, "b"));
  CHECK(series_seed(1, "a") != series_seed(2, "a"));
  CHECK(level_key(0.05) == "0.05");
  CHECK(level_key(0.5) == "0.5");
  CHECK(level_key(0.99) == "0.99");
}

TEST_CASE("benchmark is deterministic across worker counts") {
  const auto all = collection();
  auto cfg = small_config();
  cfg.model_kind = ModelKind::seasonal;
  cfg.workers = 1;
  const auto a = run_benchmark(all, cfg);
  cfg.workers = 4;
  const auto b = run_benchmark(all, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].id == b.records[i].id);
    CHECK(record_to_json(a.records[i]) == record_to_json(b.records[i]));
  }
  CHECK(a.errors == b.errors);
}

TEST_CASE("seasonal request on short series falls back") {
  std::vector<TimeSeries> all{synthetic("Q", 6, 14, 4, 8, "quarterly"), synthetic("M", 7, 30, 4, 8, "quarterly")};
  auto cfg = small_config();
  cfg.model_kind = ModelKind::seasonal;
  const auto s = run_benchmark(all, cfg);
  REQUIRE(s.records.size() == 2);
  CHECK(s.records[0].fell_back);
  CHECK(s.records[0].model == "lgt");
  CHECK_FALSE(s.records[1].fell_back);
  CHECK(s.records[1].model == "sgt");
}

TEST_CASE("per-series failures go to the errors section") {
  std::vector<TimeSeries> all{synthetic("ok", 9, 20, 1, 4, std::nullopt),
                              TimeSeries{"flat", std::vector<double>(20, 3.0), 1, 4, std::nullopt}};
  const auto s = run_benchmark(all, small_config());
  REQUIRE(s.records.size() == 1);
  REQUIRE(s.errors.size() == 1);
  CHECK(s.errors[0].id == "flat");
  CHECK_FALSE(s.errors[0].message.empty());
}

TEST_CASE("aggregates are means of the emitted records") {
  const auto s = run_benchmark(collection(), small_config());
  const auto back = summary_from_json(summary_to_json(s));
  CHECK(back == s);
  for (const auto& c : back.categories) {
    double smape_sum = 0.0, mase_sum = 0.0, run_sum = 0.0, msis_sum = 0.0, below_sum = 0.0;
    std::size_t n = 0, ns = 0, nm = 0;
    for (const auto& r : back.records) {
      if (r.category != c.category) continue;
      ++n;
      run_sum += r.runtime_seconds;
      if (r.smape) {
        smape_sum += *r.smape;
        ++ns;
      }
      if (r.mase) {
        mase_sum += *r.mase;
        ++nm;
      }
      msis_sum += r.msis.at("90");
      below_sum += 100.0 * r.below.at("0.95");
    }
    CHECK(c.series == n);
    CHECK(std::abs(*c.smape - smape_sum / ns) < 1e-9);
    CHECK(std::abs(*c.mase - mase_sum / nm) < 1e-9);
    CHECK(std::abs(c.mean_runtime_seconds - run_sum / n) < 1e-9);
    CHECK(std::abs(c.msis.at("90") - msis_sum / n) < 1e-9);
    CHECK(std::abs(c.below_percent.at("0.95") - below_sum / n) < 1e-9);
  }
  std::vector<std::string> names;
  for (const auto& c : s.categories) names.push_back(c.category);
  CHECK(names == std::vector<std::string>{"yearly", "quarterly", "all"});
}

TEST_CASE("report files") {
  const auto s = run_benchmark(collection(), small_config());
  const auto dir = std::filesystem::temp_directory_path() / "lsgt_harness_report";
  std::filesystem::remove_all(dir);
  emit_report(s, dir);
  CHECK(summary_from_json(read(dir / "summary.json")) == s);
  const std::string csv = read(dir / "records.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(s.records.size() + 1));
  CHECK(csv.rfind("id,category,model,smape,mase,msis_90,msis_98,coverage_90,below_0.01,below_0.05,below_0.5,"
                  "below_0.95,below_0.99,runtime_seconds\n",
                  0) == 0);
  for (const auto& r : s.records) {
    const auto text = read(dir / "records" / (r.id + ".json"));
    CHECK(text == record_to_json(r));
    CHECK(text.find("runtime") == std::string::npos);
  }
  const std::string md = read(dir / "table.md");
  CHECK(md.rfind("| Category | sMAPE | MASE | Avg Runtime (s) | Below 99p | Below 95p | Below 5p | Below 1p | "
                 "MSIS 90p | MSIS 98p |\n",
                 0) == 0);

  // A regular file where the directory should be.
  const auto blocker = dir / "blocker";
  std::ofstream(blocker) << "x";
  CHECK_THROWS(emit_report(s, blocker / "sub"));
}

TEST_CASE("markdown golden table") {
  RunSummary s;
  CategorySummary c;
  c.category = "yearly";
  c.series = 2;
  c.smape = 14.987;
  c.mase = 2.5;
  c.mean_runtime_seconds = 4.625;
  c.below_percent = {{"0.01", 1.5}, {"0.05", 4.0}, {"0.95", 94.11}, {"0.99", 98.0}};
  c.msis = {{"90", 21.3456}, {"98", 30.0}};
  s.categories.push_back(c);
  CategorySummary d;
  d.category = "other";
  d.series = 1;
  d.mean_runtime_seconds = 1.0;
  s.categories.push_back(d);
  const std::string expected =
      "| Category | sMAPE | MASE | Avg Runtime (s) | Below 99p | Below 95p | Below 5p | Below 1p | MSIS 90p | MSIS 98p |\n"
      "|---|---|---|---|---|---|---|---|---|---|\n"
      "| yearly | 14.99 | 2.50 | 4.62 | 98.00 | 94.11 | 4.00 | 1.50 | 21.35 | 30.00 |\n"
      "| other | n/a | n/a | 1.00 | n/a | n/a | n/a | n/a | n/a | n/a |\n";
  CHECK(summary_to_markdown(s) == expected);
}

TEST_CASE("run config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.workers = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.quantiles = {0.5, 0.05};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.quantiles = {0.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
