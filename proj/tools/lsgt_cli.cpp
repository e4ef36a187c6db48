// lsgt: fit, benchmark and simulate from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lsgt/forecast.hpp"
#include "lsgt/harness.hpp"

using namespace lsgt;

namespace {

struct CommonOptions {
  std::string model = "lgt";
  std::string variance = "hetero";
  std::string seasonal_prior = "horseshoe";
  std::size_t iters = 5000;
  std::size_t burnin = 2500;
  std::size_t chains = 2;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string quantiles = "0.01,0.05,0.5,0.95,0.99";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--model", o.model, "lgt (non-seasonal) or sgt (seasonal)")
      ->check(CLI::IsMember({"lgt", "sgt"}))
      ->capture_default_str();
  cmd->add_option("--variance", o.variance, "homo or hetero")
      ->check(CLI::IsMember({"homo", "hetero"}))
      ->capture_default_str();
  cmd->add_option("--seasonal-prior", o.seasonal_prior, "horseshoe or cauchy:<scale>")->capture_default_str();
  cmd->add_option("--iters", o.iters, "MCMC iterations per chain")->capture_default_str();
  cmd->add_option("--burnin", o.burnin, "burn-in iterations")->capture_default_str();
  cmd->add_option("--chains", o.chains, "independent chains")->capture_default_str();
  cmd->add_option("--seed", o.seed, "run seed")->capture_default_str();
  cmd->add_option("--workers", o.workers, "worker threads")->capture_default_str();
  cmd->add_option("--quantiles", o.quantiles, "comma-separated forecast quantile levels")->capture_default_str();
}

SeasonalPrior parse_seasonal_prior(const std::string& text) {
  if (text == "horseshoe") return SeasonalPrior::horseshoe();
  if (text.rfind("cauchy:", 0) == 0) {
    const double scale = std::stod(text.substr(7));
    if (!(scale > 0.0)) throw CLI::ValidationError("--seasonal-prior", "Cauchy scale must be positive");
    return SeasonalPrior::cauchy(scale);
  }
  throw CLI::ValidationError("--seasonal-prior", "expected horseshoe or cauchy:<scale>");
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

RunConfig make_run_config(const CommonOptions& o) {
  RunConfig cfg;
  cfg.model_kind = o.model == "sgt" ? ModelKind::seasonal : ModelKind::non_seasonal;
  cfg.variance_mode = o.variance == "homo" ? VarianceMode::homoscedastic : VarianceMode::heteroscedastic;
  cfg.seasonal_prior = parse_seasonal_prior(o.seasonal_prior);
  cfg.sampler.iterations = o.iters;
  cfg.sampler.burn_in = o.burnin;
  cfg.sampler.chains = o.chains;
  cfg.sampler.seed = o.seed;
  cfg.workers = o.workers;
  cfg.quantiles = parse_levels(o.quantiles);
  cfg.validate();
  return cfg;
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("lsgt"));
  if (const char* env = std::getenv("LSGT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

int run_fit(const std::string& input, const std::string& id, const std::string& out_path,
            const CommonOptions& o) {
  const RunConfig cfg = make_run_config(o);
  const auto all = load_collection(input);
  const TimeSeries* series = nullptr;
  for (const auto& s : all) {
    if (id.empty() || s.id == id) {
      series = &s;
      break;
    }
  }
  if (!series) throw std::runtime_error(fmt::format("series {} not found in {}", id, input));

  ModelKind kind = cfg.model_kind;
  if (kind == ModelKind::seasonal && !series->supports_seasonal_fit()) {
    spdlog::warn("series {} is too short for a seasonal fit; using the non-seasonal model", series->id);
    kind = ModelKind::non_seasonal;
  }
  PriorConfig prior = PriorConfig::defaults_for(series->values, kind, series->period);
  prior.variance_mode = cfg.variance_mode;
  prior.seasonal_prior = cfg.seasonal_prior;
  SamplerConfig scfg = cfg.sampler;
  scfg.seed = series_seed(cfg.sampler.seed, series->id);
  const auto samples = fit(*series, prior, scfg);

  ForecastConfig fcfg;
  fcfg.horizon = series->horizon;
  fcfg.paths_per_draw = cfg.paths_per_draw;
  fcfg.quantile_levels = cfg.quantiles;
  fcfg.seed = splitmix64(scfg.seed + 1);
  fcfg.workers = cfg.workers;
  const auto fc = simulate_paths(samples, series->values, fcfg);

  nlohmann::ordered_json j;
  j["id"] = series->id;
  j["model"] = kind == ModelKind::seasonal ? "sgt" : "lgt";
  j["horizon"] = series->horizon;
  j["point"] = fc.point;
  j["mean"] = fc.mean;
  for (std::size_t i = 0; i < fc.levels.size(); ++i) j["quantiles"][level_key(fc.levels[i])] = fc.quantiles[i];
  j["n_paths"] = fc.n_paths;
  j["floor_events"] = fc.floor_events;
  auto posterior_mean = [&](auto getter) {
    double s = 0.0;
    for (const auto& d : samples.draws) s += getter(d);
    return s / static_cast<double>(samples.draws.size());
  };
  j["posterior_mean"] = {
      {"alpha", posterior_mean([](const ParameterDraw& d) { return d.alpha; })},
      {"beta", posterior_mean([](const ParameterDraw& d) { return d.beta; })},
      {"gamma", posterior_mean([](const ParameterDraw& d) { return d.gamma; })},
      {"rho", posterior_mean([](const ParameterDraw& d) { return d.rho; })},
      {"lambda", posterior_mean([](const ParameterDraw& d) { return d.lambda; })},
      {"nu", posterior_mean([](const ParameterDraw& d) { return d.nu; })},
      {"chi2", posterior_mean([](const ParameterDraw& d) { return d.chi2; })},
  };
  for (const auto& c : samples.chains) {
    j["chains"].push_back({{"chain", c.chain},
                           {"failed", c.failed},
                           {"smoothing_acceptance", c.smoothing_acceptance},
                           {"seasonal_acceptance", c.seasonal_acceptance},
                           {"truncation_clamps", c.truncation_clamps}});
  }
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", out_path));
    out << text;
  }
  return 0;
}

int run_bench(const std::string& input, const std::string& out_dir, std::size_t first_n, const CommonOptions& o) {
  RunConfig cfg = make_run_config(o);
  cfg.input = input;
  cfg.output_dir = out_dir;
  if (first_n > 0) cfg.first_n = first_n;
  const RunSummary summary = run_benchmark(cfg);
  emit_report(summary, cfg.output_dir);
  std::cout << summary_to_markdown(summary);
  if (!summary.errors.empty()) {
    std::cerr << fmt::format("{} of {} series failed\n", summary.errors.size(),
                             summary.errors.size() + summary.records.size());
  }
  return summary.records.empty() ? 1 : 0;
}

struct SimulateOptions {
  std::string out;
  std::size_t count = 10;
  std::size_t length = 40;
  std::size_t horizon = 6;
  std::size_t period = 1;
  double start = 100.0;
  bool from_prior = false;
  std::string category = "synthetic";
};

int run_simulate(const SimulateOptions& so, const CommonOptions& o) {
  const RunConfig cfg = make_run_config(o);
  const std::size_t total = so.length + so.horizon;
  PriorConfig prior;
  prior.model_kind = cfg.model_kind;
  prior.period = cfg.model_kind == ModelKind::seasonal ? so.period : 1;
  prior.variance_mode = cfg.variance_mode;
  prior.seasonal_prior = cfg.seasonal_prior;
  prior.s_gamma = prior.s_b1 = so.start / 100.0;
  prior.chi2_prior_shape = 3.0;
  prior.chi2_prior_scale = 2.0;
  const auto grids = ParameterGrids::make(prior, cfg.sampler);

  ParameterDraw fixed;
  fixed.nu = 5.0;
  fixed.alpha = 0.5;
  fixed.beta = 0.2;
  fixed.gamma = 0.5;
  fixed.rho = 0.6;
  fixed.lambda = 0.5;
  fixed.b1 = 0.5;
  fixed.chi2 = 1.0;
  fixed.phi = prior.heteroscedastic() ? 0.5 : 1.0;
  fixed.tau = 0.5;
  if (prior.seasonal()) {
    fixed.log_s_init.assign(prior.period, 0.0);
    for (std::size_t i = 0; i < prior.period; ++i) fixed.log_s_init[i] = 0.2 * std::sin(6.283185307179586 * i / prior.period);
    centre_log_seasonals(fixed.log_s_init);
  }

  std::vector<TimeSeries> out;
  RngStream rng(o.seed, 0);
  std::size_t attempts = 0;
  while (out.size() < so.count) {
    if (++attempts > 1000 * so.count) throw std::runtime_error("could not generate positive series");
    const ParameterDraw theta = so.from_prior ? sample_prior(rng, prior, grids) : fixed;
    auto y = simulate_series(rng, theta, prior, total, so.start);
    if (!y) continue;
    TimeSeries s;
    s.id = fmt::format("S{:04d}", out.size() + 1);
    s.values = std::move(*y);
    s.period = so.period;
    s.horizon = so.horizon;
    s.category = so.category;
    out.push_back(std::move(s));
  }
  save_collection(so.out, out, format_from_path(so.out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Bayesian exponential smoothing with global trend"};
  app.set_config("--config", "", "key = value configuration file; flags override it");
  app.require_subcommand(1);

  CommonOptions fit_opts;
  std::string fit_input, fit_id, fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "fit one series and forecast its horizon");
  fit_cmd->add_option("--input", fit_input, "collection file (csv or json)")->required();
  fit_cmd->add_option("--id", fit_id, "series id (default: first series)");
  fit_cmd->add_option("--out", fit_out, "output JSON file (default: stdout)");
  add_common(fit_cmd, fit_opts);

  CommonOptions bench_opts;
  std::string bench_input, bench_out = "out";
  std::size_t first_n = 0;
  auto* bench_cmd = app.add_subcommand("benchmark", "split, fit, forecast and score a collection");
  bench_cmd->add_option("--input", bench_input, "collection file (csv or json)")->required();
  bench_cmd->add_option("--out", bench_out, "output directory")->capture_default_str();
  bench_cmd->add_option("--first-n", first_n, "only the first N series (0 = all)");
  add_common(bench_cmd, bench_opts);

  CommonOptions sim_opts;
  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic series from the model");
  sim_cmd->add_option("--out", sim.out, "output collection file (csv or json)")->required();
  sim_cmd->add_option("--count", sim.count, "number of series")->capture_default_str();
  sim_cmd->add_option("--length", sim.length, "training length")->capture_default_str();
  sim_cmd->add_option("--horizon", sim.horizon, "forecast horizon appended to each series")->capture_default_str();
  sim_cmd->add_option("--period", sim.period, "seasonal period")->capture_default_str();
  sim_cmd->add_option("--start", sim.start, "first value")->capture_default_str();
  sim_cmd->add_option("--category", sim.category, "category label")->capture_default_str();
  sim_cmd->add_flag("--from-prior", sim.from_prior, "draw parameters from the prior for each series");
  add_common(sim_cmd, sim_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return run_fit(fit_input, fit_id, fit_out, fit_opts);
    if (*bench_cmd) return run_bench(bench_input, bench_out, first_n, bench_opts);
    if (*sim_cmd) return run_simulate(sim, sim_opts);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
