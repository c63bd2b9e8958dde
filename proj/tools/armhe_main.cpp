#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "armhe/bench.hpp"
#include "armhe/config.hpp"
#include "armhe/loss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

armhe::Config load_config(const std::string& path) {
  if (path.empty()) return armhe::default_config();
  return armhe::parse_config(path);
}

fs::path resolve_out(const std::string& flag_value,
                     const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ARMHE_OUT")) return env;
  return config_value;
}

int cmd_bench(const std::string& config_path, int trials, long long seed,
              const std::string& scenario, const std::string& variant,
              const std::string& out, bool full_scale, bool dump,
              int threads) {
  armhe::Config cfg = load_config(config_path);
  if (trials > 0) cfg.trial_count = trials;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!variant.empty()) {
    cfg.variants.clear();
    std::istringstream is(variant);
    std::string tok;
    while (is >> tok) cfg.variants.push_back(armhe::parse_variant(tok, cfg.epsilon));
  }
  if (full_scale) {
    cfg.trial_count = 1000;
    cfg.duration_s = 60.0;
  }
  armhe::validate(cfg);
  const fs::path out_dir = resolve_out(out, cfg.out_dir);

  std::vector<std::string> names;
  if (scenario == "both") {
    names = {"normal", "uniform"};
  } else {
    names = {scenario};
  }

  std::vector<armhe::ScenarioAggregate> aggs;
  std::map<std::string, std::vector<armhe::TrialResult>> raw;
  bool any_failed = false;
  for (const auto& name : names) {
    const armhe::ScenarioSpec spec = cfg.scenario(name);
    auto results = armhe::run_scenario(spec, threads, /*keep_logs=*/true);
    for (const auto& r : results)
      for (const auto& m : r.per_variant)
        if (m.failed) any_failed = true;
    aggs.push_back(armhe::aggregate(spec, results));
    if (dump && !results.empty()) {
      fs::create_directories(out_dir / name);
      armhe::write_log_csv(out_dir / name / "trial0_log.csv",
                           results.front().log);
    }
    raw.emplace(name, std::move(results));
  }
  armhe::emit_report(aggs, raw, out_dir);
  std::cout << "report written to " << out_dir.string() << "\n";
  return any_failed ? 2 : 0;
}

int cmd_estimate(const std::string& config_path, const std::string& log_path,
                 const std::string& variant, const std::string& out) {
  armhe::Config cfg = load_config(config_path);
  const armhe::TrialLog log = armhe::read_log_csv(log_path);
  if (log.rows.empty())
    throw armhe::ConfigError("log file has no data rows: " + log_path);

  armhe::EstimatorVariant var =
      variant.empty() ? cfg.variants.front()
                      : armhe::parse_variant(variant, cfg.epsilon);
  // scenario spec only carries shared parameters here; noise is unused
  const armhe::ScenarioSpec spec = cfg.scenario("normal");

  std::vector<armhe::EstimatorSolution> per_step;
  const armhe::TrialMetrics m =
      armhe::run_variant_on_log(log, spec, var, &per_step);
  if (m.failed) {
    std::cerr << "estimation failed: " << m.error << "\n";
    return 2;
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    os = &file;
  }
  for (std::size_t k = 0; k < per_step.size(); ++k) {
    const auto& sol = per_step[k];
    json j;
    j["k"] = k;
    j["inner_iterations"] = sol.inner_iterations;
    j["cost_trace"] = sol.cost_trace;
    std::vector<std::vector<double>> alpha(armhe::kMeasDim);
    for (int i = 0; i < armhe::kMeasDim; ++i)
      for (Eigen::Index c = 0; c < sol.alpha.cols(); ++c)
        alpha[i].push_back(sol.alpha(i, c));
    j["alpha"] = alpha;
    j["estimate"] = std::vector<double>(sol.xhat.back().data(),
                                        sol.xhat.back().data() + 7);
    *os << j.dump() << "\n";
  }
  std::cerr << "psi = " << std::setprecision(17) << m.psi << "\n";
  return 0;
}

int cmd_loss(std::vector<double> alphas, double c, double rmax, int n,
             const std::string& out) {
  if (alphas.empty()) alphas = {1.1, 1.5, 1.9};
  const fs::path out_dir = resolve_out(out, "results/loss");
  fs::create_directories(out_dir);
  std::vector<std::pair<std::string, std::vector<Eigen::Vector2d>>> rho_series,
      phi_series;
  for (double a : alphas) {
    const armhe::LossParams p{armhe::clamp_alpha(a), c};
    std::ostringstream name;
    name << "loss_a" << a << ".csv";
    std::ofstream csv(out_dir / name.str());
    csv << "r,rho,phi\n" << std::setprecision(17);
    std::vector<Eigen::Vector2d> rpts, ppts;
    for (int i = 0; i <= n; ++i) {
      const double r = -rmax + 2.0 * rmax * i / n;
      csv << r << ',' << armhe::rho(r, p) << ',' << armhe::phi(r, p) << '\n';
      rpts.emplace_back(r, armhe::rho(r, p));
      ppts.emplace_back(r, armhe::phi(r, p));
    }
    std::ostringstream label;
    label << "alpha=" << a;
    rho_series.emplace_back(label.str(), std::move(rpts));
    phi_series.emplace_back(label.str(), std::move(ppts));
  }
  armhe::write_svg_plot(out_dir / "rho.svg", rho_series, "rho(r, alpha, c)");
  armhe::write_svg_plot(out_dir / "phi.svg", phi_series, "phi(r, alpha, c)");
  std::cout << "loss curves written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_plot(const std::string& results_dir) {
  // regenerate SVGs from any iteration_curve.csv below the results dir
  int made = 0;
  for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
    if (entry.path().filename() != "iteration_curve.csv") continue;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    std::vector<Eigen::Vector2d> pts;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      pts.emplace_back(std::stod(line.substr(0, comma)),
                       std::stod(line.substr(comma + 1)));
    }
    armhe::write_svg_plot(entry.path().parent_path() / "iteration_curve.svg",
                          {{"mean normalized error", pts}},
                          "Normalized error reduction per iteration");
    ++made;
  }
  std::cout << "regenerated " << made << " plot(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outlier-robust moving-horizon estimation benchmark"};
  app.require_subcommand(1);

  std::string config_path, scenario = "both", variant, out, log_path;
  int trials = -1, threads = 0, grid_n = 200;
  long long seed = -1;
  bool full_scale = false, dump = false;
  std::vector<double> alphas;
  double c = 1.0, rmax = 5.0;
  std::string results_dir = "results";

  auto* bench = app.add_subcommand("bench", "run the Monte-Carlo benchmark");
  bench->add_option("--config", config_path, "config file");
  bench->add_option("--trials", trials, "override trial count");
  bench->add_option("--seed", seed, "override RNG seed");
  bench->add_option("--scenario", scenario, "normal|uniform|both");
  bench->add_option("--variant", variant,
                    "space-separated variant list, e.g. 'adaptive:3 fixed:1.5'");
  bench->add_option("--out", out, "output directory");
  bench->add_option("--threads", threads, "worker threads (0 = auto)");
  bench->add_flag("--full-scale", full_scale, "1000 trials, 60 s horizon");
  bench->add_flag("--dump", dump, "write the first trial's raw log CSV");

  auto* estimate =
      app.add_subcommand("estimate", "re-estimate a recorded trial log");
  estimate->add_option("--config", config_path, "config file");
  estimate->add_option("--log", log_path, "trial log CSV")->required();
  estimate->add_option("--variant", variant, "estimator variant");
  estimate->add_option("--out", out, "JSON-lines output file (default stdout)");

  auto* loss = app.add_subcommand("loss", "tabulate the robust loss curves");
  loss->add_option("--alpha", alphas, "shape parameters");
  loss->add_option("--c", c, "scale parameter");
  loss->add_option("--rmax", rmax, "residual range [-rmax, rmax]");
  loss->add_option("--n", grid_n, "grid points");
  loss->add_option("--out", out, "output directory");

  auto* plot = app.add_subcommand("plot", "regenerate SVG plots from CSVs");
  plot->add_option("--results", results_dir, "results directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed())
      return cmd_bench(config_path, trials, seed, scenario, variant, out,
                       full_scale, dump, threads);
    if (estimate->parsed())
      return cmd_estimate(config_path, log_path, variant, out);
    if (loss->parsed()) return cmd_loss(alphas, c, rmax, grid_n, out);
    if (plot->parsed()) return cmd_plot(results_dir);
  } catch (const armhe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
