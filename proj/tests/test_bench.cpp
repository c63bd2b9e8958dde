#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "armhe/bench.hpp"

using namespace armhe;
namespace fs = std::filesystem;

namespace {

ScenarioSpec small_spec() {
  ScenarioSpec s;
  s.duration_s = 8.0;
  s.trial_count = 2;
  s.variants = {EstimatorVariant{FixedAlphaVariant{1.5}},
                EstimatorVariant{AdaptiveVariant{3, 1e-3}}};
  return s;
}

double wrapped_sq(const Vec7& a, const Vec7& b) {
  double s = 0.0;
  for (int i = 0; i < kStateDim; ++i) {
    double d = a[i] - b[i];
    if (i == kBeta1 || i == kTheta0 || i == kTheta1) d = wrap_angle(d);
    s += d * d;
  }
  return s;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "armhe_bench_test";
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("noise-free run with an exact prior is recovered to machine level") {
  ScenarioSpec s = small_spec();
  s.noise.sigma_beta = s.noise.sigma_theta = s.noise.sigma_xy = 0.0;
  s.noise.outlier_prob = 0.0;
  s.initial_guess_sigma = 0.0;
  const TrialResult r = run_trial(s, 0);
  for (const auto& m : r.per_variant) {
    CHECK_FALSE(m.failed);
    CHECK(m.psi < 1e-8);
    CHECK(m.delta < 1e-8);
  }
}

TEST_CASE("same seed and trial index give bit-identical metrics") {
  const ScenarioSpec s = small_spec();
  const TrialResult a = run_trial(s, 1);
  const TrialResult b = run_trial(s, 1);
  REQUIRE(a.per_variant.size() == b.per_variant.size());
  for (std::size_t i = 0; i < a.per_variant.size(); ++i) {
    CHECK(a.per_variant[i].psi == b.per_variant[i].psi);
    CHECK(a.per_variant[i].delta == b.per_variant[i].delta);
    CHECK(a.per_variant[i].measurement_hash == b.per_variant[i].measurement_hash);
  }
  // different trial index gives a different noise stream
  const TrialResult c = run_trial(s, 2);
  CHECK(c.per_variant[0].measurement_hash != a.per_variant[0].measurement_hash);
}

TEST_CASE("all variants in a trial consume the same measurements") {
  const ScenarioSpec s = small_spec();
  const TrialResult r = run_trial(s, 3);
  for (const auto& m : r.per_variant)
    CHECK(m.measurement_hash == r.per_variant[0].measurement_hash);
}

TEST_CASE("run_scenario matches serial run_trial regardless of threading") {
  ScenarioSpec s = small_spec();
  s.trial_count = 3;
  const auto par = run_scenario(s, 3);
  REQUIRE(par.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const TrialResult serial = run_trial(s, i);
    CHECK(par[i].per_variant[0].psi == serial.per_variant[0].psi);
    CHECK(par[i].per_variant[1].psi == serial.per_variant[1].psi);
  }
}

TEST_CASE("reported psi and delta match a recomputation from the estimates") {
  ScenarioSpec s = small_spec();
  s.variants = {EstimatorVariant{FixedAlphaVariant{1.5}}};
  const TrialLog log = simulate_trial(s, 0);
  std::vector<EstimatorSolution> per_step;
  const TrialMetrics m = run_variant_on_log(log, s, s.variants[0], &per_step);
  REQUIRE(per_step.size() == log.rows.size());
  double psi = 0.0, delta = 0.0;
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const Vec7& xk = per_step[k].xhat.back();
    psi += wrapped_sq(xk, log.rows[k].q);
    const double dx = xk[kX0] - log.rows[k].q[kX0];
    const double dy = xk[kY0] - log.rows[k].q[kY0];
    delta += dx * dx + dy * dy;
  }
  CHECK(m.psi == doctest::Approx(psi / log.rows.size()).epsilon(1e-12));
  CHECK(m.delta == doctest::Approx(delta / log.rows.size()).epsilon(1e-12));
}

TEST_CASE("aggregate computes plain means and counts failures") {
  ScenarioSpec s = small_spec();
  s.variants = {EstimatorVariant{FixedAlphaVariant{1.5}}};
  std::vector<TrialResult> results(3);
  for (int i = 0; i < 3; ++i) {
    results[i].index = i;
    TrialMetrics m;
    m.psi = 1.0 + i;
    m.delta = 0.5 * (i + 1);
    m.eta = 0.01;
    m.mean_inner_iterations = 2.0;
    results[i].per_variant = {m};
  }
  results[2].per_variant[0].failed = true;
  const ScenarioAggregate agg = aggregate(s, results);
  REQUIRE(agg.variants.size() == 1);
  CHECK(agg.variants[0].trials_ok == 2);
  CHECK(agg.variants[0].trials_failed == 1);
  CHECK(agg.variants[0].mean_psi == doctest::Approx(1.5));
  CHECK(agg.variants[0].mean_delta == doctest::Approx(0.75));
  CHECK(agg.variants[0].mean_inner_iterations == doctest::Approx(2.0));
}

TEST_CASE("trials csv round trip and timing split") {
  const fs::path dir = temp_dir();
  ScenarioSpec s = small_spec();
  s.variants = {EstimatorVariant{FixedAlphaVariant{1.5}}};
  std::vector<TrialResult> results(2);
  for (int i = 0; i < 2; ++i) {
    results[i].index = i;
    TrialMetrics m;
    m.psi = 0.123456789012345 + i;
    m.delta = 1e-3 * (i + 1);
    m.eta = 0.5;
    m.mean_inner_iterations = 1.5;
    results[i].per_variant = {m};
  }
  write_trials_csv(dir / "trials.csv", results, 0);

  const auto rt = read_trials_csv(dir / "trials.csv");
  REQUIRE(rt.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(rt[i].psi == results[i].per_variant[0].psi);
    CHECK(rt[i].delta == results[i].per_variant[0].delta);
    CHECK(rt[i].mean_inner_iterations == 1.5);
    CHECK_FALSE(rt[i].failed);
  }
  // wall-clock timing lives in a sibling file, not in trials.csv
  CHECK(slurp(dir / "trials.csv").find("eta") == std::string::npos);
  const std::string timing = slurp(dir / "timing.csv");
  CHECK(timing.rfind("trial,eta", 0) == 0);
}

TEST_CASE("log csv round trip preserves every field") {
  const fs::path dir = temp_dir();
  ScenarioSpec s = small_spec();
  s.duration_s = 2.0;
  const TrialLog log = simulate_trial(s, 5);
  write_log_csv(dir / "log.csv", log);
  const TrialLog rt = read_log_csv(dir / "log.csv");
  REQUIRE(rt.rows.size() == log.rows.size());
  CHECK((rt.initial_guess - log.initial_guess).norm() == 0.0);
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    CHECK(rt.rows[k].k == log.rows[k].k);
    CHECK((rt.rows[k].q - log.rows[k].q).norm() == 0.0);
    CHECK((rt.rows[k].y - log.rows[k].y).norm() == 0.0);
    CHECK(rt.rows[k].u.omega0 == log.rows[k].u.omega0);
    CHECK(rt.rows[k].u.v0 == log.rows[k].u.v0);
    CHECK(rt.rows[k].outlier == log.rows[k].outlier);
  }
  CHECK(hash_measurements(rt.rows) == hash_measurements(log.rows));
}

TEST_CASE("truncated log rows are rejected with the line number") {
  const fs::path dir = temp_dir();
  std::ofstream out(dir / "bad.csv");
  out << "header\n1,2,3\n";
  out.close();
  CHECK_THROWS_WITH(read_log_csv(dir / "bad.csv"),
                    doctest::Contains("line 2"));
}

TEST_CASE("svg plots are well-formed polyline documents") {
  const fs::path dir = temp_dir();
  write_svg_plot(dir / "p.svg",
                 {{"a", {{0.0, 0.0}, {1.0, 2.0}, {2.0, 1.0}}},
                  {"b", {{0.0, 1.0}, {2.0, 3.0}}}},
                 "test plot");
  const std::string svg = slurp(dir / "p.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("test plot") != std::string::npos);
  // one polyline and one legend entry per series
  std::size_t n = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++n;
  CHECK(n == 2);
  // deterministic output
  write_svg_plot(dir / "q.svg",
                 {{"a", {{0.0, 0.0}, {1.0, 2.0}, {2.0, 1.0}}},
                  {"b", {{0.0, 1.0}, {2.0, 3.0}}}},
                 "test plot");
  CHECK(slurp(dir / "q.svg") == svg);
}

TEST_CASE("emit_report lays out the results tree") {
  const fs::path dir = temp_dir();
  ScenarioSpec s = small_spec();
  s.trial_count = 1;
  s.name = "normal";
  const auto results = run_scenario(s, 1, true);
  const ScenarioAggregate agg = aggregate(s, results);
  emit_report({agg}, {{"normal", results}}, dir);

  CHECK(fs::exists(dir / "normal" / "fixed-a1.5" / "trials.csv"));
  CHECK(fs::exists(dir / "normal" / "fixed-a1.5" / "timing.csv"));
  CHECK(fs::exists(dir / "normal" / "adaptive-m3" / "trials.csv"));
  CHECK(fs::exists(dir / "normal" / "adaptive-m3" / "iteration_curve.csv"));
  CHECK(fs::exists(dir / "normal" / "adaptive-m3" / "iteration_curve.svg"));
  CHECK(fs::exists(dir / "normal" / "trajectory.svg"));

  const std::string md = slurp(dir / "summary.md");
  CHECK(md.find("| scenario | variant | psi |") != std::string::npos);
  CHECK(md.find("| normal | fixed-a1.5 |") != std::string::npos);
  CHECK(md.find("| normal | adaptive-m3 |") != std::string::npos);

  const std::string curve = slurp(dir / "normal" / "adaptive-m3" / "iteration_curve.csv");
  CHECK(curve.rfind("iteration,mean_normalized_error", 0) == 0);
}
