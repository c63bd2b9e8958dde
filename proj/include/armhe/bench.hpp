#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "armhe/disturbance.hpp"
#include "armhe/mhe.hpp"
#include "armhe/vehicle.hpp"

// Monte-Carlo benchmark: closed-loop simulation with corrupted measurements,
// every estimator variant evaluated on the identical noise realization
// (paired design), aggregated into comparison tables and iteration curves.

namespace armhe {

struct ScenarioSpec {
  std::string name = "normal";
  NoiseSpec noise;
  PathSpec path;
  FollowerParams follower;
  VehicleParams vehicle;
  StageCostParams cost;
  std::vector<EstimatorVariant> variants;
  int horizon = 10;
  double duration_s = 60.0;
  int trial_count = 100;
  std::uint64_t seed = 1;
  double initial_guess_sigma = 3.0;  // m, on the tractor position
  SolverOptions solver;

  bool valid() const { return trial_count >= 1 && duration_s > 0.0; }
};

struct TrialMetrics {
  double psi = 0.0;    // mean squared full-state error
  double delta = 0.0;  // mean squared tractor position error
  double eta = 0.0;    // mean wall-clock estimate_step time, s
  std::vector<double> iteration_error_curve;  // normalized, index 0 = iter 1
  double mean_inner_iterations = 0.0;
  std::uint64_t measurement_hash = 0;  // paired-design check
  bool failed = false;
  std::string error;
};

// One simulated step of the ground-truth run.
struct LogRow {
  int k = 0;
  Vec7 q = Vec7::Zero();
  ControlInput u;  // control applied over [k, k+1)
  Vec4 y = Vec4::Zero();
  std::array<bool, kMeasDim> outlier = {false, false, false, false};
};

struct TrialLog {
  Vec7 initial_guess = Vec7::Zero();
  std::vector<LogRow> rows;
};

struct TrialResult {
  int index = 0;
  std::vector<TrialMetrics> per_variant;  // ordered as spec.variants
  TrialLog log;                           // kept only when requested
};

/// Simulates the closed loop for one trial (seeded from spec.seed and the
/// trial index) and runs every variant on the same measurement sequence.
TrialResult run_trial(const ScenarioSpec& spec, int trial_index,
                      bool keep_log = false);

/// Builds the ground-truth run and corrupted measurements for one trial
/// without estimating; used by run_trial and the log dump path.
TrialLog simulate_trial(const ScenarioSpec& spec, int trial_index);

/// Runs one variant over a prepared log. Exposed so recorded logs can be
/// re-estimated offline through the same code path.
TrialMetrics run_variant_on_log(const TrialLog& log, const ScenarioSpec& spec,
                                const EstimatorVariant& variant,
                                std::vector<EstimatorSolution>* per_step = nullptr);

struct VariantAggregate {
  std::string variant;
  double mean_psi = 0.0;
  double mean_delta = 0.0;
  double mean_eta = 0.0;
  double mean_inner_iterations = 0.0;
  std::vector<double> iteration_curve;  // mean normalized error per iteration
  int trials_ok = 0;
  int trials_failed = 0;
};

struct ScenarioAggregate {
  std::string scenario;
  std::vector<VariantAggregate> variants;
};

/// Means over successful trials; failed trials are counted, not averaged.
ScenarioAggregate aggregate(const ScenarioSpec& spec,
                            const std::vector<TrialResult>& results);

/// Runs all trials on a bounded worker pool. Determinism is per-trial: RNG
/// streams derive from the trial index, not from scheduling.
std::vector<TrialResult> run_scenario(const ScenarioSpec& spec,
                                      int threads = 0, bool keep_logs = false);

/// Writes results/<scenario>/<variant>/trials.csv, summary.md,
/// iteration_curve.csv and SVG plots under out_dir.
void emit_report(const std::vector<ScenarioAggregate>& aggs,
                 const std::map<std::string, std::vector<TrialResult>>& raw,
                 const std::filesystem::path& out_dir);

// CSV helpers shared by the report writer and the CLI.
void write_trials_csv(const std::filesystem::path& file,
                      const std::vector<TrialResult>& results,
                      std::size_t variant_index);
std::vector<TrialMetrics> read_trials_csv(const std::filesystem::path& file);
void write_log_csv(const std::filesystem::path& file, const TrialLog& log);
TrialLog read_log_csv(const std::filesystem::path& file);

/// Minimal polyline plot, one series per entry; deterministic output.
void write_svg_plot(const std::filesystem::path& file,
                    const std::vector<std::pair<std::string, std::vector<Eigen::Vector2d>>>& series,
                    const std::string& title);

std::uint64_t hash_measurements(const std::vector<LogRow>& rows);

}  // namespace armhe
