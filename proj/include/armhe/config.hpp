#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "armhe/bench.hpp"

// Flat sectioned key=value configuration binding the library defaults to
// experiment files. Unknown keys are rejected so stale configs fail loudly.

namespace armhe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  VehicleParams vehicle;
  PathSpec path;
  FollowerParams follower;
  NoiseSpec noise_normal;   // scenario (i)
  NoiseSpec noise_uniform;  // scenario (ii)
  StageCostParams cost;
  SolverOptions solver;
  std::vector<EstimatorVariant> variants;
  int horizon = 10;
  double epsilon = 1e-3;    // adaptive stop threshold (also in variants)
  int max_iterations = 10;  // adaptive M default
  std::uint64_t seed = 1;
  int trial_count = 100;
  double duration_s = 60.0;
  double initial_guess_sigma = 3.0;
  std::string out_dir = "results";

  /// Scenario assembled from this config; name is "normal" or "uniform".
  ScenarioSpec scenario(const std::string& name) const;
};

/// Built-in defaults: the desk-scale experiment configuration.
Config default_config();

/// Parses a config file. Throws ConfigError naming the offending key for
/// unknown keys, bad values, or violated invariants.
Config parse_config(const std::filesystem::path& file);

/// Parses config text (same grammar as the file form).
Config parse_config_text(const std::string& text);

/// Serializes back to the file grammar; parse(serialize(c)) == c.
std::string serialize_config(const Config& c);

/// Variant grammar: "adaptive:M", "fixed:alpha", "grid:a|b|c".
EstimatorVariant parse_variant(const std::string& text, double epsilon);

void validate(const Config& c);  // throws ConfigError

}  // namespace armhe
