#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rbdo/problem.hpp"

namespace rbdo {

/// Batch experiment description. Parsed strictly: unknown keys are rejected.
struct ExperimentConfig {
  std::string problem_id;
  nlohmann::json overrides = nlohmann::json::object();
  std::vector<std::string> methods;  // subset of {glam, spce, kriging, reference}
  std::vector<int> n_ed;
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  int n_mc = 100000;                  // Kriging-baseline inner loop
  long long reference_n_mc = 1000000;
  std::string output_dir = ".";

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

struct RunSummary {
  std::string method;
  int n_ed = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd d_star;
  double cost = 0.0;
  double eps_c = std::numeric_limits<double>::quiet_NaN();
  double ed_seconds = 0.0;
  double fit_seconds = 0.0;
  double opt_seconds = 0.0;
  bool converged = false;
  int trace_length = 0;
};

struct MethodStats {
  std::string method;
  int n_ed = 0;
  int n_ok = 0;
  double median_cost = 0.0, iqr_cost = 0.0;
  double median_eps = 0.0, iqr_eps = 0.0;
};

struct RunRecord {
  std::uint64_t config_hash = 0;
  std::vector<RunSummary> runs;
  std::vector<MethodStats> stats;
  int n_failed = 0;
};

/// Stable per-run seed: base ^ hash("method|n_ed|repetition").
std::uint64_t run_seed(std::uint64_t base, const std::string& method, int n_ed, int repetition);

/// Reference optimum for the configured problem: the closed form for the
/// buckling problem, otherwise a CRN double loop with reference_n_mc samples.
/// Cached in <output_dir>/reference_<problem-hash>.json; re-invocation reuses
/// the cache. Returns the reference document.
nlohmann::json compute_reference(const ExperimentConfig& config, bool* from_cache = nullptr);

/// Executes every (method, n_ed, repetition) cell, up to RBDO_WORKERS cells
/// concurrently. Writes one JSON per run plus runs.csv; individual failures
/// are recorded and skipped. If "reference" is among the methods (or a cached
/// reference exists) eps_c is filled in.
RunRecord run_experiment(const ExperimentConfig& config);

/// Aggregates run files from a directory into medians.csv and boxplot.csv,
/// plus 20x20 quantile-surface grids per method when with_grid is set.
/// Throws on a malformed run file, naming its path.
void write_report(const std::string& run_dir, bool with_grid);

}  // namespace rbdo
