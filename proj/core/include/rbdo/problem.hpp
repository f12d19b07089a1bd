#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rbdo/box.hpp"
#include "rbdo/glam.hpp"
#include "rbdo/kl.hpp"
#include "rbdo/kriging.hpp"
#include "rbdo/marginal.hpp"
#include "rbdo/spce.hpp"
#include "rbdo/sqp.hpp"

namespace rbdo {

/// Probabilistic input model: design-conditional variables X|d, fixed
/// environmental variables Z, and optionally a Gaussian process entering
/// through its KL coordinates theta (standard normals). Environment vectors
/// are laid out [X|d..., Z..., theta...].
struct InputModel {
  int n_conditional = 0;
  std::function<std::vector<Marginal>(const Eigen::VectorXd& d)> conditional;
  std::vector<Marginal> environmental;
  std::shared_ptr<const KlBasis> kl;        // null when no process
  double process_mean = 0.0;                // when kl set

  int n_theta() const { return kl ? kl->n_modes : 0; }
  int dim() const { return n_conditional + static_cast<int>(environmental.size()) + n_theta(); }
};

/// min cost(d) over the box s.t. soft constraints <= 0 and
/// P(limit_state <= 0) <= pf_target (failure <=> g <= 0).
struct RbdoProblem {
  std::string id;
  DesignBox box;
  ScalarFn cost;
  std::vector<ScalarFn> soft_constraints;
  /// Batch limit state: one value per environment row at a fixed design.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& d, const Eigen::MatrixXd& env)> limit_state;
  InputModel inputs;
  double pf_target = 0.05;
  nlohmann::json params;  // full parameter set (round-trip / hashing)

  double limit_state_scalar(const Eigen::VectorXd& d, const Eigen::VectorXd& env) const;
  /// Stable identifier of (id, params) for reference caching.
  std::uint64_t hash() const;
};

/// n conditional input realizations at d: every variable consumes exactly one
/// uniform (quantile transform), so a re-seeded generator yields the same
/// underlying uniforms for every d -- the CRN contract.
Eigen::MatrixXd sample_inputs(const RbdoProblem& p, const Eigen::VectorXd& d, int n, Rng& rng);

struct ExperimentalDesign {
  Eigen::MatrixXd points;    // realized N x n_d
  Eigen::VectorXd responses;
  Eigen::MatrixXd raw_draws; // matching environment rows (diagnostics)
  std::uint64_t seed = 0;
  int n_requested = 0;
  int n_dropped = 0;
};

/// LHS over the design box with a single conditional draw per point;
/// non-finite limit-state evaluations are dropped and counted.
ExperimentalDesign generate_experimental_design(const RbdoProblem& p, int n_ed,
                                                std::uint64_t seed);

enum class EmulatorKind { glam, spce, kriging };

std::string to_string(EmulatorKind k);
EmulatorKind emulator_kind_from_string(const std::string& s);

struct FittedEmulator {
  EmulatorKind kind = EmulatorKind::glam;
  std::shared_ptr<const GlamModel> glam;
  std::shared_ptr<const SpceModel> spce;
  std::shared_ptr<const KrigingModel> kriging;
};

enum class ConstraintForm { quantile, failure_probability };

/// Deterministic map d -> constraint value (feasible <=> <= 0).
/// GLaM and Kriging use the quantile form -q_alpha(d); SPCE uses the
/// failure-probability form, in log space when pf_target <= 0.01.
/// The pf form with GLaM or Kriging is rejected.
ScalarFn build_constraint(const RbdoProblem& p, const FittedEmulator& emulator,
                          ConstraintForm form, int n_mc, std::uint64_t crn_seed);

/// CRN Monte-Carlo quantile of the true limit state (the reference inner
/// loop); uniforms are cached per seed so repeated calls share draws.
class CrnQuantile {
 public:
  CrnQuantile(const RbdoProblem& p, int n_mc, double alpha, std::uint64_t crn_seed);
  double operator()(const Eigen::VectorXd& d) const;

 private:
  const RbdoProblem& p_;
  double alpha_;
  Eigen::MatrixXd uniforms_;   // n_mc x n_conditional (empty when none)
  Eigen::MatrixXd fixed_env_;  // n_mc x (n_z + n_theta), already physical
};

struct SolveOptions {
  SqpOptions sqp;
  Eigen::VectorXd d0;          // empty -> box center
  int n_mc = 100000;           // Kriging baseline inner loop
  GlamFitConfig glam;
  SpceFitConfig spce;
  KrigingFitConfig kriging;
};

struct SolveResult {
  OptimizationResult opt;
  ExperimentalDesign ed;
  FittedEmulator emulator;
  double ed_seconds = 0.0;
  double fit_seconds = 0.0;
  double opt_seconds = 0.0;
};

/// Stage I (experimental design), II (emulator fit), III (deterministic
/// optimization) in order; fully determined by (p, kind, n_ed, seed).
SolveResult solve_rbdo(const RbdoProblem& p, EmulatorKind kind, int n_ed, std::uint64_t seed,
                       const SolveOptions& options = {});

/// Quantile-form double loop on the original limit state with a CRN inner
/// Monte-Carlo loop of size n_mc.
OptimizationResult reference_double_loop(const RbdoProblem& p, int n_mc, std::uint64_t seed,
                                         const SqpOptions& options = {});

/// |cost(d*) - cost(d*_ref)| / cost(d*_ref); throws on zero reference cost.
double relative_cost_error(double cost, double reference_cost);

}  // namespace rbdo
