#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "aog/model.hpp"

namespace aog {

// One margin constraint of a sample: the anchor feature minus a candidate
// labeled feature, with the candidate's mislabel penalty and its dual
// weight.
struct MarginConstraint {
  Eigen::VectorXd dphi;
  double loss = 0.0;
  double alpha = 0.0;
};

// Per-sample dual state. Entry 0 of `set` is the built-in slack
// constraint (zero feature difference, zero loss) that absorbs the unused
// simplex mass, so the dual weights always sum to exactly one per sample
// while the real constraints sum to at most one.
struct SampleDual {
  Eigen::VectorXd anchor;
  std::vector<MarginConstraint> set;
};

// Most violating labeled candidate for sample k under the given weights:
// value = max over candidates of (penalty + weights . feature), with the
// maximizing feature and penalty.
struct SeparationResult {
  double value = 0.0;
  Eigen::VectorXd phi;
  double loss = 0.0;
};
using SeparationOracle = std::function<SeparationResult(int k, const Eigen::VectorXd& omega)>;

struct SolverOptions {
  double penalty = 1.0;      // per-sample slack weight in the objective
  double eps_violation = 1e-3;   // minimum slack excess before a cut is added
  double eps_kkt = 1e-5;         // per-sample dual stationarity tolerance
  int max_rounds = 200;          // outer cut-generation rounds
  int max_sweeps = 20000;        // inner ascent sweeps over all samples
  double prune_below = 1e-8;     // drop constraints whose weight falls under this
  int prune_every = 10;          // rounds between prunings
  // Tree ablation: zero the pairwise co-activation coordinates of every
  // anchor and candidate feature, which keeps the recovered weights zero
  // on that block. Requires `layout`.
  bool zero_edge_coords = false;
  const FeatureLayout* layout = nullptr;
};

struct SolverReport {
  Eigen::VectorXd omega;
  std::vector<double> slack;          // per-sample final slack estimate
  double dual_objective = 0.0;
  double primal_objective = 0.0;      // from the last full separation pass
  std::vector<double> dual_history;   // dual objective after each round
  int rounds = 0;
  int constraints = 0;                // real constraints kept at exit
  bool converged = false;             // no violated cut found in the last round
};

// Weights induced by the dual state: penalty * sum of alpha-weighted
// feature differences.
Eigen::VectorXd recover_omega(const std::vector<SampleDual>& duals, double penalty, int dim);

// Dual objective penalty*(sum alpha.loss - penalty/2 |sum alpha.dphi|^2)
// of the current state; equals the primal objective at the optimum of the
// restricted problem and never exceeds the full primal objective.
double dual_objective(const std::vector<SampleDual>& duals, double penalty, int dim);

// Pairwise coordinate ascent on the duals until every sample satisfies
// stationarity within eps_kkt (or the sweep cap). Updates omega in place
// and recomputes it exactly from the duals before returning. Returns the
// number of sweeps run.
int smo_ascent(std::vector<SampleDual>& duals, Eigen::VectorXd& omega, const SolverOptions& opt);

// Cutting-plane outer loop: repeatedly asks the oracle for each sample's
// most violating candidate, adds it when it exceeds the sample's slack by
// eps_violation, and re-solves the restricted dual. anchors[k] is the
// feature of sample k's target labeling (already zero for background
// samples).
SolverReport solve_ssvm(const std::vector<Eigen::VectorXd>& anchors,
                        const SeparationOracle& oracle, const SolverOptions& opt);

}  // namespace aog
