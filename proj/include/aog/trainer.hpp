#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "aog/inference.hpp"
#include "aog/isodata.hpp"
#include "aog/model.hpp"
#include "aog/pca.hpp"
#include "aog/ssvm.hpp"

namespace aog {

// Clustering settings used both when the model is first built and when its
// leaf structure is revised between solver rounds.
struct ClusterTuning {
  double split_stddev = 0.35;
  double merge_distance = 0.15;
  // Minimum cluster size as a fraction of the positive count, floored at 2.
  double min_fraction = 0.05;
  int max_iterations = 20;
};

struct TrainOptions {
  double penalty = 1.0;   // weight of the per-sample hinge terms
  int creation_cap = 1;   // new leaves allowed per or-node per iteration
  int removal_cap = 1;    // leaf removals allowed per or-node per iteration
  double sigma = 2.0;     // reconstruction bound for the feature decomposition
  double delta = 0.001;   // loading threshold for the editable-coordinate mask
  double rel_tol = 1e-3;  // relative objective-change tolerance for stopping
  int max_iterations = 20;
  int stride_mult = 2;    // window-grid stride multiplier during training
  ClusterTuning clustering;
  SolverOptions solver;   // penalty/ablation fields are overwritten per run
  // Keep per-iteration weight vectors, hyperplanes and score sums in the
  // report (needed by the descent/supergradient checks; off by default).
  bool record_snapshots = false;
  std::ostream* log = nullptr;  // one progress line per iteration when set
};

// Best placements of every positive sample under the current weights,
// their joint features, and the linearization q = -penalty * sum(phi) of
// the score sum at those placements.
struct LatentEstimates {
  std::vector<InferenceResult> best;
  std::vector<Eigen::VectorXd> phi;
  Eigen::VectorXd hyperplane;
  double score_sum = 0.0;  // sum of the best-window scores
};

struct LeafCreation {
  int or_idx = 0;
  int slot = 0;  // the slot the creation will land in when applied in order
  Eigen::VectorXd weights;
};

// Decisions of one structure-revision round plus the adjusted per-sample
// anchors. Feature mass relocates between slot segments only on coordinates
// flagged editable by the mask, so the anchors differ from the estimates'
// features nowhere else.
struct ReconfigResult {
  std::vector<Eigen::VectorXd> phi_adjusted;
  Eigen::VectorXd hyperplane;  // -penalty * sum(phi_adjusted)
  int moves = 0;               // samples whose fragment changed slots
  std::vector<LeafCreation> creations;
  std::vector<std::pair<int, int>> removals;  // (or-node, slot)

  bool empty() const { return moves == 0 && creations.empty() && removals.empty(); }
};

struct InitResult {
  AndOrModel model;
  // Per positive: the joint feature of the grid-partition placement used to
  // seed the leaves (deformations at zero, switches per cluster).
  std::vector<Eigen::VectorXd> phi0;
  // Or-nodes whose block held no contour in any sample; they start with a
  // single zero-weight leaf.
  std::vector<int> zero_feature_or_nodes;
};

struct IterationRecord {
  double objective = 0.0;  // full objective at the iteration's start
  int creations = 0;
  int removals = 0;
  int moves = 0;
  int solver_rounds = 0;
  int constraints = 0;
  bool plan_empty = true;
  bool accepted = true;  // solver weights kept (surrogate did not worsen)
  double surrogate_old = 0.0;
  double surrogate_new = 0.0;
  // Populated when TrainOptions::record_snapshots is set:
  Eigen::VectorXd omega;       // weights the iteration started from
  Eigen::VectorXd hyperplane;  // adjusted linearization used by the solver
  double score_sum = 0.0;      // positives' best-score sum at those weights
};

struct TrainReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  double final_objective = 0.0;
  std::vector<int> zero_feature_or_nodes;
};

struct TrainResult {
  AndOrModel model;
  TrainReport report;
};

// Builds the starting model from clutter-free positives: each sample's
// bounding box is partitioned into the config grid, the longest clipped
// contour piece per cell becomes the cell's training fragment, fragments
// are clustered per or-node, and each cluster becomes a leaf initialized
// with the cluster's mean descriptor. Requires at least two positives.
InitResult initialize_model(const ModelConfig& cfg, const std::vector<ContourSet>& positives,
                            const TrainOptions& opt = {});

// Best window placement per positive under the current weights, with the
// joint features and their negated scaled sum. `caches` may point to one
// descriptor cache per positive to reuse across calls.
LatentEstimates estimate_latent(const AndOrModel& model, const std::vector<ContourSet>& positives,
                                double penalty, int stride_mult = 2,
                                std::vector<FeatureCache>* caches = nullptr);

// One structure-revision round: per or-node, the detected fragments'
// mask-restricted descriptors are re-clustered (seeded by their current
// slots), fragments follow their cluster to its slot by relocating their
// editable bins, clusters born without a slot become leaf creations
// (largest first, up to creation_cap and free slots), and live slots whose
// segment ends up all-zero across samples become removals (up to
// removal_cap, never below one live leaf). Both caps zero disables the
// whole step. New-leaf weights are the cluster's unit-mean descriptor
// scaled to the or-node's median live-leaf weight norm.
ReconfigResult reconfigure(const AndOrModel& model, const LatentEstimates& estimates,
                           const std::vector<std::uint8_t>& editable, int creation_cap,
                           int removal_cap, double penalty, const ClusterTuning& tuning);

// Applies the plan's creations (verifying slot order) and removals.
void apply_reconfig(AndOrModel& model, const ReconfigResult& plan);

// Full training loop: initialize, then alternate latent estimation,
// structure revision and convex solving until the objective stalls while a
// revision round changes nothing, or the iteration cap is reached. Solver
// weights are only adopted when they do not worsen the exact surrogate
// objective, so with revision disabled the objective sequence is
// non-increasing.
TrainResult train(const ModelConfig& cfg, const std::vector<ContourSet>& positives,
                  const std::vector<ContourSet>& negatives, const TrainOptions& opt = {});

}  // namespace aog
