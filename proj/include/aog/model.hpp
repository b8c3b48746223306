#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aog/features.hpp"
#include "aog/geometry.hpp"

namespace aog {

// Three-layer compositional detector configuration: a root verifier over a
// rows x cols grid of switch nodes ("or-nodes"), each owning up to
// max_leaves local contour classifiers ("leaf slots"). The slot count is
// fixed up front; structure learning only toggles which slots are live.
struct ModelConfig {
  int or_count = 6;   // number of or-nodes, must equal rows * cols
  int rows = 2;
  int cols = 3;
  int max_leaves = 4;  // leaf slots per or-node
  double window_w = 56.0;
  double window_h = 56.0;
  // Per-axis bound on how far an or-node may drift from its anchor, in
  // pixels. Negative selects the default of half the smaller block side.
  double displacement_radius = -1.0;
  ShapeContextConfig sc;
  // When false the pairwise co-activation weights are pinned to zero
  // during learning (the tree ablation); scoring is unchanged.
  bool use_edges = true;

  double block_w() const { return window_w / cols; }
  double block_h() const { return window_h / rows; }
  double disp_radius() const;
  int slot_count() const { return or_count * max_leaves; }

  void validate() const;  // throws std::invalid_argument
};

// Flat parameter/feature vector layout:
//   [ leaf blocks | displacement blocks | pair blocks | root block ]
// - one leaf block of leaf_dim per slot, in (or-node, slot) order;
// - one length-4 displacement block per or-node (these weights enter the
//   score negated, i.e. the stored values act as additive costs);
// - one entry per (slot, slot') pair of grid-adjacent or-nodes;
// - one root block of or_count * bins_per_point entries.
// The total dimension is invariant under slot creation/removal.
struct FeatureLayout {
  int leaf_dim = 0;
  int or_count = 0;
  int max_leaves = 0;
  std::vector<std::pair<int, int>> or_pairs;  // adjacent or-nodes, each pair once, (a<b), sorted
  int edge_count = 0;
  int root_dim = 0;
  int total = 0;

  static FeatureLayout make(const ModelConfig& cfg);

  int slot_index(int or_idx, int slot) const { return or_idx * max_leaves + slot; }
  int leaf_offset(int or_idx, int slot) const { return slot_index(or_idx, slot) * leaf_dim; }
  int deform_offset(int or_idx) const { return or_count * max_leaves * leaf_dim + 4 * or_idx; }
  int edge_base() const { return or_count * max_leaves * leaf_dim + 4 * or_count; }
  // Edge slot for choosing `slot_a` in pair.first and `slot_b` in pair.second.
  int edge_offset(int pair_idx, int slot_a, int slot_b) const {
    return edge_base() + pair_idx * max_leaves * max_leaves + slot_a * max_leaves + slot_b;
  }
  int root_offset() const { return edge_base() + edge_count; }

  // Coordinate classification, the inverse of the offsets above.
  enum class Kind { Leaf, Deform, Edge, Root };
  struct CoordRef {
    Kind kind;
    int index;  // slot index / or-node / linear edge index / root bin
    int bin;    // position inside the block (0 for Edge)
  };
  CoordRef locate(int coord) const;
  int index_of(const CoordRef& ref) const;
};

// Latent placement of the whole model in one image: root position (window
// top-left), per-or-node block centers, the live slot switched on in each
// or-node, and the contour chosen there (nullopt when nothing usable
// intersects the block).
struct LatentAssignment {
  std::vector<Point> positions;              // size or_count + 1; [0] is the root
  std::vector<int> active_slot;              // size or_count
  std::vector<std::optional<std::uint32_t>> selected;  // size or_count
};

class AndOrModel {
 public:
  explicit AndOrModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const FeatureLayout& layout() const { return layout_; }

  const Eigen::VectorXd& omega() const { return omega_; }
  void set_omega(const Eigen::VectorXd& w);

  bool slot_live(int or_idx, int slot) const;
  int live_count(int or_idx) const;
  std::vector<int> live_slots(int or_idx) const;
  int total_live() const;

  // Activates the first dead slot of the or-node, installs init_weights as
  // its leaf block and returns the slot index. Throws when full.
  int create_leaf(int or_idx, const Eigen::VectorXd& init_weights);
  // Deactivates a live slot; its leaf block and every pair weight touching
  // it are zeroed. Throws when the slot is already dead.
  void remove_leaf(int or_idx, int slot);

  // Expected center of or-node i's block when the window sits at p0.
  Point anchor(int or_idx, Point p0, double scale = 1.0) const;
  Block block_at(Point center, double scale = 1.0) const;
  Block window_at(Point p0, double scale = 1.0) const;

  // Re-applies the dead-slot invariant to omega (dead leaf blocks and dead
  // pair entries are exactly zero).
  void zero_dead_segments();

 private:
  ModelConfig cfg_;
  FeatureLayout layout_;
  std::vector<std::uint8_t> live_;
  Eigen::VectorXd omega_;

  void check_slot(int or_idx, int slot) const;
};

// Nullopt when H is consistent with the model; otherwise a description of
// the first violation (counts, one live slot on per or-node, displacement
// bounds).
std::optional<std::string> validate_assignment(const AndOrModel& model, const LatentAssignment& H);

// The joint feature vector phi(X, H) in the layout above: active leaf
// blocks carry the selected fragments' local descriptors, displacement
// blocks are always present, pair entries are 1 where both endpoints are
// switched on, and the root block describes the selected fragments
// globally. Throws on an inconsistent H or an unknown contour id.
Eigen::VectorXd assemble_joint(const ContourSet& X, const AndOrModel& model, const LatentAssignment& H);

// Label-conditioned feature: phi(X, H) for label +1, the zero vector for
// label -1.
Eigen::VectorXd labeled_feature(const ContourSet& X, const AndOrModel& model, int label,
                                const LatentAssignment& H);

}  // namespace aog
