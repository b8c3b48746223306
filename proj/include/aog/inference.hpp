#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aog/features.hpp"
#include "aog/geometry.hpp"
#include "aog/model.hpp"

namespace aog {

// Local evidence memoized per (contour, lattice position): the resampled
// points of the longest fragment of that contour inside the block centered
// at the position, plus their local descriptor. pts is empty and sc all
// zero when the contour misses the block.
struct LocalDescriptor {
  Feature sc;
  std::vector<Point> pts;
};

// Memo of local descriptors keyed by (contour id, lattice position), plus
// the arrangement-histogram indices a stored fragment touches within a
// given window placement. Both depend only on the contour set and the
// geometry, not on the model weights, so one cache may serve many scoring
// passes while the weights evolve. Entries are stable in memory once
// inserted.
class FeatureCache {
 public:
  LocalDescriptor* find(std::int64_t key);
  LocalDescriptor& emplace(std::int64_t key, LocalDescriptor&& d);
  std::size_t size() const { return map_.size(); }

  // Weight-vector indices (relative to the arrangement segment) of the
  // histogram bins hit by the fragment stored under desc_key when binned
  // against the window placement under window_key, in point then
  // grid-cell order.
  const std::vector<std::int32_t>* find_root_bins(std::int64_t desc_key,
                                                  std::int64_t window_key) const;
  const std::vector<std::int32_t>& emplace_root_bins(std::int64_t desc_key,
                                                     std::int64_t window_key,
                                                     std::vector<std::int32_t>&& bins);

 private:
  std::unordered_map<std::int64_t, LocalDescriptor> map_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::int32_t>> root_bins_;
};

struct InferenceResult {
  double score = 0.0;
  LatentAssignment assignment;
};

// Scores detection windows over one contour set. Candidate placements live
// on an integer lattice with pitch block/8 anchored at `base`, so
// positions probed by overlapping windows are bitwise identical and their
// local descriptors are shared through the cache.
//
// Maximization is exact over the full latent domain: displaced block
// positions (per-axis radius in whole lattice steps), contour choices,
// and slot switches, jointly. The global-arrangement dot divides by the
// total resampled point count, which depends only on how many or-nodes
// carry a fragment (every fragment resamples to the same count), so one
// lattice sweep keeps, per (or-node, slot), the best fragment-bearing
// placement under each carried-count hypothesis plus the or-node's best
// fragment-free placement, and a second pass scans slot switches and the
// carried count exactly, adding the pairwise co-activation weights.
//
// Tie order: candidate ties prefer the earlier grid point (dy, then dx,
// ascending), then the smaller contour id; a contour whose fragment is
// empty scores identically to no contour and is reported as the empty
// choice. Assignment ties prefer the lexicographically smallest slot
// vector, then more carried fragments, and within a carried count the
// members with the largest gain over their fragment-free alternative
// (earlier or-nodes on equal gain).
class WindowScorer {
 public:
  // Contour ids must stay below 2^20 so they pack into cache keys.
  WindowScorer(const ContourSet& X, const AndOrModel& model, Point base = {},
               FeatureCache* shared_cache = nullptr);

  // Best assignment for the window whose top-left corner is at lattice
  // point (ix0, iy0). prune limits each or-node to its prune best slots
  // by local score, i.e. leaf dot + displacement dot with the arrangement
  // term ignored (<= 0 means no pruning), so a larger prune never lowers
  // the result. Throws when an or-node has no live slot. The returned
  // score matches the full feature dot product with the model weights to
  // floating-point accuracy.
  InferenceResult infer_window(int ix0, int iy0, int prune = -1);

  Point position(int ix, int iy) const { return {base_.x + ix * lx_, base_.y + iy * ly_}; }
  double lambda_x() const { return lx_; }
  double lambda_y() const { return ly_; }

 private:
  const ContourSet* X_;
  const AndOrModel* model_;
  Point base_;
  double lx_ = 0.0, ly_ = 0.0;
  int nx_ = 0, ny_ = 0;                 // displacement radius in lattice steps
  std::vector<int> ax_, ay_;            // per-or-node anchor offsets in lattice steps
  std::vector<const Contour*> contours_;  // ascending id
  std::vector<BoundingBox> boxes_;      // bounds per entry of contours_
  FeatureCache own_cache_;
  FeatureCache* cache_;

  const LocalDescriptor& descriptor(std::size_t ci, int ix, int iy);
};

// One-window convenience wrapper: best assignment for the window at p0.
InferenceResult infer_best(const ContourSet& X, const AndOrModel& model, Point p0, int prune = -1);

// Weight dot feature of a fixed assignment.
double score_assignment(const ContourSet& X, const AndOrModel& model, const LatentAssignment& H);

// Best window over a sliding grid covering the contour set at unit scale.
// The grid starts at the origin with stride stride_mult * window/8 per
// axis; at least one window is evaluated even when the canvas is smaller
// than the window. Ties prefer the earlier window (row-major order).
InferenceResult best_window(const ContourSet& X, const AndOrModel& model, int prune = -1,
                            int stride_mult = 1, FeatureCache* shared_cache = nullptr);

// Image-level label: +1 when the best window scores strictly above zero.
int predict(const ContourSet& X, const AndOrModel& model, int prune = -1);

// Maximizer of score + 0/1 mislabel penalty over both labels and latent
// placements, used when searching for violated training constraints. For
// the negative label the feature is zero, so its score reduces to the
// penalty alone; ties prefer the negative label.
struct LossAugmentedResult {
  int label = -1;
  double value = 0.0;     // score of the maximizing labeled assignment + penalty
  InferenceResult window; // best positive-label window, whatever the label
};
LossAugmentedResult loss_augmented_infer(const ContourSet& X, const AndOrModel& model, int y_true,
                                         int prune = -1, int stride_mult = 1,
                                         FeatureCache* shared_cache = nullptr);

struct Detection {
  BoundingBox box;
  double score = 0.0;
  int scale = 0;  // pyramid level the window fired at
};

struct DetectOptions {
  int num_scales = 6;
  int per_octave = 2;
  double threshold = 0.0;  // keep windows scoring strictly above this
  double nms_iou = 0.5;    // suppress overlaps strictly above this
  int prune = -1;
  int stride_mult = 1;
};

// Greedy overlap suppression: sort by score (ties: lower scale, then box
// coordinates), keep each detection unless it overlaps an already kept one
// with IoU strictly above the threshold. Returns the kept detections in
// sorted order.
std::vector<Detection> non_max_suppress(std::vector<Detection> dets, double iou_threshold);

// Multi-scale sliding-window detection: windows slide over progressively
// shrunken copies of the contour set, window boxes map back to source
// coordinates by dividing by the level scale, then overlap suppression.
std::vector<Detection> detect(const ContourSet& X, const AndOrModel& model,
                              const DetectOptions& opt = {});

}  // namespace aog
