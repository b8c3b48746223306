#pragma once

#include <string>
#include <vector>

#include "aog/geometry.hpp"

namespace aog {

// One detection attributed to an image.
struct RankedDetection {
  std::string image;
  double score = 0.0;
  BoundingBox box;
};

// Ground-truth boxes of one evaluated image. Every evaluated image gets an
// entry, including negatives with no boxes — the image count drives the
// false-positives-per-image axis.
struct ImageGroundTruth {
  std::string image;
  std::vector<BoundingBox> boxes;
};

struct CurvePoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct FppiPoint {
  double fppi = 0.0;
  double recall = 0.0;
};

// Per-detection verdict in ranked order.
struct DetectionOutcome {
  std::string image;
  double score = 0.0;
  BoundingBox box;
  bool tp = false;
  int matched = -1;  // index into the image's ground-truth list, -1 for FP
};

struct EvalCurve {
  std::vector<CurvePoint> pr;      // one point per rank
  std::vector<FppiPoint> fppi;     // same sweep, (FP / image count, recall)
  std::vector<DetectionOutcome> outcomes;
  double ap = 0.0;
  int total_groundtruth = 0;
  int image_count = 0;
};

// Ranked-sweep evaluation: detections are ordered by descending score (ties
// by image id, then by box coordinates), and each one is a true positive
// when its best overlap with a still-unmatched ground-truth box of its image
// reaches `iou_thresh` (best overlap wins; equal overlaps go to the lower
// index). Average precision integrates the precision–recall curve with the
// precision envelope made non-increasing from the right, over all points.
// Throws std::invalid_argument on duplicate ground-truth image entries.
EvalCurve evaluate(const std::vector<RankedDetection>& detections,
                   const std::vector<ImageGroundTruth>& groundtruth, double iou_thresh = 0.5);

// Fraction of images owning ground truth whose single highest-scoring
// detection overlaps any of their boxes at `iou_thresh`. Images without
// detections count as misses; images without ground truth are ignored.
double top1_accuracy(const std::vector<RankedDetection>& detections,
                     const std::vector<ImageGroundTruth>& groundtruth, double iou_thresh = 0.5);

// "recall,precision" / "fppi,recall" CSV with shortest exact number forms.
std::string curve_csv_pr(const EvalCurve& curve);
std::string curve_csv_fppi(const EvalCurve& curve);

// Static SVG line plot of the precision–recall curve.
std::string pr_curve_svg(const EvalCurve& curve);

// Static SVG of one image: contours in grey, ground truth in green,
// detections in red with their scores.
std::string overlay_svg(const ContourSet& contours, const std::vector<BoundingBox>& groundtruth,
                        const std::vector<RankedDetection>& detections);

}  // namespace aog
