#include "aog/evalmetrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace aog {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::tuple<double, double, double, double> box_key(const BoundingBox& b) {
  return {b.xmin, b.ymin, b.xmax, b.ymax};
}

// Descending score; ties by image id, then by box coordinates, so the sweep
// order does not depend on the order detections were supplied in.
bool ranked_before(const RankedDetection& a, const RankedDetection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image != b.image) return a.image < b.image;
  return box_key(a.box) < box_key(b.box);
}

struct GtState {
  const std::vector<BoundingBox>* boxes = nullptr;
  std::vector<char> matched;
};

std::unordered_map<std::string, GtState> index_groundtruth(
    const std::vector<ImageGroundTruth>& groundtruth) {
  std::unordered_map<std::string, GtState> by_image;
  by_image.reserve(groundtruth.size());
  for (const ImageGroundTruth& g : groundtruth) {
    auto [it, inserted] = by_image.try_emplace(g.image);
    if (!inserted) throw std::invalid_argument("duplicate ground-truth entry for image " + g.image);
    it->second.boxes = &g.boxes;
    it->second.matched.assign(g.boxes.size(), 0);
  }
  return by_image;
}

}  // namespace

EvalCurve evaluate(const std::vector<RankedDetection>& detections,
                   const std::vector<ImageGroundTruth>& groundtruth, double iou_thresh) {
  EvalCurve curve;
  curve.image_count = static_cast<int>(groundtruth.size());
  auto by_image = index_groundtruth(groundtruth);
  for (const ImageGroundTruth& g : groundtruth)
    curve.total_groundtruth += static_cast<int>(g.boxes.size());

  std::vector<RankedDetection> ranked = detections;
  std::sort(ranked.begin(), ranked.end(), ranked_before);

  curve.pr.reserve(ranked.size());
  curve.fppi.reserve(ranked.size());
  curve.outcomes.reserve(ranked.size());
  int tp = 0;
  int fp = 0;
  for (const RankedDetection& det : ranked) {
    DetectionOutcome out;
    out.image = det.image;
    out.score = det.score;
    out.box = det.box;
    auto it = by_image.find(det.image);
    if (it != by_image.end()) {
      const std::vector<BoundingBox>& boxes = *it->second.boxes;
      double best = 0.0;
      int best_idx = -1;
      for (std::size_t k = 0; k < boxes.size(); ++k) {
        if (it->second.matched[k]) continue;
        double iou = box_iou(det.box, boxes[k]);
        if (iou > best) {
          best = iou;
          best_idx = static_cast<int>(k);
        }
      }
      if (best_idx >= 0 && best >= iou_thresh) {
        out.tp = true;
        out.matched = best_idx;
        it->second.matched[best_idx] = 1;
      }
    }
    out.tp ? ++tp : ++fp;
    curve.outcomes.push_back(std::move(out));

    CurvePoint p;
    p.recall = curve.total_groundtruth > 0 ? static_cast<double>(tp) / curve.total_groundtruth : 0.0;
    p.precision = static_cast<double>(tp) / (tp + fp);
    curve.pr.push_back(p);
    FppiPoint f;
    f.fppi = curve.image_count > 0 ? static_cast<double>(fp) / curve.image_count : 0.0;
    f.recall = p.recall;
    curve.fppi.push_back(f);
  }

  // All-points average precision: make the precision envelope non-increasing
  // from the right, then integrate it over the recall increments.
  std::vector<double> envelope(curve.pr.size());
  for (std::size_t i = 0; i < curve.pr.size(); ++i) envelope[i] = curve.pr[i].precision;
  for (std::size_t i = envelope.size(); i-- > 1;)
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.pr.size(); ++i) {
    ap += (curve.pr[i].recall - prev_recall) * envelope[i];
    prev_recall = curve.pr[i].recall;
  }
  curve.ap = ap;
  return curve;
}

double top1_accuracy(const std::vector<RankedDetection>& detections,
                     const std::vector<ImageGroundTruth>& groundtruth, double iou_thresh) {
  auto by_image = index_groundtruth(groundtruth);

  // Highest-ranked detection per image, under the same deterministic order.
  std::unordered_map<std::string, const RankedDetection*> top;
  for (const RankedDetection& det : detections) {
    auto [it, inserted] = top.try_emplace(det.image, &det);
    if (!inserted && ranked_before(det, *it->second)) it->second = &det;
  }

  int with_gt = 0;
  int correct = 0;
  for (const ImageGroundTruth& g : groundtruth) {
    if (g.boxes.empty()) continue;
    ++with_gt;
    auto it = top.find(g.image);
    if (it == top.end()) continue;
    const BoundingBox& det = it->second->box;
    bool hit = false;
    for (const BoundingBox& b : g.boxes)
      if (box_iou(det, b) >= iou_thresh) {
        hit = true;
        break;
      }
    if (hit) ++correct;
  }
  return with_gt > 0 ? static_cast<double>(correct) / with_gt : 0.0;
}

std::string curve_csv_pr(const EvalCurve& curve) {
  std::string out = "recall,precision\n";
  for (const CurvePoint& p : curve.pr)
    out += fmt_double(p.recall) + "," + fmt_double(p.precision) + "\n";
  return out;
}

std::string curve_csv_fppi(const EvalCurve& curve) {
  std::string out = "fppi,recall\n";
  for (const FppiPoint& p : curve.fppi) out += fmt_double(p.fppi) + "," + fmt_double(p.recall) + "\n";
  return out;
}

namespace {

// Plot frame shared by the curve drawing helpers.
constexpr double kPlotLeft = 60.0;
constexpr double kPlotTop = 40.0;
constexpr double kPlotW = 460.0;
constexpr double kPlotH = 340.0;

double px(double unit) { return kPlotLeft + unit * kPlotW; }
double py(double unit) { return kPlotTop + (1.0 - unit) * kPlotH; }

void svg_open(std::string& s, double width, double height) {
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(width) + "\" height=\"" +
       fmt_double(height) + "\" viewBox=\"0 0 " + fmt_double(width) + " " + fmt_double(height) +
       "\">\n";
  s += "<rect width=\"" + fmt_double(width) + "\" height=\"" + fmt_double(height) +
       "\" fill=\"white\"/>\n";
}

}  // namespace

std::string pr_curve_svg(const EvalCurve& curve) {
  std::string s;
  svg_open(s, 580.0, 440.0);
  s += "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<rect x=\"" + fmt_double(kPlotLeft) + "\" y=\"" + fmt_double(kPlotTop) + "\" width=\"" +
       fmt_double(kPlotW) + "\" height=\"" + fmt_double(kPlotH) + "\"/>\n";
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">\n";
  for (int t = 0; t <= 4; ++t) {
    double unit = t / 4.0;
    std::string label = fmt_double(unit);
    s += "<text x=\"" + fmt_double(px(unit)) + "\" y=\"" + fmt_double(kPlotTop + kPlotH + 18.0) +
         "\" text-anchor=\"middle\">" + label + "</text>\n";
    s += "<text x=\"" + fmt_double(kPlotLeft - 8.0) + "\" y=\"" + fmt_double(py(unit) + 4.0) +
         "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  s += "<text x=\"" + fmt_double(px(0.5)) + "\" y=\"" + fmt_double(kPlotTop + kPlotH + 36.0) +
       "\" text-anchor=\"middle\">recall</text>\n";
  s += "<text x=\"" + fmt_double(kPlotLeft - 44.0) + "\" y=\"" + fmt_double(py(0.5)) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 " + fmt_double(kPlotLeft - 44.0) + " " +
       fmt_double(py(0.5)) + ")\">precision</text>\n";
  s += "<text x=\"" + fmt_double(px(0.5)) + "\" y=\"24\" text-anchor=\"middle\">AP " +
       fmt_double(curve.ap) + "</text>\n";
  s += "</g>\n";
  if (!curve.pr.empty()) {
    s += "<polyline fill=\"none\" stroke=\"#c62828\" stroke-width=\"2\" points=\"";
    // Start the trace at zero recall with the first precision value.
    s += fmt_double(px(0.0)) + "," + fmt_double(py(curve.pr.front().precision));
    for (const CurvePoint& p : curve.pr)
      s += " " + fmt_double(px(p.recall)) + "," + fmt_double(py(p.precision));
    s += "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string overlay_svg(const ContourSet& contours, const std::vector<BoundingBox>& groundtruth,
                        const std::vector<RankedDetection>& detections) {
  double extent = std::max(contours.width, contours.height);
  double scale = extent > 0.0 ? 520.0 / extent : 1.0;
  double w = contours.width * scale;
  double h = contours.height * scale;
  std::string s;
  svg_open(s, w, h);
  s += "<g fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\">\n";
  for (const Contour& c : contours.contours) {
    if (c.points.empty()) continue;
    s += "<polyline points=\"";
    bool first = true;
    for (const Point& p : c.points) {
      if (!first) s += " ";
      first = false;
      s += fmt_double(p.x * scale) + "," + fmt_double(p.y * scale);
    }
    s += "\"/>\n";
  }
  s += "</g>\n";
  auto rect = [&](const BoundingBox& b, const std::string& color) {
    return "<rect x=\"" + fmt_double(b.xmin * scale) + "\" y=\"" + fmt_double(b.ymin * scale) +
           "\" width=\"" + fmt_double(b.width() * scale) + "\" height=\"" +
           fmt_double(b.height() * scale) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
  };
  s += "<g>\n";
  for (const BoundingBox& b : groundtruth) s += rect(b, "#2e7d32");
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#c62828\">\n";
  for (const RankedDetection& d : detections) {
    s += rect(d.box, "#c62828");
    s += "<text x=\"" + fmt_double(d.box.xmin * scale + 2.0) + "\" y=\"" +
         fmt_double(d.box.ymin * scale - 3.0) + "\">" + fmt_double(d.score) + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace aog
