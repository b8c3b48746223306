#include "aog/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace aog {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double arc_length(const std::vector<Point>& pts) {
  double L = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) L += distance(pts[i - 1], pts[i]);
  return L;
}

void validate_contour(const Contour& c) {
  if (c.points.size() < 2)
    throw std::invalid_argument("contour " + std::to_string(c.id) + ": fewer than 2 points");
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (c.points[i] == c.points[i - 1])
      throw std::invalid_argument("contour " + std::to_string(c.id) + ": repeated consecutive point at index " + std::to_string(i));
  if (!(arc_length(c.points) > 0.0))
    throw std::invalid_argument("contour " + std::to_string(c.id) + ": zero arc length");
}

const Contour* ContourSet::find(std::uint32_t id) const {
  for (const Contour& c : contours)
    if (c.id == id) return &c;
  return nullptr;
}

double Block::diagonal() const { return std::hypot(width, height); }

bool Block::contains(Point p) const {
  return p.x >= origin.x && p.x <= origin.x + width && p.y >= origin.y && p.y <= origin.y + height;
}

Block block_centered(Point center, double width, double height) {
  return Block{{center.x - 0.5 * width, center.y - 0.5 * height}, width, height};
}

double BoundingBox::area() const {
  const double w = xmax - xmin, h = ymax - ymin;
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox bounds_of(const std::vector<Contour>& contours) {
  bool any = false;
  BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Contour& c : contours)
    for (const Point& p : c.points) {
      any = true;
      b.xmin = std::min(b.xmin, p.x);
      b.ymin = std::min(b.ymin, p.y);
      b.xmax = std::max(b.xmax, p.x);
      b.ymax = std::max(b.ymax, p.y);
    }
  if (!any) throw std::invalid_argument("bounds_of: no points");
  return b;
}

namespace {

// Liang-Barsky parameter interval of segment a->b inside the rectangle,
// or nullopt when the segment misses it entirely.
std::optional<std::pair<double, double>> inside_interval(Point a, Point b, const Block& blk) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - blk.origin.x, blk.x1() - a.x, a.y - blk.origin.y, blk.y1() - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;  // parallel and outside this boundary
    } else {
      const double t = q[i] / p[i];
      if (p[i] < 0.0) {
        if (t > t1) return std::nullopt;
        t0 = std::max(t0, t);
      } else {
        if (t < t0) return std::nullopt;
        t1 = std::min(t1, t);
      }
    }
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

// Interpolated point clamped onto the rectangle so that emitted crossing
// points sit exactly on the boundary; keeps re-clipping idempotent.
Point point_at(Point a, Point b, double t, const Block& blk) {
  Point p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
  p.x = std::clamp(p.x, blk.origin.x, blk.x1());
  p.y = std::clamp(p.y, blk.origin.y, blk.y1());
  return p;
}

void push_distinct(std::vector<Point>& pts, Point p) {
  if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
}

}  // namespace

std::vector<Contour> clip_contour(const Contour& c, const Block& b) {
  std::vector<Contour> parts;
  std::vector<Point> cur;
  auto flush = [&]() {
    if (cur.size() >= 2 && arc_length(cur) > 0.0) parts.push_back(Contour{c.id, cur});
    cur.clear();
  };
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    const Point a = c.points[i], d = c.points[i + 1];
    const auto iv = inside_interval(a, d, b);
    if (!iv) {
      flush();
      continue;
    }
    const auto [t0, t1] = *iv;
    // A positive entry parameter means the previous piece (if any) ended
    // outside, so the runs are disconnected.
    if (t0 > 0.0) flush();
    const Point entry = t0 <= 0.0 ? a : point_at(a, d, t0, b);
    const Point exit = t1 >= 1.0 ? d : point_at(a, d, t1, b);
    if (cur.empty()) cur.push_back(entry);
    push_distinct(cur, exit);
    if (t1 < 1.0) flush();
  }
  flush();
  return parts;
}

std::vector<Point> resample_contour(const Contour& c, int n) {
  if (n < 2) throw std::invalid_argument("resample_contour: n must be >= 2");
  if (c.points.size() < 2) throw std::invalid_argument("resample_contour: contour has fewer than 2 points");
  std::vector<Point> pts = c.points;
  // Canonical orientation: walk from the endpoint with smaller (y, x).
  const Point& front = pts.front();
  const Point& back = pts.back();
  if (back.y < front.y || (back.y == front.y && back.x < front.x))
    std::reverse(pts.begin(), pts.end());

  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  const double L = cum.back();
  if (!(L > 0.0)) throw std::invalid_argument("resample_contour: degenerate (zero-length) contour");

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  for (int k = 0; k < n; ++k) {
    if (k == 0) {
      out.push_back(pts.front());
      continue;
    }
    if (k == n - 1) {
      out.push_back(pts.back());
      continue;
    }
    const double s = L * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < pts.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    out.push_back({pts[seg].x + t * (pts[seg + 1].x - pts[seg].x),
                   pts[seg].y + t * (pts[seg + 1].y - pts[seg].y)});
  }
  return out;
}

double pyramid_scale(int k, int per_octave) {
  if (per_octave <= 0) throw std::invalid_argument("pyramid_scale: per_octave must be positive");
  if (k < 0) throw std::invalid_argument("pyramid_scale: negative level");
  return std::exp2(-static_cast<double>(k) / static_cast<double>(per_octave));
}

std::vector<ContourSet> build_scale_pyramid(const ContourSet& X, int n_scales, int per_octave) {
  if (n_scales < 1) throw std::invalid_argument("build_scale_pyramid: need at least one level");
  std::vector<ContourSet> levels;
  levels.reserve(static_cast<std::size_t>(n_scales));
  for (int k = 0; k < n_scales; ++k) {
    const double s = pyramid_scale(k, per_octave);
    ContourSet level;
    level.width = X.width * s;
    level.height = X.height * s;
    level.contours = X.contours;
    for (Contour& c : level.contours)
      for (Point& p : c.points) {
        p.x *= s;
        p.y *= s;
      }
    levels.push_back(std::move(level));
  }
  return levels;
}

}  // namespace aog
