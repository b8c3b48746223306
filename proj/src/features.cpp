#include "aog/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aog {

int polar_bin(double dx, double dy, double R, const ShapeContextConfig& cfg) {
  const double r = std::hypot(dx, dy);
  double theta = std::atan2(dy, dx);  // atan2(0,0) == 0: coincident points go to bin 0
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  int a = static_cast<int>(theta / (2.0 * std::numbers::pi / cfg.n_angles));
  a = std::min(a, cfg.n_angles - 1);

  int rb = cfg.n_radii - 1;
  for (int t = 0; t < cfg.n_radii - 1; ++t) {
    // Boundary of radial bin t: linear fractions R*(t+1)/n by default,
    // octave-spaced R/2^(n-1-t) otherwise. Distances past R clip outward.
    const double bound = cfg.log_radial
                             ? R * std::exp2(-static_cast<double>(cfg.n_radii - 1 - t))
                             : R * static_cast<double>(t + 1) / static_cast<double>(cfg.n_radii);
    if (r < bound) {
      rb = t;
      break;
    }
  }
  return a * cfg.n_radii + rb;
}

Feature shape_context(const std::vector<Point>& points, const Block& frame, const ShapeContextConfig& cfg) {
  if (static_cast<int>(points.size()) != cfg.n_points)
    throw std::invalid_argument("shape_context: expected exactly n_points points");
  const double R = frame.diagonal();
  if (!(R > 0.0)) throw std::invalid_argument("shape_context: degenerate frame");
  const int bins = cfg.bins_per_point();
  Feature f = Feature::Zero(cfg.descriptor_dim());
  const double w = 1.0 / static_cast<double>(cfg.n_points - 1);
  for (int i = 0; i < cfg.n_points; ++i) {
    for (int j = 0; j < cfg.n_points; ++j) {
      if (j == i) continue;
      const int b = polar_bin(points[j].x - points[i].x, points[j].y - points[i].y, R, cfg);
      f[i * bins + b] += w;
    }
  }
  return f;
}

Feature leaf_feature(const Contour& c, const Block& b, const ShapeContextConfig& cfg) {
  const std::vector<Contour> parts = clip_contour(c, b);
  if (parts.empty()) return Feature::Zero(cfg.descriptor_dim());
  const Contour* best = &parts.front();
  double best_len = arc_length(best->points);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const double len = arc_length(parts[i].points);
    if (len > best_len) {
      best = &parts[i];
      best_len = len;
    }
  }
  return shape_context(resample_contour(*best, cfg.n_points), b, cfg);
}

Eigen::Vector4d deformation_feature(Point anchor, Point p, const Block& b) {
  if (!(b.width > 0.0) || !(b.height > 0.0))
    throw std::invalid_argument("deformation_feature: degenerate block");
  const double dx = (p.x - anchor.x) / b.width;
  const double dy = (p.y - anchor.y) / b.height;
  return Eigen::Vector4d(dx, dy, dx * dx, dy * dy);
}

std::vector<Point> cell_centers(const Block& window, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("cell_centers: bad grid");
  const double cw = window.width / cols, ch = window.height / rows;
  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      centers.push_back({window.origin.x + (2 * c + 1) * 0.5 * cw,
                         window.origin.y + (2 * r + 1) * 0.5 * ch});
  return centers;
}

Feature root_feature(const std::vector<std::optional<Contour>>& selections, const Block& window,
                     int rows, int cols, const ShapeContextConfig& cfg) {
  if (static_cast<int>(selections.size()) != rows * cols)
    throw std::invalid_argument("root_feature: one selection per grid cell expected");
  const std::vector<Point> centers = cell_centers(window, rows, cols);
  const double R = window.diagonal();
  if (!(R > 0.0)) throw std::invalid_argument("root_feature: degenerate window");
  const int bins = cfg.bins_per_point();
  Feature f = Feature::Zero(static_cast<int>(selections.size()) * bins);

  std::vector<Point> united;
  for (const auto& sel : selections) {
    if (!sel) continue;
    const std::vector<Point> pts = resample_contour(*sel, cfg.n_points);
    united.insert(united.end(), pts.begin(), pts.end());
  }
  if (united.empty()) return f;

  for (std::size_t ci = 0; ci < centers.size(); ++ci)
    for (const Point& p : united) {
      const int b = polar_bin(p.x - centers[ci].x, p.y - centers[ci].y, R, cfg);
      f[static_cast<int>(ci) * bins + b] += 1.0;
    }
  f /= static_cast<double>(united.size());
  return f;
}

}  // namespace aog
