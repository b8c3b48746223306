#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "aog/geometry.hpp"

namespace aog {

using Feature = Eigen::VectorXd;

// Log-polar style histogram configuration shared by the local (leaf) and
// global (root) descriptors. A descriptor concatenates one
// n_angles x n_radii histogram per sample point, giving
// n_points * n_angles * n_radii entries total.
struct ShapeContextConfig {
  int n_points = 20;
  int n_angles = 6;
  int n_radii = 2;
  // Radial bin boundaries are linear fractions of the reference radius by
  // default; when set, boundaries are octave-spaced instead.
  bool log_radial = false;

  int bins_per_point() const { return n_angles * n_radii; }
  int descriptor_dim() const { return n_points * bins_per_point(); }
};

// Bin index of an offset (dx, dy) in one polar histogram with reference
// radius R. Angles partition [0, 2pi) starting at the +x axis; radii at
// distance >= R fall into the outermost bin; a zero offset lands in bin 0.
int polar_bin(double dx, double dy, double R, const ShapeContextConfig& cfg);

// Shape context of exactly cfg.n_points points: for each point, the
// normalized histogram of the offsets to the remaining points, using the
// frame's diagonal as reference radius. Depends only on point differences,
// so it is translation invariant.
Feature shape_context(const std::vector<Point>& points, const Block& frame, const ShapeContextConfig& cfg);

// Local appearance descriptor of contour c seen through block b: clip to
// the block, keep the longest clipped part, resample it to cfg.n_points and
// take its shape context with b as the frame. Zero vector when the contour
// misses the block.
Feature leaf_feature(const Contour& c, const Block& b, const ShapeContextConfig& cfg);

// Quadratic displacement feature (dx, dy, dx^2, dy^2) of position p
// relative to its anchor, normalized by the block extent.
Eigen::Vector4d deformation_feature(Point anchor, Point p, const Block& b);

// Global arrangement descriptor: one polar histogram per layout cell center
// over the union of all selected fragments' resampled points, normalized by
// the total point count; cells are the rows x cols partition of the window
// and the reference radius is the window diagonal. selections[i] is the
// fragment chosen for cell i (already clipped), or nullopt.
// Dimension: selections.size() * cfg.bins_per_point().
Feature root_feature(const std::vector<std::optional<Contour>>& selections, const Block& window,
                     int rows, int cols, const ShapeContextConfig& cfg);

// Centers of the rows x cols grid cells of a window, in row-major cell
// order (the or-node order).
std::vector<Point> cell_centers(const Block& window, int rows, int cols);

}  // namespace aog
