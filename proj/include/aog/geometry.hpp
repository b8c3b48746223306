#pragma once

#include <cstdint>
#include <vector>

namespace aog {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }

double distance(Point a, Point b);

// An open polyline. Valid contours have >= 2 points, no two consecutive
// points coincide, and positive total arc length. Closed curves are
// represented by repeating the first point at the end.
struct Contour {
  std::uint32_t id = 0;
  std::vector<Point> points;
};

double arc_length(const std::vector<Point>& pts);

// Throws std::invalid_argument describing the first violated constraint.
void validate_contour(const Contour& c);

// Edge/contour map of one image. Point coordinates live in
// [0,width] x [0,height]; contour ids are unique within the set.
struct ContourSet {
  double width = 0.0;
  double height = 0.0;
  std::vector<Contour> contours;

  const Contour* find(std::uint32_t id) const;
};

// Axis-aligned rectangle given by top-left origin and extent.
struct Block {
  Point origin;
  double width = 0.0;
  double height = 0.0;

  double x1() const { return origin.x + width; }
  double y1() const { return origin.y + height; }
  Point center() const { return {origin.x + 0.5 * width, origin.y + 0.5 * height}; }
  double diagonal() const;
  bool contains(Point p) const;  // closed rectangle, boundary included
};

Block block_centered(Point center, double width, double height);

struct BoundingBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const;
};

// Bounds of every contour point; throws if there are no points at all.
BoundingBox bounds_of(const std::vector<Contour>& contours);

// Intersection-over-union of two boxes; zero when they do not overlap or
// either box is degenerate.
double box_iou(const BoundingBox& a, const BoundingBox& b);

// Intersects a polyline with a closed rectangle. Returns the maximal
// connected sub-polylines that lie inside, in traversal order, with
// crossing points inserted on the block boundary. Parts of zero length
// (single touch points, grazing corners) are dropped. Each part keeps
// the source contour's id.
std::vector<Contour> clip_contour(const Contour& c, const Block& b);

// Resamples to n >= 2 points uniformly spaced by arc length, walking from
// the canonical start (the endpoint with smaller (y, x)). First and last
// output points equal the contour endpoints exactly. Throws on degenerate
// (zero-length) input.
std::vector<Point> resample_contour(const Contour& c, int n);

// Scale factor of pyramid level k: 2^(-k / per_octave).
double pyramid_scale(int k, int per_octave);

// Level k holds a copy of X with all coordinates and the canvas multiplied
// by pyramid_scale(k, per_octave). Level 0 is the identity. Boxes found at
// level k map back to source coordinates by dividing by the level scale.
std::vector<ContourSet> build_scale_pyramid(const ContourSet& X, int n_scales, int per_octave);

}  // namespace aog
