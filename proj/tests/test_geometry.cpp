#include <cmath>
#include <random>

#include "aog/geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aog;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("clip keeps the inside run of a crossing segment") {
  const Contour c{7, {{0, 5}, {20, 5}}};
  const Block b{{5, 0}, 10, 10};
  const auto parts = clip_contour(c, b);
  REQUIRE(parts.size() == 1);
  REQUIRE(parts[0].points.size() == 2);
  CHECK(parts[0].id == 7);
  CHECK(parts[0].points[0].x == doctest::Approx(5.0));
  CHECK(parts[0].points[0].y == doctest::Approx(5.0));
  CHECK(parts[0].points[1].x == doctest::Approx(15.0));
  CHECK(parts[0].points[1].y == doctest::Approx(5.0));
  CHECK(arc_length(parts[0].points) == doctest::Approx(10.0));
}

TEST_CASE("clip of a fully inside contour is the identity") {
  const Contour c{3, {{6, 2}, {8, 3}, {9, 7}}};
  const Block b{{5, 0}, 10, 10};
  const auto parts = clip_contour(c, b);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].id == c.id);
  REQUIRE(parts[0].points.size() == c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    CHECK(parts[0].points[i].x == c.points[i].x);
    CHECK(parts[0].points[i].y == c.points[i].y);
  }
}

TEST_CASE("clip of a disjoint contour is empty") {
  const Contour c{1, {{30, 30}, {40, 44}}};
  const Block b{{5, 0}, 10, 10};
  CHECK(clip_contour(c, b).empty());
}

TEST_CASE("clip splits a re-entering polyline into separate parts") {
  // Enters the block, leaves through the right edge, re-enters from the top.
  const Contour c{2, {{0, 2}, {12, 2}, {12, -3}, {4, -3}, {4, 8}}};
  const Block b{{0, 0}, 10, 10};
  const auto parts = clip_contour(c, b);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].points.front().x == doctest::Approx(0.0));
  CHECK(parts[0].points.back().x == doctest::Approx(10.0));
  CHECK(parts[1].points.front().y == doctest::Approx(0.0));
  CHECK(parts[1].points.back().y == doctest::Approx(8.0));
}

TEST_CASE("clip drops grazing touch points") {
  // Touches the corner of the block at exactly one point.
  const Contour c{9, {{-5, 5}, {0, 10}, {-5, 15}}};
  const Block b{{0, 0}, 10, 10};
  const auto parts = clip_contour(c, b);
  CHECK(parts.empty());
}

TEST_CASE("clip properties on random input") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> org(-5.0, 20.0);
  std::uniform_real_distribution<double> ext(2.0, 18.0);
  for (int trial = 0; trial < 300; ++trial) {
    Contour c{0, oracle::random_polyline(rng)};
    const Block b{{org(rng), org(rng)}, ext(rng), ext(rng)};
    const auto parts = clip_contour(c, b);

    double kept = 0.0;
    for (const auto& part : parts) {
      REQUIRE(part.points.size() >= 2);
      CHECK(arc_length(part.points) > 0.0);
      kept += arc_length(part.points);
      for (const Point& p : part.points) {
        CHECK(p.x >= b.origin.x - 1e-9);
        CHECK(p.x <= b.x1() + 1e-9);
        CHECK(p.y >= b.origin.y - 1e-9);
        CHECK(p.y <= b.y1() + 1e-9);
      }
      // Idempotence: re-clipping a clipped part changes nothing.
      const auto again = clip_contour(part, b);
      REQUIRE(again.size() == 1);
      REQUIRE(again[0].points.size() == part.points.size());
      for (std::size_t i = 0; i < part.points.size(); ++i) {
        CHECK(again[0].points[i].x == doctest::Approx(part.points[i].x).epsilon(1e-9));
        CHECK(again[0].points[i].y == doctest::Approx(part.points[i].y).epsilon(1e-9));
      }
    }
    const double expect = oracle::clipped_length_oracle(c.points, b);
    const double all = arc_length(c.points);
    CHECK(kept == doctest::Approx(expect).epsilon(1e-6));
    CHECK(kept <= all + 1e-9);
  }
}

TEST_CASE("resample spaces points by arc length from the canonical end") {
  SUBCASE("straight segment") {
    const Contour c{0, {{0, 0}, {10, 0}}};
    const auto pts = resample_contour(c, 3);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].x == 0.0);
    CHECK(pts[1].x == doctest::Approx(5.0));
    CHECK(pts[2].x == 10.0);
  }
  SUBCASE("L-shaped path, canonical start picked by smaller (y, x)") {
    // Stored from the high end on purpose; resampling walks from (0,0).
    const Contour c{0, {{3, 4}, {0, 4}, {0, 0}}};
    const auto pts = resample_contour(c, 8);
    REQUIRE(pts.size() == 8);
    const Point expect[8] = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 4}, {2, 4}, {3, 4}};
    for (int k = 0; k < 8; ++k) {
      CHECK(pts[k].x == doctest::Approx(expect[k].x).epsilon(1e-12));
      CHECK(pts[k].y == doctest::Approx(expect[k].y).epsilon(1e-12));
    }
  }
  SUBCASE("n=2 returns the endpoints") {
    const Contour c{0, {{2, 9}, {4, 4}, {1, 1}}};
    const auto pts = resample_contour(c, 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].x == 1.0);
    CHECK(pts[0].y == 1.0);
    CHECK(pts[1].x == 2.0);
    CHECK(pts[1].y == 9.0);
  }
}

TEST_CASE("resample rejects degenerate input") {
  CHECK_THROWS(resample_contour(Contour{0, {{1, 1}}}, 4));
  CHECK_THROWS(resample_contour(Contour{0, {{1, 1}, {2, 2}}}, 1));
  CHECK_THROWS(resample_contour(Contour{0, {{1, 1}, {1, 1}}}, 4));
}

TEST_CASE("resample points lie on the polyline") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Contour c{0, oracle::random_polyline(rng, 2, 7)};
    const auto pts = resample_contour(c, 20);
    REQUIRE(pts.size() == 20);
    for (const Point& p : pts) CHECK(oracle::point_polyline_dist(p, c.points) < 1e-9);
    // Endpoints exactly, canonical orientation.
    const Point a = c.points.front(), b = c.points.back();
    const bool forward = (a.y < b.y) || (a.y == b.y && a.x <= b.x);
    const Point start = forward ? a : b, end = forward ? b : a;
    CHECK(pts.front().x == start.x);
    CHECK(pts.front().y == start.y);
    CHECK(pts.back().x == end.x);
    CHECK(pts.back().y == end.y);
  }
}

TEST_CASE("pyramid scales follow half-octave spacing") {
  CHECK(pyramid_scale(0, 2) == 1.0);
  CHECK(pyramid_scale(1, 2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(pyramid_scale(2, 2) == 0.5);
  CHECK(pyramid_scale(4, 2) == 0.25);

  ContourSet X;
  X.width = 8;
  X.height = 4;
  X.contours = {{0, {{1, 1}, {8, 4}}}};
  const auto pyr = build_scale_pyramid(X, 6, 2);
  REQUIRE(pyr.size() == 6);
  CHECK(pyr[0].width == 8.0);
  CHECK(pyr[0].contours[0].points[1].x == 8.0);
  CHECK(pyr[2].width == 4.0);
  CHECK(pyr[2].height == 2.0);
  CHECK(pyr[2].contours[0].points[1].x == 4.0);
  CHECK(pyr[2].contours[0].points[1].y == 2.0);

  // Round trip: dividing by the level scale recovers source coordinates.
  for (int k = 0; k < 6; ++k) {
    const double s = pyramid_scale(k, 2);
    for (std::size_t i = 0; i < X.contours[0].points.size(); ++i) {
      CHECK(pyr[k].contours[0].points[i].x / s ==
            doctest::Approx(X.contours[0].points[i].x).epsilon(1e-9));
      CHECK(pyr[k].contours[0].points[i].y / s ==
            doctest::Approx(X.contours[0].points[i].y).epsilon(1e-9));
    }
  }
}

TEST_CASE("box overlap ratio") {
  const BoundingBox a{0, 0, 10, 10}, b{5, 0, 15, 10};
  CHECK(box_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(box_iou(b, a) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(box_iou(a, a) == doctest::Approx(1.0));
  CHECK(box_iou(a, BoundingBox{10, 0, 20, 10}) == 0.0);  // touching edges do not overlap
  CHECK(box_iou(a, BoundingBox{40, 40, 50, 50}) == 0.0);
  CHECK(box_iou(a, BoundingBox{3, 3, 3, 9}) == 0.0);  // degenerate box
}

TEST_CASE("contour validation catches malformed input") {
  CHECK_THROWS(validate_contour(Contour{0, {}}));
  CHECK_THROWS(validate_contour(Contour{0, {{1, 2}}}));
  CHECK_THROWS(validate_contour(Contour{0, {{1, 2}, {1, 2}, {3, 4}}}));
  CHECK_NOTHROW(validate_contour(Contour{0, {{1, 2}, {3, 4}}}));
}

TEST_SUITE_END();
