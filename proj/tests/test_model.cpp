#include <random>

#include "aog/model.hpp"
#include "doctest.h"

using namespace aog;

TEST_SUITE_BEGIN("model");

namespace {
ModelConfig people_cfg() {
  ModelConfig cfg;
  cfg.or_count = 8;
  cfg.rows = 4;
  cfg.cols = 2;
  cfg.window_w = 40;
  cfg.window_h = 100;
  return cfg;
}

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.or_count = 2;
  cfg.rows = 1;
  cfg.cols = 2;
  cfg.max_leaves = 2;
  cfg.window_w = 20;
  cfg.window_h = 10;
  cfg.sc.n_points = 4;
  return cfg;
}
}  // namespace

TEST_CASE("layout counts for the 2x3 grid") {
  ModelConfig cfg;  // defaults: z=6, 2x3, m=4, 20x6x2 descriptor
  const FeatureLayout L = FeatureLayout::make(cfg);
  CHECK(L.leaf_dim == 240);
  CHECK(L.or_pairs.size() == 7);
  CHECK(L.edge_count == 112);
  CHECK(L.root_dim == 72);
  CHECK(L.total == 24 * 240 + 24 + 112 + 72);

  const std::vector<std::pair<int, int>> expect = {{0, 1}, {0, 3}, {1, 2}, {1, 4},
                                                   {2, 5}, {3, 4}, {4, 5}};
  CHECK(L.or_pairs == expect);
}

TEST_CASE("4x2 grid builds and has the vertical-strip adjacency") {
  const AndOrModel model(people_cfg());
  CHECK(model.layout().or_pairs.size() == 4 * 1 + 3 * 2);  // 4 in-row + 6 cross-row
  CHECK(model.config().block_w() == doctest::Approx(20.0));
  CHECK(model.config().block_h() == doctest::Approx(25.0));
}

TEST_CASE("fresh model has zero parameters and no live leaves") {
  const AndOrModel model(tiny_cfg());
  CHECK(model.total_live() == 0);
  CHECK(model.omega().cwiseAbs().maxCoeff() == 0.0);
  // Zero parameters dot any feature vector to a zero score.
  const Eigen::VectorXd probe = Eigen::VectorXd::Random(model.layout().total);
  CHECK(model.omega().dot(probe) == 0.0);
}

TEST_CASE("anchors tile the window and translate with it") {
  ModelConfig cfg;
  cfg.window_w = 60;
  cfg.window_h = 40;
  const AndOrModel model(cfg);
  const Point a0 = model.anchor(0, {0, 0});
  CHECK(a0.x == doctest::Approx(10.0));
  CHECK(a0.y == doctest::Approx(10.0));
  const Point a5 = model.anchor(5, {0, 0});
  CHECK(a5.x == doctest::Approx(50.0));
  CHECK(a5.y == doctest::Approx(30.0));
  const Point shifted = model.anchor(3, {7, 11});  // row 1, col 0
  CHECK(shifted.x == doctest::Approx(17.0));
  CHECK(shifted.y == doctest::Approx(41.0));
}

TEST_CASE("leaf creation fills slots in order and respects capacity") {
  AndOrModel model(tiny_cfg());
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(model.layout().leaf_dim, 0.25);
  CHECK(model.create_leaf(0, w) == 0);
  CHECK(model.create_leaf(0, w) == 1);
  CHECK_THROWS(model.create_leaf(0, w));
  CHECK(model.live_count(0) == 2);
  CHECK(model.live_count(1) == 0);

  // Removal frees the slot for reuse and zeroes its weights.
  model.remove_leaf(0, 0);
  CHECK(model.live_count(0) == 1);
  CHECK(model.omega().segment(model.layout().leaf_offset(0, 0), model.layout().leaf_dim).cwiseAbs().maxCoeff() == 0.0);
  CHECK(model.create_leaf(0, w) == 0);
  CHECK_THROWS(model.remove_leaf(1, 0));  // dead slot
}

TEST_CASE("removing a leaf zeroes its pair weights") {
  AndOrModel model(tiny_cfg());
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(model.layout().leaf_dim, 0.5);
  model.create_leaf(0, w);
  model.create_leaf(1, w);
  Eigen::VectorXd omega = model.omega();
  const FeatureLayout& L = model.layout();
  omega[L.edge_offset(0, 0, 0)] = 0.7;  // pair (0,1), slots (0,0)
  model.set_omega(omega);
  CHECK(model.omega()[L.edge_offset(0, 0, 0)] == 0.7);
  model.remove_leaf(0, 0);
  CHECK(model.omega()[L.edge_offset(0, 0, 0)] == 0.0);
}

TEST_CASE("dead-slot weights are forced to zero on set_omega") {
  AndOrModel model(tiny_cfg());
  const FeatureLayout& L = model.layout();
  Eigen::VectorXd omega = Eigen::VectorXd::Constant(L.total, 1.0);
  model.set_omega(omega);  // nothing live: all leaf and pair weights zeroed
  CHECK(model.omega().head(L.or_count * L.max_leaves * L.leaf_dim).cwiseAbs().maxCoeff() == 0.0);
  CHECK(model.omega().segment(L.edge_base(), L.edge_count).cwiseAbs().maxCoeff() == 0.0);
  // Displacement and root weights are untouched by slot liveness.
  CHECK(model.omega()[L.deform_offset(0)] == 1.0);
  CHECK(model.omega()[L.root_offset()] == 1.0);
}

TEST_CASE("layout dimension is invariant under structural edits") {
  AndOrModel model(tiny_cfg());
  const int total = model.layout().total;
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.layout().leaf_dim);
  model.create_leaf(0, w);
  model.create_leaf(1, w);
  model.remove_leaf(0, 0);
  CHECK(model.layout().total == total);
  CHECK(model.omega().size() == total);
}

TEST_CASE("layout coordinate classification round-trips") {
  const AndOrModel model(tiny_cfg());
  const FeatureLayout& L = model.layout();
  for (int coord = 0; coord < L.total; ++coord) {
    const auto ref = L.locate(coord);
    CHECK(L.index_of(ref) == coord);
  }
  // Spot checks on the segment boundaries.
  CHECK(L.locate(0).kind == FeatureLayout::Kind::Leaf);
  CHECK(L.locate(L.deform_offset(0)).kind == FeatureLayout::Kind::Deform);
  CHECK(L.locate(L.edge_base()).kind == FeatureLayout::Kind::Edge);
  CHECK(L.locate(L.root_offset()).kind == FeatureLayout::Kind::Root);
  CHECK(L.locate(L.total - 1).kind == FeatureLayout::Kind::Root);
}

TEST_CASE("two models from the same config agree structurally") {
  const AndOrModel a(people_cfg()), b(people_cfg());
  CHECK(a.layout().or_pairs == b.layout().or_pairs);
  CHECK(a.layout().total == b.layout().total);
}

TEST_CASE("assignment validation") {
  ModelConfig cfg = tiny_cfg();
  AndOrModel model(cfg);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.layout().leaf_dim);
  model.create_leaf(0, w);
  model.create_leaf(1, w);

  LatentAssignment H;
  H.positions = {{0, 0}, model.anchor(0, {0, 0}), model.anchor(1, {0, 0})};
  H.active_slot = {0, 0};
  H.selected = {std::nullopt, std::nullopt};
  CHECK(!validate_assignment(model, H).has_value());

  SUBCASE("dead active slot is rejected") {
    H.active_slot[0] = 1;
    const auto err = validate_assignment(model, H);
    REQUIRE(err.has_value());
    CHECK(err->find("dead") != std::string::npos);
  }
  SUBCASE("excessive displacement is rejected") {
    H.positions[1].x += cfg.disp_radius() + 1.0;
    CHECK(validate_assignment(model, H).has_value());
  }
  SUBCASE("length mismatches are rejected") {
    H.positions.pop_back();
    CHECK(validate_assignment(model, H).has_value());
  }
}

TEST_CASE("joint feature structure: one live leaf block per or-node plus pair indicators") {
  ModelConfig cfg = tiny_cfg();
  AndOrModel model(cfg);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.layout().leaf_dim);
  model.create_leaf(0, w);
  model.create_leaf(0, w);
  model.create_leaf(1, w);
  const FeatureLayout& L = model.layout();

  ContourSet X;
  X.width = 30;
  X.height = 15;
  X.contours = {{4, {{1, 1}, {9, 4}}}, {9, {{11, 2}, {19, 8}}}};

  LatentAssignment H;
  H.positions = {{0, 0}, model.anchor(0, {0, 0}), model.anchor(1, {0, 0})};
  H.active_slot = {1, 0};
  H.selected = {std::uint32_t{4}, std::uint32_t{9}};

  const Eigen::VectorXd phi = assemble_joint(X, model, H);
  REQUIRE(phi.size() == L.total);

  // Only the active slots' leaf blocks carry mass.
  CHECK(phi.segment(L.leaf_offset(0, 0), L.leaf_dim).cwiseAbs().maxCoeff() == 0.0);
  CHECK(phi.segment(L.leaf_offset(0, 1), L.leaf_dim).sum() == doctest::Approx(cfg.sc.n_points));
  CHECK(phi.segment(L.leaf_offset(1, 0), L.leaf_dim).sum() == doctest::Approx(cfg.sc.n_points));
  CHECK(phi.segment(L.leaf_offset(1, 1), L.leaf_dim).cwiseAbs().maxCoeff() == 0.0);

  // Exactly one pair indicator set, at (slot 1, slot 0) of the single pair.
  const auto edges = phi.segment(L.edge_base(), L.edge_count);
  CHECK(edges.sum() == doctest::Approx(1.0));
  CHECK(phi[L.edge_offset(0, 1, 0)] == 1.0);

  // At the anchors the displacement blocks vanish.
  CHECK(phi.segment(L.deform_offset(0), 8).cwiseAbs().maxCoeff() == 0.0);

  // Unknown contour id is rejected.
  H.selected[0] = std::uint32_t{77};
  CHECK_THROWS(assemble_joint(X, model, H));
}

TEST_CASE("labeled feature is zero for the background label") {
  ModelConfig cfg = tiny_cfg();
  AndOrModel model(cfg);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.layout().leaf_dim);
  model.create_leaf(0, w);
  model.create_leaf(1, w);
  ContourSet X;
  X.width = 30;
  X.height = 15;
  X.contours = {{0, {{1, 1}, {9, 4}}}};
  LatentAssignment H;
  H.positions = {{0, 0}, model.anchor(0, {0, 0}), model.anchor(1, {0, 0})};
  H.active_slot = {0, 0};
  H.selected = {std::uint32_t{0}, std::nullopt};

  const Eigen::VectorXd neg = labeled_feature(X, model, -1, H);
  CHECK(neg.cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd pos = labeled_feature(X, model, 1, H);
  CHECK((pos - assemble_joint(X, model, H)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(labeled_feature(X, model, 0, H));
}

TEST_SUITE_END();
