#include <cmath>
#include <random>

#include "aog/inference.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aog;

TEST_SUITE_BEGIN("inference");

namespace {

ModelConfig toy_cfg(int rows, int cols, int m) {
  ModelConfig cfg;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.or_count = rows * cols;
  cfg.max_leaves = m;
  cfg.window_w = 12.0 * cols;
  cfg.window_h = 16.0 * rows;
  cfg.sc.n_points = 4;
  cfg.sc.n_angles = 3;
  cfg.sc.n_radii = 2;
  return cfg;
}

ContourSet random_scene(std::mt19937& rng, double w, double h, int min_c, int max_c) {
  ContourSet X;
  X.width = w;
  X.height = h;
  std::uniform_int_distribution<int> nc(min_c, max_c);
  std::uniform_int_distribution<int> npts(2, 6);
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  const int n = nc(rng);
  for (int i = 0; i < n; ++i) {
    Contour c;
    c.id = static_cast<std::uint32_t>(3 * i + 1);  // ids need not be contiguous
    const int k = npts(rng);
    while (static_cast<int>(c.points.size()) < k) {
      const Point p{ux(rng), uy(rng)};
      if (!c.points.empty() && c.points.back() == p) continue;
      c.points.push_back(p);
    }
    X.contours.push_back(std::move(c));
  }
  return X;
}

// A toy model with a random live pattern (at least one leaf per or-node)
// and normally distributed weights.
AndOrModel random_model(std::mt19937& rng, const ModelConfig& cfg) {
  AndOrModel M(cfg);
  std::uniform_int_distribution<int> extra(0, cfg.max_leaves - 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(M.layout().leaf_dim);
  for (int i = 0; i < cfg.or_count; ++i) {
    const int k = 1 + extra(rng);
    for (int s = 0; s < k; ++s) M.create_leaf(i, zero);
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd w(M.layout().total);
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = gauss(rng);
  M.set_omega(w);  // dead segments zero out automatically
  return M;
}

void check_results_match(const InferenceResult& got, const InferenceResult& want) {
  CHECK(std::abs(got.score - want.score) < 1e-9);
  REQUIRE(got.assignment.active_slot == want.assignment.active_slot);
  REQUIRE(got.assignment.selected == want.assignment.selected);
  REQUIRE(got.assignment.positions.size() == want.assignment.positions.size());
  for (std::size_t i = 0; i < got.assignment.positions.size(); ++i) {
    CHECK(std::abs(got.assignment.positions[i].x - want.assignment.positions[i].x) < 1e-9);
    CHECK(std::abs(got.assignment.positions[i].y - want.assignment.positions[i].y) < 1e-9);
  }
}

}  // namespace

TEST_CASE("window maximization matches exhaustive search") {
  std::mt19937 rng(20240817);
  const int grids[4][3] = {{1, 1, 2}, {1, 2, 2}, {2, 1, 3}, {1, 2, 3}};
  std::uniform_real_distribution<double> off(0.0, 6.0);
  for (int trial = 0; trial < 24; ++trial) {
    const auto& g = grids[trial % 4];
    const ModelConfig cfg = toy_cfg(g[0], g[1], g[2]);
    const ContourSet X = random_scene(rng, cfg.window_w + 12.0, cfg.window_h + 10.0, 1, 4);
    const AndOrModel M = random_model(rng, cfg);
    const Point p0{off(rng), off(rng)};

    const InferenceResult got = infer_best(X, M, p0);
    const InferenceResult want = oracle::brute_infer(X, M, p0);
    CAPTURE(trial);
    check_results_match(got, want);

    // The reported score is the weight dot of the reported assignment.
    CHECK(std::abs(got.score - score_assignment(X, M, got.assignment)) < 1e-9);
  }
}

TEST_CASE("slot pruning is monotone and complete at full width") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelConfig cfg = toy_cfg(1, 2, 3);
    const ContourSet X = random_scene(rng, 40.0, 30.0, 2, 4);
    const AndOrModel M = random_model(rng, cfg);
    const double full = infer_best(X, M, {2.0, 1.0}).score;
    double prev = -std::numeric_limits<double>::infinity();
    for (int t = 1; t <= cfg.max_leaves; ++t) {
      const double s = infer_best(X, M, {2.0, 1.0}, t).score;
      CHECK(s >= prev);
      prev = s;
      const InferenceResult pruned = infer_best(X, M, {2.0, 1.0}, t);
      const InferenceResult same = oracle::brute_infer(X, M, {2.0, 1.0}, t);
      check_results_match(pruned, same);
    }
    CHECK(prev == full);
  }
}

TEST_CASE("all-zero weights freeze the documented tie order") {
  const ModelConfig cfg = toy_cfg(1, 2, 2);
  ContourSet X;
  X.width = 40.0;
  X.height = 30.0;
  X.contours = {{9, {{30, 4}, {33, 9}}}, {4, {{2, 3}, {7, 8}}}};
  AndOrModel M(cfg);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(M.layout().leaf_dim);
  for (int i = 0; i < cfg.or_count; ++i) {
    M.create_leaf(i, zero);
    M.create_leaf(i, zero);
  }
  WindowScorer scorer(X, M);
  const InferenceResult res = scorer.infer_window(0, 0);
  CHECK(res.score == 0.0);
  for (int i = 0; i < cfg.or_count; ++i) {
    // First live slot, smallest contour id, earliest grid point.
    CHECK(res.assignment.active_slot[static_cast<std::size_t>(i)] == 0);
    REQUIRE(res.assignment.selected[static_cast<std::size_t>(i)].has_value());
    CHECK(*res.assignment.selected[static_cast<std::size_t>(i)] == 4);
    const Point a = M.anchor(i, {0, 0});
    const Point p = res.assignment.positions[static_cast<std::size_t>(i) + 1];
    const int nx = static_cast<int>(std::floor(cfg.disp_radius() / (cfg.block_w() / 8.0) + 1e-9));
    const int ny = static_cast<int>(std::floor(cfg.disp_radius() / (cfg.block_h() / 8.0) + 1e-9));
    CHECK(p.x == doctest::Approx(a.x - nx * cfg.block_w() / 8.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(a.y - ny * cfg.block_h() / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("quadratic displacement penalties pin blocks to their anchors") {
  const ModelConfig cfg = toy_cfg(2, 1, 2);
  ContourSet X;
  X.width = 30.0;
  X.height = 50.0;
  X.contours = {{1, {{3, 3}, {9, 12}}}};
  AndOrModel M(cfg);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(M.layout().leaf_dim);
  for (int i = 0; i < cfg.or_count; ++i) M.create_leaf(i, zero);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(M.layout().total);
  for (int i = 0; i < cfg.or_count; ++i) {
    w[M.layout().deform_offset(i) + 2] = -1.0;
    w[M.layout().deform_offset(i) + 3] = -1.0;
  }
  M.set_omega(w);
  const InferenceResult res = infer_best(X, M, {1.0, 2.0});
  CHECK(res.score == doctest::Approx(0.0).epsilon(1e-12));
  for (int i = 0; i < cfg.or_count; ++i) {
    const Point a = M.anchor(i, {1.0, 2.0});
    CHECK(res.assignment.positions[static_cast<std::size_t>(i) + 1].x == doctest::Approx(a.x).epsilon(1e-12));
    CHECK(res.assignment.positions[static_cast<std::size_t>(i) + 1].y == doctest::Approx(a.y).epsilon(1e-12));
  }
}

TEST_CASE("sliding search returns the best grid window") {
  std::mt19937 rng(99);
  const ModelConfig cfg = toy_cfg(1, 2, 2);  // window 24 x 16
  const ContourSet X = random_scene(rng, 40.0, 30.0, 3, 5);
  const AndOrModel M = random_model(rng, cfg);

  const InferenceResult best = best_window(X, M);
  double expect = -std::numeric_limits<double>::infinity();
  Point at;
  for (int r = 0; r * 2.0 <= X.height - cfg.window_h + 1e-9; ++r)
    for (int c = 0; c * 3.0 <= X.width - cfg.window_w + 1e-9; ++c) {
      const double s = infer_best(X, M, {c * 3.0, r * 2.0}).score;
      if (s > expect) {
        expect = s;
        at = {c * 3.0, r * 2.0};
      }
    }
  CHECK(best.score == doctest::Approx(expect).epsilon(1e-12));
  CHECK(best.assignment.positions[0].x == doctest::Approx(at.x).epsilon(1e-12));
  CHECK(best.assignment.positions[0].y == doctest::Approx(at.y).epsilon(1e-12));

  // A doubled stride visits a subset of the grid, so it cannot do better.
  CHECK(best_window(X, M, -1, 2).score <= best.score + 1e-12);
}

TEST_CASE("margin-violation search follows the closed form") {
  const ModelConfig cfg = toy_cfg(1, 2, 2);
  ContourSet X;
  X.width = 30.0;
  X.height = 20.0;
  X.contours = {{0, {{4, 4}, {11, 9}}}};
  AndOrModel M(cfg);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(M.layout().leaf_dim);
  for (int i = 0; i < cfg.or_count; ++i) M.create_leaf(i, zero);

  // All-zero weights: every window scores exactly zero.
  SUBCASE("zero scores") {
    const LossAugmentedResult pos = loss_augmented_infer(X, M, 1);
    CHECK(pos.label == -1);  // 0 < 0 + penalty, ties prefer the negative label
    CHECK(pos.value == 1.0);
    const LossAugmentedResult neg = loss_augmented_infer(X, M, -1);
    CHECK(neg.label == 1);  // 0 + penalty beats 0
    CHECK(neg.value == 1.0);
    CHECK(predict(X, M) == -1);  // strict sign rule
  }

  SUBCASE("consistency with the best window score") {
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd w(M.layout().total);
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = gauss(rng);
    M.set_omega(w);
    const double S = best_window(X, M).score;
    const LossAugmentedResult pos = loss_augmented_infer(X, M, 1);
    CHECK(pos.value == doctest::Approx(std::max(S, 1.0)));
    CHECK(pos.label == (S > 1.0 ? 1 : -1));
    const LossAugmentedResult neg = loss_augmented_infer(X, M, -1);
    CHECK(neg.value == doctest::Approx(std::max(S + 1.0, 0.0)));
    CHECK(neg.label == (S > -1.0 ? 1 : -1));
    CHECK(predict(X, M) == (S > 0.0 ? 1 : -1));
  }
}

TEST_CASE("overlap suppression keeps the strongest of each cluster") {
  std::vector<Detection> dets = {
      {{5, 0, 15, 10}, 0.8, 0},   // IoU 1/3 with the leader
      {{0, 0, 10, 10}, 0.9, 0},   // leader
      {{20, 0, 30, 10}, 0.7, 1},  // disjoint
  };
  SUBCASE("above the threshold") {
    const auto kept = non_max_suppress(dets, 0.3);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.7);
  }
  SUBCASE("exactly at the threshold survives") {
    const auto kept = non_max_suppress(dets, 1.0 / 3.0);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.8);
    CHECK(kept[2].score == 0.7);
  }
}

TEST_CASE("detection sweeps scales and suppresses overlaps") {
  const ModelConfig cfg = toy_cfg(1, 2, 1);
  ContourSet X;
  X.width = 60.0;
  X.height = 40.0;
  X.contours = {{0, {{25, 12}, {33, 12}, {33, 20}}}};
  AndOrModel M(cfg);
  M.create_leaf(0, Eigen::VectorXd::Zero(M.layout().leaf_dim));
  M.create_leaf(1, Eigen::VectorXd::Zero(M.layout().leaf_dim));
  // Uniform positive arrangement weights reward any window that captures
  // contour points: the dot is or_count per captured point share.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(M.layout().total);
  w.segment(M.layout().root_offset(), M.layout().root_dim).setConstant(1.0);
  M.set_omega(w);

  const auto dets = detect(X, M);
  REQUIRE(!dets.empty());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets[i].score == doctest::Approx(static_cast<double>(cfg.or_count)));
    if (i > 0) CHECK(dets[i].score <= dets[i - 1].score);
    for (std::size_t j = 0; j < i; ++j) CHECK(box_iou(dets[i].box, dets[j].box) <= 0.5);
  }

  // An impossible threshold yields nothing.
  DetectOptions strict;
  strict.threshold = 1e6;
  CHECK(detect(X, M, strict).empty());
}

TEST_CASE("rescoring with shared descriptors tracks weight changes") {
  std::mt19937 rng(4242);
  const ModelConfig cfg = toy_cfg(1, 2, 2);
  const ContourSet X = random_scene(rng, 40.0, 30.0, 2, 4);
  AndOrModel M = random_model(rng, cfg);

  FeatureCache cache;
  const InferenceResult first = best_window(X, M, -1, 1, &cache);
  CHECK(cache.size() > 0);
  const std::size_t filled = cache.size();
  // Doubling the weights doubles every score component; the cache must not
  // hold stale weight-dependent state.
  M.set_omega(2.0 * M.omega());
  const InferenceResult second = best_window(X, M, -1, 1, &cache);
  CHECK(cache.size() == filled);  // geometry unchanged, nothing new to add
  CHECK(second.score == doctest::Approx(2.0 * first.score).epsilon(1e-12));
  CHECK(second.assignment.active_slot == first.assignment.active_slot);
  CHECK(second.assignment.selected == first.assignment.selected);

  // Determinism: repeated calls agree exactly.
  const InferenceResult third = best_window(X, M, -1, 1, &cache);
  CHECK(third.score == second.score);
  CHECK(third.assignment.positions[0].x == second.assignment.positions[0].x);
}

TEST_SUITE_END();
