#include "aog/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aog {

namespace {

constexpr int kCoordBits = 22;
constexpr std::int64_t kCoordMask = (std::int64_t{1} << kCoordBits) - 1;
constexpr int kCoordOffset = 1 << (kCoordBits - 1);

std::int64_t pack_key(std::uint32_t cid, int ix, int iy) {
  return (static_cast<std::int64_t>(cid) << (2 * kCoordBits)) |
         ((static_cast<std::int64_t>(ix) + kCoordOffset) & kCoordMask) << kCoordBits |
         ((static_cast<std::int64_t>(iy) + kCoordOffset) & kCoordMask);
}

std::int64_t pack_window_key(int ix0, int iy0) {
  return ((static_cast<std::int64_t>(ix0) + kCoordOffset) & kCoordMask) << kCoordBits |
         ((static_cast<std::int64_t>(iy0) + kCoordOffset) & kCoordMask);
}

bool overlaps(const BoundingBox& bb, const Block& blk) {
  return bb.xmin <= blk.x1() && bb.xmax >= blk.origin.x && bb.ymin <= blk.y1() &&
         bb.ymax >= blk.origin.y;
}

}  // namespace

LocalDescriptor* FeatureCache::find(std::int64_t key) {
  const auto it = map_.find(key);
  return it == map_.end() ? nullptr : &it->second;
}

LocalDescriptor& FeatureCache::emplace(std::int64_t key, LocalDescriptor&& d) {
  return map_.emplace(key, std::move(d)).first->second;
}

const std::vector<std::int32_t>* FeatureCache::find_root_bins(std::int64_t desc_key,
                                                              std::int64_t window_key) const {
  const auto it = root_bins_.find({desc_key, window_key});
  return it == root_bins_.end() ? nullptr : &it->second;
}

const std::vector<std::int32_t>& FeatureCache::emplace_root_bins(
    std::int64_t desc_key, std::int64_t window_key, std::vector<std::int32_t>&& bins) {
  return root_bins_.emplace(std::make_pair(desc_key, window_key), std::move(bins)).first->second;
}

WindowScorer::WindowScorer(const ContourSet& X, const AndOrModel& model, Point base,
                           FeatureCache* shared_cache)
    : X_(&X), model_(&model), base_(base), cache_(shared_cache ? shared_cache : &own_cache_) {
  const ModelConfig& cfg = model.config();
  lx_ = cfg.block_w() / 8.0;
  ly_ = cfg.block_h() / 8.0;
  nx_ = static_cast<int>(std::floor(cfg.disp_radius() / lx_ + 1e-9));
  ny_ = static_cast<int>(std::floor(cfg.disp_radius() / ly_ + 1e-9));
  ax_.resize(static_cast<std::size_t>(cfg.or_count));
  ay_.resize(static_cast<std::size_t>(cfg.or_count));
  for (int i = 0; i < cfg.or_count; ++i) {
    ax_[static_cast<std::size_t>(i)] = (2 * (i % cfg.cols) + 1) * 4;
    ay_[static_cast<std::size_t>(i)] = (2 * (i / cfg.cols) + 1) * 4;
  }
  contours_.reserve(X.contours.size());
  for (const Contour& c : X.contours) contours_.push_back(&c);
  std::sort(contours_.begin(), contours_.end(),
            [](const Contour* a, const Contour* b) { return a->id < b->id; });
  boxes_.reserve(contours_.size());
  for (const Contour* c : contours_) boxes_.push_back(bounds_of({*c}));
}

const LocalDescriptor& WindowScorer::descriptor(std::size_t ci, int ix, int iy) {
  const std::int64_t key = pack_key(contours_[ci]->id, ix, iy);
  if (LocalDescriptor* hit = cache_->find(key)) return *hit;

  const ShapeContextConfig& sc = model_->config().sc;
  LocalDescriptor d;
  d.sc = Feature::Zero(sc.descriptor_dim());
  const Block blk = model_->block_at(position(ix, iy));
  const std::vector<Contour> parts = clip_contour(*contours_[ci], blk);
  if (!parts.empty()) {
    const Contour* best = &parts.front();
    double best_len = arc_length(best->points);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const double len = arc_length(parts[k].points);
      if (len > best_len) {
        best = &parts[k];
        best_len = len;
      }
    }
    d.pts = resample_contour(*best, sc.n_points);
    d.sc = shape_context(d.pts, blk, sc);
  }
  return cache_->emplace(key, std::move(d));
}

InferenceResult WindowScorer::infer_window(int ix0, int iy0, int prune) {
  const ModelConfig& cfg = model_->config();
  const FeatureLayout& L = model_->layout();
  const Eigen::VectorXd& w = model_->omega();
  const int z = cfg.or_count;
  const Point p0 = position(ix0, iy0);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<int>> live(static_cast<std::size_t>(z));
  for (int i = 0; i < z; ++i) {
    live[static_cast<std::size_t>(i)] = model_->live_slots(i);
    if (live[static_cast<std::size_t>(i)].empty())
      throw std::runtime_error("infer_window: or-node " + std::to_string(i) + " has no live leaves");
  }

  const Block win = model_->window_at(p0);
  const std::vector<Point> centers = cell_centers(win, cfg.rows, cfg.cols);
  const double R = win.diagonal();
  const auto wr = w.segment(L.root_offset(), L.root_dim);
  const int bins = cfg.sc.bins_per_point();
  const std::int64_t wkey = pack_window_key(ix0, iy0);

  struct Candidate {
    double val = -std::numeric_limits<double>::infinity();
    int ix = 0, iy = 0;
    std::optional<std::uint32_t> selected;
  };

  // Per or-node: the best fragment-free placement, the best
  // fragment-bearing placement per (slot, total carried count), and the
  // best local score per slot for prune ranking.
  std::vector<Candidate> neutral(static_cast<std::size_t>(z));
  std::vector<std::vector<Candidate>> carry(static_cast<std::size_t>(z));
  std::vector<std::vector<double>> localbest(static_cast<std::size_t>(z));
  for (int i = 0; i < z; ++i) {
    carry[static_cast<std::size_t>(i)].assign(
        live[static_cast<std::size_t>(i)].size() * static_cast<std::size_t>(z), Candidate{});
    localbest[static_cast<std::size_t>(i)].assign(live[static_cast<std::size_t>(i)].size(), -kInf);
  }

  // Pass one: one sweep of each or-node's displacement lattice fills every
  // per-slot, per-carried-count best. The arrangement dot splits into one
  // share per carrying member once the carried count is fixed, because
  // every fragment resamples to the same point count.
  for (int i = 0; i < z; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    const auto& slots = live[ui];
    auto& bear = carry[ui];
    auto& lb = localbest[ui];
    Candidate& neu = neutral[ui];
    const Point anchor = model_->anchor(i, p0);
    const auto wd = w.segment<4>(L.deform_offset(i));
    for (int ky = -ny_; ky <= ny_; ++ky) {
      for (int kx = -nx_; kx <= nx_; ++kx) {
        const int ix = ix0 + ax_[ui] + kx;
        const int iy = iy0 + ay_[ui] + ky;
        const Point p = position(ix, iy);
        const Block blk = model_->block_at(p);
        const double ddot = wd.dot(deformation_feature(anchor, p, blk));
        if (ddot > neu.val) neu = Candidate{ddot, ix, iy, std::nullopt};
        for (std::size_t ci = 0; ci < contours_.size(); ++ci) {
          if (!overlaps(boxes_[ci], blk)) continue;
          const LocalDescriptor& d = descriptor(ci, ix, iy);
          // A contour whose fragment is empty scores exactly like the
          // empty choice, which the fragment-free candidate covers.
          if (d.pts.empty()) continue;
          const std::int64_t dkey = pack_key(contours_[ci]->id, ix, iy);
          const std::vector<std::int32_t>* idx = cache_->find_root_bins(dkey, wkey);
          if (!idx) {
            std::vector<std::int32_t> fresh;
            fresh.reserve(d.pts.size() * centers.size());
            for (const Point& q : d.pts)
              for (std::size_t cc = 0; cc < centers.size(); ++cc)
                fresh.push_back(static_cast<std::int32_t>(
                    static_cast<int>(cc) * bins +
                    polar_bin(q.x - centers[cc].x, q.y - centers[cc].y, R, cfg.sc)));
            idx = &cache_->emplace_root_bins(dkey, wkey, std::move(fresh));
          }
          double mass = 0.0;
          for (const std::int32_t b : *idx) mass += wr[b];
          const double per_point = mass / cfg.sc.n_points;
          for (std::size_t sj = 0; sj < slots.size(); ++sj) {
            const double local =
                ddot + w.segment(L.leaf_offset(i, slots[sj]), L.leaf_dim).dot(d.sc);
            if (local > lb[sj]) lb[sj] = local;
            for (int k = 1; k <= z; ++k) {
              const double v = local + per_point / k;
              Candidate& slot =
                  bear[sj * static_cast<std::size_t>(z) + static_cast<std::size_t>(k - 1)];
              if (v > slot.val) slot = Candidate{v, ix, iy, contours_[ci]->id};
            }
          }
        }
      }
    }
    for (std::size_t sj = 0; sj < slots.size(); ++sj)
      if (neu.val > lb[sj]) lb[sj] = neu.val;
  }

  // Pass two: exact search over slot switches (optionally pruned to each
  // or-node's strongest slots by local score) and over the carried count;
  // within a count the members with the largest gain over their
  // fragment-free alternative are taken, which is exact because the
  // candidate values already embed the count's arrangement share.
  std::vector<std::vector<int>> pick(static_cast<std::size_t>(z));
  for (int i = 0; i < z; ++i) {
    auto& p = pick[static_cast<std::size_t>(i)];
    p.resize(localbest[static_cast<std::size_t>(i)].size());
    for (std::size_t e = 0; e < p.size(); ++e) p[e] = static_cast<int>(e);
    if (prune > 0 && prune < static_cast<int>(p.size())) {
      const auto& lb = localbest[static_cast<std::size_t>(i)];
      std::sort(p.begin(), p.end(), [&](int a, int b) {
        if (lb[static_cast<std::size_t>(a)] != lb[static_cast<std::size_t>(b)])
          return lb[static_cast<std::size_t>(a)] > lb[static_cast<std::size_t>(b)];
        return a < b;
      });
      p.resize(static_cast<std::size_t>(prune));
      std::sort(p.begin(), p.end());
    }
  }

  double neutral_sum = 0.0;
  for (int i = 0; i < z; ++i) neutral_sum += neutral[static_cast<std::size_t>(i)].val;

  std::vector<std::size_t> it(static_cast<std::size_t>(z), 0);
  std::vector<int> cur(static_cast<std::size_t>(z), 0);
  std::vector<std::pair<double, int>> gain;
  gain.reserve(static_cast<std::size_t>(z));
  std::vector<char> members(static_cast<std::size_t>(z), 0);
  double best_score = -kInf;
  std::vector<int> best_entry;
  int best_count = 0;
  std::vector<char> best_members;
  for (;;) {
    for (int i = 0; i < z; ++i)
      cur[static_cast<std::size_t>(i)] =
          pick[static_cast<std::size_t>(i)][it[static_cast<std::size_t>(i)]];
    double base = neutral_sum;
    for (std::size_t pi = 0; pi < L.or_pairs.size(); ++pi) {
      const auto [a, b] = L.or_pairs[pi];
      const int sa = live[static_cast<std::size_t>(a)][static_cast<std::size_t>(cur[static_cast<std::size_t>(a)])];
      const int sb = live[static_cast<std::size_t>(b)][static_cast<std::size_t>(cur[static_cast<std::size_t>(b)])];
      base += w[L.edge_offset(static_cast<int>(pi), sa, sb)];
    }
    for (int k = z; k >= 0; --k) {
      double total = base;
      std::fill(members.begin(), members.end(), 0);
      if (k > 0) {
        gain.clear();
        for (int i = 0; i < z; ++i) {
          const std::size_t ui = static_cast<std::size_t>(i);
          const Candidate& c = carry[ui][static_cast<std::size_t>(cur[ui]) * static_cast<std::size_t>(z) +
                                         static_cast<std::size_t>(k - 1)];
          if (c.val == -kInf) continue;
          gain.emplace_back(c.val - neutral[ui].val, i);
        }
        if (static_cast<int>(gain.size()) < k) continue;
        std::sort(gain.begin(), gain.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        for (int t = 0; t < k; ++t) {
          total += gain[static_cast<std::size_t>(t)].first;
          members[static_cast<std::size_t>(gain[static_cast<std::size_t>(t)].second)] = 1;
        }
      }
      if (total > best_score) {
        best_score = total;
        best_entry = cur;
        best_count = k;
        best_members = members;
      }
    }
    int d = z - 1;
    while (d >= 0) {
      auto& idx = it[static_cast<std::size_t>(d)];
      if (++idx < pick[static_cast<std::size_t>(d)].size()) break;
      idx = 0;
      --d;
    }
    if (d < 0) break;
  }

  InferenceResult out;
  out.score = best_score;
  out.assignment.positions.resize(static_cast<std::size_t>(z) + 1);
  out.assignment.positions[0] = p0;
  out.assignment.active_slot.resize(static_cast<std::size_t>(z));
  out.assignment.selected.resize(static_cast<std::size_t>(z));
  for (int i = 0; i < z; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    const Candidate& c =
        best_members[ui]
            ? carry[ui][static_cast<std::size_t>(best_entry[ui]) * static_cast<std::size_t>(z) +
                        static_cast<std::size_t>(best_count - 1)]
            : neutral[ui];
    out.assignment.positions[ui + 1] = position(c.ix, c.iy);
    out.assignment.active_slot[ui] = live[ui][static_cast<std::size_t>(best_entry[ui])];
    out.assignment.selected[ui] = c.selected;
  }
  return out;
}

InferenceResult infer_best(const ContourSet& X, const AndOrModel& model, Point p0, int prune) {
  WindowScorer scorer(X, model, p0);
  return scorer.infer_window(0, 0, prune);
}

double score_assignment(const ContourSet& X, const AndOrModel& model, const LatentAssignment& H) {
  return model.omega().dot(assemble_joint(X, model, H));
}

InferenceResult best_window(const ContourSet& X, const AndOrModel& model, int prune,
                            int stride_mult, FeatureCache* shared_cache) {
  const ModelConfig& cfg = model.config();
  WindowScorer scorer(X, model, {0.0, 0.0}, shared_cache);
  const int mult = std::max(1, stride_mult);
  const int sx = mult * cfg.cols, sy = mult * cfg.rows;  // = stride_mult * window/8 in pixels
  const double step_x = sx * scorer.lambda_x(), step_y = sy * scorer.lambda_y();
  const int cnt_x =
      1 + std::max(0, static_cast<int>(std::floor((X.width - cfg.window_w) / step_x + 1e-9)));
  const int cnt_y =
      1 + std::max(0, static_cast<int>(std::floor((X.height - cfg.window_h) / step_y + 1e-9)));

  InferenceResult best;
  best.score = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < cnt_y; ++r)
    for (int c = 0; c < cnt_x; ++c) {
      InferenceResult res = scorer.infer_window(c * sx, r * sy, prune);
      if (res.score > best.score) best = std::move(res);
    }
  return best;
}

int predict(const ContourSet& X, const AndOrModel& model, int prune) {
  return best_window(X, model, prune).score > 0.0 ? 1 : -1;
}

LossAugmentedResult loss_augmented_infer(const ContourSet& X, const AndOrModel& model, int y_true,
                                         int prune, int stride_mult, FeatureCache* shared_cache) {
  if (y_true != 1 && y_true != -1)
    throw std::invalid_argument("loss_augmented_infer: label must be +1 or -1");
  LossAugmentedResult out;
  out.window = best_window(X, model, prune, stride_mult, shared_cache);
  const double pos = out.window.score + (y_true == 1 ? 0.0 : 1.0);
  const double neg = y_true == 1 ? 1.0 : 0.0;
  if (pos > neg) {
    out.label = 1;
    out.value = pos;
  } else {
    out.label = -1;
    out.value = neg;
  }
  return out;
}

std::vector<Detection> non_max_suppress(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.scale != b.scale) return a.scale < b.scale;
    if (a.box.ymin != b.box.ymin) return a.box.ymin < b.box.ymin;
    if (a.box.xmin != b.box.xmin) return a.box.xmin < b.box.xmin;
    if (a.box.ymax != b.box.ymax) return a.box.ymax < b.box.ymax;
    return a.box.xmax < b.box.xmax;
  });
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    bool suppressed = false;
    for (const Detection& k : kept)
      if (box_iou(d.box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> detect(const ContourSet& X, const AndOrModel& model,
                              const DetectOptions& opt) {
  const ModelConfig& cfg = model.config();
  std::vector<Detection> found;
  const std::vector<ContourSet> pyramid = build_scale_pyramid(X, opt.num_scales, opt.per_octave);
  for (int k = 0; k < static_cast<int>(pyramid.size()); ++k) {
    const ContourSet& Xk = pyramid[static_cast<std::size_t>(k)];
    const double s = pyramid_scale(k, opt.per_octave);
    WindowScorer scorer(Xk, model);
    const int mult = std::max(1, opt.stride_mult);
    const int sx = mult * cfg.cols, sy = mult * cfg.rows;
    const double step_x = sx * scorer.lambda_x(), step_y = sy * scorer.lambda_y();
    const int cnt_x =
        1 + std::max(0, static_cast<int>(std::floor((Xk.width - cfg.window_w) / step_x + 1e-9)));
    const int cnt_y =
        1 + std::max(0, static_cast<int>(std::floor((Xk.height - cfg.window_h) / step_y + 1e-9)));
    for (int r = 0; r < cnt_y; ++r)
      for (int c = 0; c < cnt_x; ++c) {
        const InferenceResult res = scorer.infer_window(c * sx, r * sy, opt.prune);
        if (res.score > opt.threshold) {
          const Point p0 = res.assignment.positions[0];
          found.push_back(Detection{{p0.x / s, p0.y / s, (p0.x + cfg.window_w) / s,
                                     (p0.y + cfg.window_h) / s},
                                    res.score, k});
        }
      }
  }
  return non_max_suppress(std::move(found), opt.nms_iou);
}

}  // namespace aog
