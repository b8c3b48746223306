#include "aog/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aog {

double ModelConfig::disp_radius() const {
  return displacement_radius >= 0.0 ? displacement_radius : 0.5 * std::min(block_w(), block_h());
}

void ModelConfig::validate() const {
  if (or_count < 1) throw std::invalid_argument("config: need at least one or-node");
  if (rows < 1 || cols < 1 || rows * cols != or_count)
    throw std::invalid_argument("config: grid rows*cols must equal or_count");
  if (max_leaves < 1) throw std::invalid_argument("config: need at least one leaf slot per or-node");
  if (!(window_w > 0.0) || !(window_h > 0.0)) throw std::invalid_argument("config: degenerate window");
  if (sc.n_points < 2 || sc.n_angles < 1 || sc.n_radii < 1)
    throw std::invalid_argument("config: bad descriptor shape");
}

FeatureLayout FeatureLayout::make(const ModelConfig& cfg) {
  cfg.validate();
  FeatureLayout L;
  L.leaf_dim = cfg.sc.descriptor_dim();
  L.or_count = cfg.or_count;
  L.max_leaves = cfg.max_leaves;
  // 4-neighbor adjacency on the rows x cols grid, each pair recorded once.
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      const int i = r * cfg.cols + c;
      if (c + 1 < cfg.cols) L.or_pairs.emplace_back(i, i + 1);
      if (r + 1 < cfg.rows) L.or_pairs.emplace_back(i, i + cfg.cols);
    }
  std::sort(L.or_pairs.begin(), L.or_pairs.end());
  L.edge_count = static_cast<int>(L.or_pairs.size()) * cfg.max_leaves * cfg.max_leaves;
  L.root_dim = cfg.or_count * cfg.sc.bins_per_point();
  L.total = cfg.slot_count() * L.leaf_dim + 4 * cfg.or_count + L.edge_count + L.root_dim;
  return L;
}

FeatureLayout::CoordRef FeatureLayout::locate(int coord) const {
  if (coord < 0 || coord >= total) throw std::out_of_range("layout: coordinate out of range");
  const int leaf_total = or_count * max_leaves * leaf_dim;
  if (coord < leaf_total) return {Kind::Leaf, coord / leaf_dim, coord % leaf_dim};
  coord -= leaf_total;
  if (coord < 4 * or_count) return {Kind::Deform, coord / 4, coord % 4};
  coord -= 4 * or_count;
  if (coord < edge_count) return {Kind::Edge, coord, 0};
  coord -= edge_count;
  return {Kind::Root, coord, 0};
}

int FeatureLayout::index_of(const CoordRef& ref) const {
  switch (ref.kind) {
    case Kind::Leaf:
      return ref.index * leaf_dim + ref.bin;
    case Kind::Deform:
      return or_count * max_leaves * leaf_dim + 4 * ref.index + ref.bin;
    case Kind::Edge:
      return edge_base() + ref.index;
    case Kind::Root:
      return root_offset() + ref.index;
  }
  throw std::logic_error("layout: bad coordinate kind");
}

AndOrModel::AndOrModel(ModelConfig cfg) : cfg_(std::move(cfg)), layout_(FeatureLayout::make(cfg_)) {
  live_.assign(static_cast<std::size_t>(cfg_.slot_count()), 0);
  omega_ = Eigen::VectorXd::Zero(layout_.total);
}

void AndOrModel::set_omega(const Eigen::VectorXd& w) {
  if (w.size() != omega_.size()) throw std::invalid_argument("set_omega: dimension mismatch");
  omega_ = w;
  zero_dead_segments();
}

void AndOrModel::check_slot(int or_idx, int slot) const {
  if (or_idx < 0 || or_idx >= cfg_.or_count) throw std::out_of_range("bad or-node index");
  if (slot < 0 || slot >= cfg_.max_leaves) throw std::out_of_range("bad slot index");
}

bool AndOrModel::slot_live(int or_idx, int slot) const {
  check_slot(or_idx, slot);
  return live_[static_cast<std::size_t>(layout_.slot_index(or_idx, slot))] != 0;
}

int AndOrModel::live_count(int or_idx) const {
  int n = 0;
  for (int s = 0; s < cfg_.max_leaves; ++s)
    if (slot_live(or_idx, s)) ++n;
  return n;
}

std::vector<int> AndOrModel::live_slots(int or_idx) const {
  std::vector<int> out;
  for (int s = 0; s < cfg_.max_leaves; ++s)
    if (slot_live(or_idx, s)) out.push_back(s);
  return out;
}

int AndOrModel::total_live() const {
  int n = 0;
  for (std::uint8_t b : live_) n += b;
  return n;
}

int AndOrModel::create_leaf(int or_idx, const Eigen::VectorXd& init_weights) {
  check_slot(or_idx, 0);
  if (init_weights.size() != layout_.leaf_dim)
    throw std::invalid_argument("create_leaf: weight dimension mismatch");
  for (int s = 0; s < cfg_.max_leaves; ++s) {
    if (!slot_live(or_idx, s)) {
      live_[static_cast<std::size_t>(layout_.slot_index(or_idx, s))] = 1;
      omega_.segment(layout_.leaf_offset(or_idx, s), layout_.leaf_dim) = init_weights;
      return s;
    }
  }
  throw std::runtime_error("create_leaf: or-node has no free slot");
}

void AndOrModel::remove_leaf(int or_idx, int slot) {
  if (!slot_live(or_idx, slot)) throw std::runtime_error("remove_leaf: slot is not live");
  live_[static_cast<std::size_t>(layout_.slot_index(or_idx, slot))] = 0;
  omega_.segment(layout_.leaf_offset(or_idx, slot), layout_.leaf_dim).setZero();
  for (std::size_t p = 0; p < layout_.or_pairs.size(); ++p) {
    const auto [a, b] = layout_.or_pairs[p];
    for (int s = 0; s < cfg_.max_leaves; ++s) {
      if (a == or_idx) omega_[layout_.edge_offset(static_cast<int>(p), slot, s)] = 0.0;
      if (b == or_idx) omega_[layout_.edge_offset(static_cast<int>(p), s, slot)] = 0.0;
    }
  }
}

void AndOrModel::zero_dead_segments() {
  for (int i = 0; i < cfg_.or_count; ++i)
    for (int s = 0; s < cfg_.max_leaves; ++s)
      if (!slot_live(i, s)) omega_.segment(layout_.leaf_offset(i, s), layout_.leaf_dim).setZero();
  for (std::size_t p = 0; p < layout_.or_pairs.size(); ++p) {
    const auto [a, b] = layout_.or_pairs[p];
    for (int sa = 0; sa < cfg_.max_leaves; ++sa)
      for (int sb = 0; sb < cfg_.max_leaves; ++sb)
        if (!slot_live(a, sa) || !slot_live(b, sb))
          omega_[layout_.edge_offset(static_cast<int>(p), sa, sb)] = 0.0;
  }
}

Point AndOrModel::anchor(int or_idx, Point p0, double scale) const {
  check_slot(or_idx, 0);
  const int r = or_idx / cfg_.cols, c = or_idx % cfg_.cols;
  return {p0.x + scale * (2 * c + 1) * 0.5 * cfg_.block_w(),
          p0.y + scale * (2 * r + 1) * 0.5 * cfg_.block_h()};
}

Block AndOrModel::block_at(Point center, double scale) const {
  return block_centered(center, scale * cfg_.block_w(), scale * cfg_.block_h());
}

Block AndOrModel::window_at(Point p0, double scale) const {
  return Block{p0, scale * cfg_.window_w, scale * cfg_.window_h};
}

std::optional<std::string> validate_assignment(const AndOrModel& model, const LatentAssignment& H) {
  const ModelConfig& cfg = model.config();
  if (static_cast<int>(H.positions.size()) != cfg.or_count + 1)
    return "positions: expected " + std::to_string(cfg.or_count + 1) + " entries";
  if (static_cast<int>(H.active_slot.size()) != cfg.or_count) return "active_slot: wrong length";
  if (static_cast<int>(H.selected.size()) != cfg.or_count) return "selected: wrong length";
  const double radius = cfg.disp_radius() + 1e-9;
  for (int i = 0; i < cfg.or_count; ++i) {
    const int s = H.active_slot[i];
    if (s < 0 || s >= cfg.max_leaves)
      return "or-node " + std::to_string(i) + ": active slot out of range";
    if (!model.slot_live(i, s))
      return "or-node " + std::to_string(i) + ": active slot " + std::to_string(s) + " is dead";
    const Point a = model.anchor(i, H.positions[0]);
    const Point p = H.positions[static_cast<std::size_t>(i) + 1];
    if (std::abs(p.x - a.x) > radius || std::abs(p.y - a.y) > radius)
      return "or-node " + std::to_string(i) + ": displacement exceeds radius";
  }
  return std::nullopt;
}

Eigen::VectorXd assemble_joint(const ContourSet& X, const AndOrModel& model, const LatentAssignment& H) {
  if (const auto err = validate_assignment(model, H))
    throw std::invalid_argument("assemble_joint: " + *err);
  const ModelConfig& cfg = model.config();
  const FeatureLayout& L = model.layout();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(L.total);

  std::vector<std::optional<Contour>> fragments(static_cast<std::size_t>(cfg.or_count));
  for (int i = 0; i < cfg.or_count; ++i) {
    const Point p = H.positions[static_cast<std::size_t>(i) + 1];
    const Block blk = model.block_at(p);
    if (H.selected[i]) {
      const Contour* c = X.find(*H.selected[i]);
      if (!c)
        throw std::invalid_argument("assemble_joint: selected contour " +
                                    std::to_string(*H.selected[i]) + " not in the contour set");
      const std::vector<Contour> parts = clip_contour(*c, blk);
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
        fragments[i] = *best;
        phi.segment(L.leaf_offset(i, H.active_slot[i]), L.leaf_dim) =
            shape_context(resample_contour(*best, cfg.sc.n_points), blk, cfg.sc);
      }
    }
    phi.segment<4>(L.deform_offset(i)) = deformation_feature(model.anchor(i, H.positions[0]), p, blk);
  }
  for (std::size_t p = 0; p < L.or_pairs.size(); ++p) {
    const auto [a, b] = L.or_pairs[p];
    phi[L.edge_offset(static_cast<int>(p), H.active_slot[a], H.active_slot[b])] = 1.0;
  }
  phi.segment(L.root_offset(), L.root_dim) =
      root_feature(fragments, model.window_at(H.positions[0]), cfg.rows, cfg.cols, cfg.sc);
  return phi;
}

Eigen::VectorXd labeled_feature(const ContourSet& X, const AndOrModel& model, int label,
                                const LatentAssignment& H) {
  if (label != 1 && label != -1) throw std::invalid_argument("labeled_feature: label must be +1 or -1");
  if (label < 0) return Eigen::VectorXd::Zero(model.layout().total);
  return assemble_joint(X, model, H);
}

}  // namespace aog
