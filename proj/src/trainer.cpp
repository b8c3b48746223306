#include "aog/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace aog {

namespace {

int min_cluster_size(const ClusterTuning& tuning, int positive_count) {
  return std::max(2, static_cast<int>(tuning.min_fraction * positive_count));
}

IsodataOptions isodata_options(const ClusterTuning& tuning, int max_clusters, int positive_count) {
  IsodataOptions o;
  o.max_clusters = max_clusters;
  o.min_cluster_size = min_cluster_size(tuning, positive_count);
  o.split_stddev = tuning.split_stddev;
  o.merge_distance = tuning.merge_distance;
  o.max_iterations = tuning.max_iterations;
  return o;
}

// Sum of loss-augmented inference values over all samples at the model's
// current weights.
double augmented_sum(const AndOrModel& model, const std::vector<const ContourSet*>& samples,
                     const std::vector<int>& labels, int stride_mult,
                     std::vector<FeatureCache>& caches) {
  double total = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k)
    total +=
        loss_augmented_infer(*samples[k], model, labels[k], -1, stride_mult, &caches[k]).value;
  return total;
}

double median_live_norm(const AndOrModel& model, int or_idx) {
  std::vector<double> norms;
  const FeatureLayout& L = model.layout();
  for (int s : model.live_slots(or_idx))
    norms.push_back(model.omega().segment(L.leaf_offset(or_idx, s), L.leaf_dim).norm());
  if (norms.empty()) return 1.0;
  std::sort(norms.begin(), norms.end());
  const std::size_t n = norms.size();
  const double med = (n % 2 == 1) ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
  return med > 0.0 ? med : 1.0;
}

}  // namespace

InitResult initialize_model(const ModelConfig& cfg, const std::vector<ContourSet>& positives,
                            const TrainOptions& opt) {
  cfg.validate();
  if (positives.size() < 2)
    throw std::invalid_argument("initialize_model: need at least two positive samples");

  InitResult out{AndOrModel(cfg), {}, {}};
  const FeatureLayout& L = out.model.layout();
  const int n_pos = static_cast<int>(positives.size());
  const int z = cfg.or_count;

  // Per sample and or-node: the longest clipped contour piece in the
  // sample's grid cell and its descriptor.
  struct Selection {
    bool has = false;
    Contour part;
    Eigen::VectorXd feature;
    Block block;
  };
  std::vector<std::vector<Selection>> sel(static_cast<std::size_t>(n_pos),
                                          std::vector<Selection>(static_cast<std::size_t>(z)));
  for (int k = 0; k < n_pos; ++k) {
    const ContourSet& X = positives[static_cast<std::size_t>(k)];
    if (X.contours.empty()) continue;
    const BoundingBox bb = bounds_of(X.contours);
    if (!(bb.width() > 0.0) && !(bb.height() > 0.0)) continue;  // a single point spans no cells
    const double bw = bb.width() / cfg.cols, bh = bb.height() / cfg.rows;
    for (int i = 0; i < z; ++i) {
      const int r = i / cfg.cols, c = i % cfg.cols;
      const Block cell{{bb.xmin + c * bw, bb.ymin + r * bh}, bw, bh};
      Selection& s = sel[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      double best_len = 0.0;
      for (const Contour& contour : X.contours) {
        for (const Contour& part : clip_contour(contour, cell)) {
          const double len = arc_length(part.points);
          if (len > best_len) {
            best_len = len;
            s.part = part;
            s.has = true;
          }
        }
      }
      if (s.has) {
        s.block = cell;
        s.feature = shape_context(resample_contour(s.part, cfg.sc.n_points), cell, cfg.sc);
      }
    }
  }

  // Cluster each or-node's fragments and turn the clusters into leaves.
  std::vector<std::vector<int>> slot_of(static_cast<std::size_t>(z),
                                        std::vector<int>(static_cast<std::size_t>(n_pos), 0));
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(L.total);
  for (int i = 0; i < z; ++i) {
    std::vector<Eigen::VectorXd> vecs;
    std::vector<int> vec_sample;
    for (int k = 0; k < n_pos; ++k) {
      const Selection& s = sel[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      if (s.has) {
        vecs.push_back(s.feature);
        vec_sample.push_back(k);
      }
    }
    if (vecs.empty()) {
      out.model.create_leaf(i, Eigen::VectorXd::Zero(L.leaf_dim));
      out.zero_feature_or_nodes.push_back(i);
      continue;
    }
    const auto iso =
        isodata_cluster(vecs, {}, isodata_options(opt.clustering, cfg.max_leaves, n_pos));
    for (std::size_t c = 0; c < iso.clusters.size(); ++c) {
      const int slot = out.model.create_leaf(i, Eigen::VectorXd::Zero(L.leaf_dim));
      omega.segment(L.leaf_offset(i, slot), L.leaf_dim) = iso.clusters[c].centroid;
    }
    for (std::size_t v = 0; v < vecs.size(); ++v)
      slot_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(vec_sample[v])] =
          iso.assignment[v];
  }
  out.model.set_omega(omega);

  // Joint features of the seeding placements: fragments at their cells,
  // zero displacement, switches per cluster.
  out.phi0.reserve(static_cast<std::size_t>(n_pos));
  for (int k = 0; k < n_pos; ++k) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(L.total);
    std::vector<std::optional<Contour>> fragments(static_cast<std::size_t>(z));
    bool any = false;
    for (int i = 0; i < z; ++i) {
      const Selection& s = sel[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      if (!s.has) continue;
      any = true;
      fragments[static_cast<std::size_t>(i)] = s.part;
      phi.segment(L.leaf_offset(i, slot_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]),
                  L.leaf_dim) = s.feature;
    }
    for (std::size_t p = 0; p < L.or_pairs.size(); ++p) {
      const auto [a, b] = L.or_pairs[p];
      phi[L.edge_offset(static_cast<int>(p),
                        slot_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)],
                        slot_of[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)])] = 1.0;
    }
    if (any) {
      const BoundingBox bb = bounds_of(positives[static_cast<std::size_t>(k)].contours);
      const Block window{{bb.xmin, bb.ymin}, bb.width(), bb.height()};
      phi.segment(L.root_offset(), L.root_dim) =
          root_feature(fragments, window, cfg.rows, cfg.cols, cfg.sc);
    }
    out.phi0.push_back(std::move(phi));
  }
  return out;
}

LatentEstimates estimate_latent(const AndOrModel& model, const std::vector<ContourSet>& positives,
                                double penalty, int stride_mult,
                                std::vector<FeatureCache>* caches) {
  if (caches && caches->size() < positives.size())
    throw std::invalid_argument("estimate_latent: cache list shorter than the sample list");
  LatentEstimates est;
  est.hyperplane = Eigen::VectorXd::Zero(model.layout().total);
  for (std::size_t k = 0; k < positives.size(); ++k) {
    InferenceResult r;
    try {
      r = best_window(positives[k], model, -1, stride_mult, caches ? &(*caches)[k] : nullptr);
    } catch (const std::exception& e) {
      throw std::runtime_error("latent estimation failed for positive sample " +
                               std::to_string(k) + ": " + e.what());
    }
    est.score_sum += r.score;
    est.phi.push_back(assemble_joint(positives[k], model, r.assignment));
    est.hyperplane -= penalty * est.phi.back();
    est.best.push_back(std::move(r));
  }
  return est;
}

ReconfigResult reconfigure(const AndOrModel& model, const LatentEstimates& estimates,
                           const std::vector<std::uint8_t>& editable, int creation_cap,
                           int removal_cap, double penalty, const ClusterTuning& tuning) {
  const ModelConfig& cfg = model.config();
  const FeatureLayout& L = model.layout();
  const int n_pos = static_cast<int>(estimates.phi.size());
  if (estimates.best.size() != estimates.phi.size())
    throw std::invalid_argument("reconfigure: estimate lists disagree in length");
  if (creation_cap < 0 || removal_cap < 0)
    throw std::invalid_argument("reconfigure: caps must be non-negative");

  ReconfigResult out;
  out.phi_adjusted = estimates.phi;
  const bool enabled = creation_cap > 0 || removal_cap > 0;
  if (enabled) {
    if (static_cast<int>(editable.size()) != L.total)
      throw std::invalid_argument("reconfigure: mask length does not match the feature layout");

    for (int i = 0; i < cfg.or_count; ++i) {
      // Mask-restricted descriptors of the fragments detected at this
      // or-node, tagged with their current slots.
      std::vector<int> item_sample, item_slot;
      std::vector<Eigen::VectorXd> vecs;
      for (int k = 0; k < n_pos; ++k) {
        const LatentAssignment& H = estimates.best[static_cast<std::size_t>(k)].assignment;
        if (!H.selected[static_cast<std::size_t>(i)]) continue;
        const int a = H.active_slot[static_cast<std::size_t>(i)];
        const int off = L.leaf_offset(i, a);
        Eigen::VectorXd v(L.leaf_dim);
        for (int j = 0; j < L.leaf_dim; ++j)
          v[j] = editable[static_cast<std::size_t>(off + j)]
                     ? estimates.phi[static_cast<std::size_t>(k)][off + j]
                     : 0.0;
        item_sample.push_back(k);
        item_slot.push_back(a);
        vecs.push_back(std::move(v));
      }

      const std::vector<int> live_before = model.live_slots(i);
      int created_here = 0;
      if (!vecs.empty()) {
        // Seed one cluster per slot that detected something.
        std::vector<std::pair<Eigen::VectorXd, int>> seeds;
        for (int s : live_before) {
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(L.leaf_dim);
          int count = 0;
          for (std::size_t v = 0; v < vecs.size(); ++v)
            if (item_slot[v] == s) {
              mean += vecs[v];
              ++count;
            }
          if (count > 0) seeds.emplace_back(mean / count, s);
        }
        const auto iso = isodata_cluster(
            vecs, seeds, isodata_options(tuning, cfg.max_leaves, n_pos));

        // Clusters that still carry a slot tag stay there; clusters born
        // without one become creations, largest first, while free slots
        // and the cap allow.
        std::vector<int> dest(iso.clusters.size(), -1);
        std::vector<int> born;
        for (std::size_t c = 0; c < iso.clusters.size(); ++c) {
          if (iso.clusters[c].origin >= 0)
            dest[c] = iso.clusters[c].origin;
          else
            born.push_back(static_cast<int>(c));
        }
        std::sort(born.begin(), born.end(), [&](int a, int b) {
          const auto sa = iso.clusters[static_cast<std::size_t>(a)].members.size();
          const auto sb = iso.clusters[static_cast<std::size_t>(b)].members.size();
          return sa != sb ? sa > sb : a < b;
        });
        std::vector<int> free_slots;
        for (int s = 0; s < cfg.max_leaves; ++s)
          if (!model.slot_live(i, s)) free_slots.push_back(s);
        const int n_create =
            std::min({creation_cap, static_cast<int>(born.size()), static_cast<int>(free_slots.size())});
        const double scale = median_live_norm(model, i);
        for (int t = 0; t < n_create; ++t) {
          const int c = born[static_cast<std::size_t>(t)];
          dest[static_cast<std::size_t>(c)] = free_slots[static_cast<std::size_t>(t)];
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(L.leaf_dim);
          for (int v : iso.clusters[static_cast<std::size_t>(c)].members)
            mean += estimates.phi[static_cast<std::size_t>(item_sample[static_cast<std::size_t>(v)])]
                        .segment(L.leaf_offset(i, item_slot[static_cast<std::size_t>(v)]), L.leaf_dim);
          mean /= static_cast<double>(iso.clusters[static_cast<std::size_t>(c)].members.size());
          const double norm = mean.norm();
          if (norm > 0.0) mean *= scale / norm;
          out.creations.push_back({i, free_slots[static_cast<std::size_t>(t)], std::move(mean)});
          ++created_here;
        }

        // Fragments follow their cluster by relocating the bins that are
        // editable at both the source and the destination segment.
        for (std::size_t v = 0; v < vecs.size(); ++v) {
          const int d = dest[static_cast<std::size_t>(iso.assignment[v])];
          const int a = item_slot[v];
          if (d < 0 || d == a) continue;
          const int src = L.leaf_offset(i, a), dst = L.leaf_offset(i, d);
          Eigen::VectorXd& p = out.phi_adjusted[static_cast<std::size_t>(item_sample[v])];
          bool any = false;
          for (int j = 0; j < L.leaf_dim; ++j) {
            if (!editable[static_cast<std::size_t>(src + j)] ||
                !editable[static_cast<std::size_t>(dst + j)])
              continue;
            const double val = p[src + j];
            if (val != 0.0) {
              p[dst + j] = val;
              p[src + j] = 0.0;
              any = true;
            }
          }
          if (any) ++out.moves;
        }
      }

      // Live slots whose segment carries nothing in any adjusted anchor
      // can go, newest-structure liveness staying at one or more.
      int live_after = static_cast<int>(live_before.size()) + created_here;
      int removed = 0;
      for (int s : live_before) {
        if (removed >= removal_cap || live_after <= 1) break;
        bool all_zero = true;
        for (int k = 0; all_zero && k < n_pos; ++k)
          all_zero = out.phi_adjusted[static_cast<std::size_t>(k)]
                         .segment(L.leaf_offset(i, s), L.leaf_dim)
                         .isZero(0.0);
        if (all_zero) {
          out.removals.emplace_back(i, s);
          ++removed;
          --live_after;
        }
      }
    }
  }

  out.hyperplane = Eigen::VectorXd::Zero(L.total);
  for (const auto& phi : out.phi_adjusted) out.hyperplane -= penalty * phi;
  return out;
}

void apply_reconfig(AndOrModel& model, const ReconfigResult& plan) {
  for (const LeafCreation& cr : plan.creations) {
    const int got = model.create_leaf(cr.or_idx, cr.weights);
    if (got != cr.slot)
      throw std::logic_error("apply_reconfig: slot allocation does not match the plan");
  }
  for (const auto& [or_idx, slot] : plan.removals) model.remove_leaf(or_idx, slot);
}

TrainResult train(const ModelConfig& cfg, const std::vector<ContourSet>& positives,
                  const std::vector<ContourSet>& negatives, const TrainOptions& opt) {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("train: need both positive and negative samples");
  if (!(opt.penalty > 0.0)) throw std::invalid_argument("train: penalty must be positive");
  if (opt.max_iterations < 1) throw std::invalid_argument("train: need at least one iteration");
  if (opt.stride_mult < 1) throw std::invalid_argument("train: stride multiplier must be positive");

  InitResult init = initialize_model(cfg, positives, opt);
  AndOrModel model = std::move(init.model);
  const FeatureLayout& L = model.layout();
  const double D = opt.penalty;
  const int n_pos = static_cast<int>(positives.size());
  const int n_all = n_pos + static_cast<int>(negatives.size());

  std::vector<const ContourSet*> samples;
  std::vector<int> labels;
  for (const auto& X : positives) {
    samples.push_back(&X);
    labels.push_back(1);
  }
  for (const auto& X : negatives) {
    samples.push_back(&X);
    labels.push_back(-1);
  }
  std::vector<FeatureCache> caches(static_cast<std::size_t>(n_all));

  TrainReport report;
  report.zero_feature_or_nodes = init.zero_feature_or_nodes;

  double prev_obj = 0.0;
  bool have_prev = false;
  bool last_plan_empty = false;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    const LatentEstimates est = estimate_latent(model, positives, D, opt.stride_mult, &caches);
    const double lai_here = augmented_sum(model, samples, labels, opt.stride_mult, caches);
    const double obj =
        0.5 * model.omega().squaredNorm() + D * lai_here - D * est.score_sum;
    report.final_objective = obj;

    if (have_prev && last_plan_empty &&
        std::abs(obj - prev_obj) < opt.rel_tol * std::max(1.0, std::abs(prev_obj))) {
      report.converged = true;
      if (opt.log)
        *opt.log << "iteration " << iter << ": objective " << obj << ", converged\n";
      break;
    }
    prev_obj = obj;
    have_prev = true;

    IterationRecord rec_out;
    rec_out.objective = obj;
    if (opt.record_snapshots) {
      rec_out.omega = model.omega();
      rec_out.score_sum = est.score_sum;
    }

    ReconfigResult plan;
    if ((opt.creation_cap > 0 || opt.removal_cap > 0) && n_pos >= 2) {
      const auto pca = pca_refactor(est.phi, opt.sigma, opt.delta);
      plan = reconfigure(model, est, pca.low_loading, opt.creation_cap, opt.removal_cap, D,
                         opt.clustering);
    } else {
      plan = reconfigure(model, est, {}, 0, 0, D, opt.clustering);
    }
    last_plan_empty = plan.empty();
    rec_out.plan_empty = last_plan_empty;
    rec_out.creations = static_cast<int>(plan.creations.size());
    rec_out.removals = static_cast<int>(plan.removals.size());
    rec_out.moves = plan.moves;
    if (opt.record_snapshots) rec_out.hyperplane = plan.hyperplane;

    apply_reconfig(model, plan);
    const bool structure_changed = !plan.creations.empty() || !plan.removals.empty();
    const double lai_old =
        structure_changed ? augmented_sum(model, samples, labels, opt.stride_mult, caches)
                          : lai_here;
    const Eigen::VectorXd omega_old = model.omega();
    const double surrogate_old =
        0.5 * omega_old.squaredNorm() + D * lai_old + omega_old.dot(plan.hyperplane);

    std::vector<Eigen::VectorXd> anchors;
    anchors.reserve(static_cast<std::size_t>(n_all));
    for (int k = 0; k < n_pos; ++k) anchors.push_back(plan.phi_adjusted[static_cast<std::size_t>(k)]);
    for (int k = n_pos; k < n_all; ++k) anchors.push_back(Eigen::VectorXd::Zero(L.total));

    SolverOptions sopt = opt.solver;
    sopt.penalty = D;
    sopt.zero_edge_coords = !cfg.use_edges;
    sopt.layout = &L;

    AndOrModel scratch = model;
    const SeparationOracle oracle = [&](int k, const Eigen::VectorXd& w) -> SeparationResult {
      if (std::memcmp(scratch.omega().data(), w.data(),
                      sizeof(double) * static_cast<std::size_t>(w.size())) != 0)
        scratch.set_omega(w);
      const LossAugmentedResult lar = loss_augmented_infer(
          *samples[static_cast<std::size_t>(k)], scratch, labels[static_cast<std::size_t>(k)], -1,
          opt.stride_mult, &caches[static_cast<std::size_t>(k)]);
      SeparationResult sep;
      sep.value = lar.value;
      sep.loss = lar.label == labels[static_cast<std::size_t>(k)] ? 0.0 : 1.0;
      sep.phi = lar.label > 0
                    ? assemble_joint(*samples[static_cast<std::size_t>(k)], scratch,
                                     lar.window.assignment)
                    : Eigen::VectorXd::Zero(L.total);
      return sep;
    };

    SolverReport sol;
    try {
      sol = solve_ssvm(anchors, oracle, sopt);
    } catch (const std::exception& e) {
      throw std::runtime_error("training iteration " + std::to_string(iter) +
                               ": solver failed: " + e.what());
    }
    rec_out.solver_rounds = sol.rounds;
    rec_out.constraints = sol.constraints;

    // Adopt the new weights only when the exact surrogate they were solved
    // for does not get worse; the dead-slot invariant is applied first.
    AndOrModel probe = model;
    probe.set_omega(sol.omega);
    const double lai_new = augmented_sum(probe, samples, labels, opt.stride_mult, caches);
    const double surrogate_new =
        0.5 * probe.omega().squaredNorm() + D * lai_new + probe.omega().dot(plan.hyperplane);
    rec_out.surrogate_old = surrogate_old;
    rec_out.surrogate_new = surrogate_new;
    rec_out.accepted = surrogate_new <= surrogate_old;
    if (rec_out.accepted) model.set_omega(probe.omega());

    if (opt.log)
      *opt.log << "iteration " << iter << ": objective " << obj << ", creations "
               << rec_out.creations << ", removals " << rec_out.removals << ", moves "
               << rec_out.moves << ", solver rounds " << rec_out.solver_rounds << ", constraints "
               << rec_out.constraints << (rec_out.accepted ? "" : ", weights kept") << "\n";
    report.iterations.push_back(std::move(rec_out));
  }

  return {std::move(model), std::move(report)};
}

}  // namespace aog
