#include "aog/ssvm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aog {

namespace {

void zero_edge_block(Eigen::VectorXd& v, const FeatureLayout& L) {
  v.segment(L.edge_base(), L.edge_count).setZero();
}

// Slack of one sample implied by its working set under the given weights.
double restricted_slack(const SampleDual& s, const Eigen::VectorXd& omega) {
  double best = 0.0;
  for (const MarginConstraint& c : s.set) best = std::max(best, c.loss - omega.dot(c.dphi));
  return best;
}

}  // namespace

Eigen::VectorXd recover_omega(const std::vector<SampleDual>& duals, double penalty, int dim) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const SampleDual& s : duals)
    for (const MarginConstraint& c : s.set)
      if (c.alpha != 0.0) acc.noalias() += c.alpha * c.dphi;
  return penalty * acc;
}

double dual_objective(const std::vector<SampleDual>& duals, double penalty, int dim) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  double loss_sum = 0.0;
  for (const SampleDual& s : duals)
    for (const MarginConstraint& c : s.set) {
      if (c.alpha == 0.0) continue;
      acc.noalias() += c.alpha * c.dphi;
      loss_sum += c.alpha * c.loss;
    }
  return penalty * (loss_sum - 0.5 * penalty * acc.squaredNorm());
}

int smo_ascent(std::vector<SampleDual>& duals, Eigen::VectorXd& omega, const SolverOptions& opt) {
  const double D = opt.penalty;
  const int dim = static_cast<int>(omega.size());
  int sweep = 0;
  std::vector<double> g;
  for (; sweep < opt.max_sweeps; ++sweep) {
    double worst = 0.0;
    for (SampleDual& s : duals) {
      // Repeatedly move weight from the worst held constraint to the most
      // violated one until this sample is stationary.
      for (int inner = 0; inner < 1000; ++inner) {
        g.resize(s.set.size());
        int a = 0, b = -1;
        for (std::size_t c = 0; c < s.set.size(); ++c) {
          g[c] = s.set[c].loss - omega.dot(s.set[c].dphi);
          if (g[c] > g[static_cast<std::size_t>(a)]) a = static_cast<int>(c);
        }
        for (std::size_t c = 0; c < s.set.size(); ++c) {
          if (s.set[c].alpha <= 0.0) continue;
          if (b < 0 || g[c] < g[static_cast<std::size_t>(b)]) b = static_cast<int>(c);
        }
        if (b < 0) break;  // no mass anywhere (cannot happen with the slack entry)
        const double viol = g[static_cast<std::size_t>(a)] - g[static_cast<std::size_t>(b)];
        if (inner == 0) worst = std::max(worst, viol);
        if (viol <= opt.eps_kkt || a == b) break;
        MarginConstraint& ca = s.set[static_cast<std::size_t>(a)];
        MarginConstraint& cb = s.set[static_cast<std::size_t>(b)];
        const double denom = D * (ca.dphi - cb.dphi).squaredNorm();
        const double t = denom > 0.0 ? std::min(viol / denom, cb.alpha) : cb.alpha;
        if (t <= 0.0) break;
        ca.alpha += t;
        cb.alpha -= t;
        omega.noalias() += (D * t) * (ca.dphi - cb.dphi);
      }
    }
    if (worst <= opt.eps_kkt) {
      ++sweep;
      break;
    }
  }
  // Rebuild exactly from the duals so incremental drift cannot accumulate.
  omega = recover_omega(duals, D, dim);
  return sweep;
}

SolverReport solve_ssvm(const std::vector<Eigen::VectorXd>& anchors,
                        const SeparationOracle& oracle, const SolverOptions& opt) {
  if (anchors.empty()) throw std::invalid_argument("solve_ssvm: no samples");
  if (opt.zero_edge_coords && !opt.layout)
    throw std::invalid_argument("solve_ssvm: edge ablation needs the feature layout");
  const int dim = static_cast<int>(anchors.front().size());
  for (const auto& a : anchors)
    if (a.size() != dim) throw std::invalid_argument("solve_ssvm: anchor dimension mismatch");
  const int n = static_cast<int>(anchors.size());
  const double D = opt.penalty;

  std::vector<SampleDual> duals(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    SampleDual& s = duals[static_cast<std::size_t>(k)];
    s.anchor = anchors[static_cast<std::size_t>(k)];
    if (opt.zero_edge_coords) zero_edge_block(s.anchor, *opt.layout);
    s.set.push_back(MarginConstraint{Eigen::VectorXd::Zero(dim), 0.0, 1.0});
  }

  SolverReport rep;
  rep.omega = Eigen::VectorXd::Zero(dim);
  rep.slack.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> sep_gap(static_cast<std::size_t>(n), 0.0);
  for (int round = 1; round <= opt.max_rounds; ++round) {
    rep.rounds = round;
    bool added = false;
    for (int k = 0; k < n; ++k) {
      SampleDual& s = duals[static_cast<std::size_t>(k)];
      SeparationResult sep = oracle(k, rep.omega);
      if (opt.zero_edge_coords) zero_edge_block(sep.phi, *opt.layout);
      // Excess of the strongest candidate over what the working set
      // already accounts for.
      const double gap = sep.value - rep.omega.dot(s.anchor);
      sep_gap[static_cast<std::size_t>(k)] = gap;
      if (gap > restricted_slack(s, rep.omega) + opt.eps_violation) {
        s.set.push_back(MarginConstraint{s.anchor - sep.phi, sep.loss, 0.0});
        added = true;
      }
    }
    if (!added) {
      rep.converged = true;
      break;
    }
    smo_ascent(duals, rep.omega, opt);
    rep.dual_history.push_back(dual_objective(duals, D, dim));
    if (opt.prune_every > 0 && round % opt.prune_every == 0)
      for (SampleDual& s : duals)
        s.set.erase(std::remove_if(s.set.begin() + 1, s.set.end(),
                                   [&](const MarginConstraint& c) {
                                     return c.alpha < opt.prune_below;
                                   }),
                    s.set.end());
  }

  if (!rep.converged) {
    // The weights moved after the last separation pass; refresh the gaps
    // so the reported primal value matches the final weights.
    for (int k = 0; k < n; ++k) {
      const SeparationResult sep = oracle(k, rep.omega);
      sep_gap[static_cast<std::size_t>(k)] =
          sep.value - rep.omega.dot(duals[static_cast<std::size_t>(k)].anchor);
    }
  }
  double slack_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double xi = std::max(0.0, sep_gap[static_cast<std::size_t>(k)]);
    rep.slack[static_cast<std::size_t>(k)] = xi;
    slack_sum += xi;
  }
  rep.primal_objective = 0.5 * rep.omega.squaredNorm() + D * slack_sum;
  rep.dual_objective = dual_objective(duals, D, dim);
  rep.constraints = 0;
  for (const SampleDual& s : duals) rep.constraints += static_cast<int>(s.set.size()) - 1;
  return rep;
}

}  // namespace aog
