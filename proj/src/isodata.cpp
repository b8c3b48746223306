#include "aog/isodata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace aog {

namespace {

Eigen::VectorXd mean_of(const std::vector<Eigen::VectorXd>& points, const std::vector<int>& members) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(points[static_cast<std::size_t>(members.front())].size());
  for (int k : members) m += points[static_cast<std::size_t>(k)];
  return m / static_cast<double>(members.size());
}

// Nearest centroid by squared distance, lowest index on ties; `skip` is
// excluded from consideration.
int nearest_centroid(const Eigen::VectorXd& p, const std::vector<IsodataCluster>& clusters,
                     int skip = -1) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (static_cast<int>(i) == skip) continue;
    const double d = (p - clusters[i].centroid).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

IsodataResult isodata_cluster(const std::vector<Eigen::VectorXd>& points,
                              const std::vector<std::pair<Eigen::VectorXd, int>>& seeds,
                              const IsodataOptions& opt) {
  if (opt.max_clusters < 1) throw std::invalid_argument("clustering: max_clusters must be positive");
  if (opt.min_cluster_size < 1)
    throw std::invalid_argument("clustering: min_cluster_size must be positive");
  if (opt.max_iterations < 1)
    throw std::invalid_argument("clustering: max_iterations must be positive");

  IsodataResult res;
  const int n = static_cast<int>(points.size());
  if (n == 0) {
    res.converged = true;
    return res;
  }
  const Eigen::Index dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("clustering: point dimension mismatch");
  for (const auto& s : seeds)
    if (s.first.size() != dim) throw std::invalid_argument("clustering: seed dimension mismatch");

  std::vector<IsodataCluster> clusters;
  if (seeds.empty()) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    for (const auto& p : points) m += p;
    clusters.push_back({m / static_cast<double>(n), {}, -1});
  } else {
    for (const auto& [centroid, tag] : seeds) clusters.push_back({centroid, {}, tag});
  }

  std::vector<std::vector<int>> prev_partition;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter + 1;
    bool structural = false;

    // Reassign every point to its nearest centroid.
    for (auto& c : clusters) c.members.clear();
    for (int k = 0; k < n; ++k) {
      const int c = nearest_centroid(points[static_cast<std::size_t>(k)], clusters);
      clusters[static_cast<std::size_t>(c)].members.push_back(k);
    }

    // Drop clusters that attracted nothing.
    for (std::size_t i = clusters.size(); i-- > 0;) {
      if (clusters[i].members.empty()) {
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(i));
        structural = true;
      }
    }
    for (auto& c : clusters) c.centroid = mean_of(points, c.members);

    // Dissolve undersized clusters one at a time, lowest index first; their
    // members move to the nearest surviving centroid.
    while (clusters.size() > 1) {
      int victim = -1;
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (static_cast<int>(clusters[i].members.size()) < opt.min_cluster_size) {
          victim = static_cast<int>(i);
          break;
        }
      }
      if (victim < 0) break;
      structural = true;
      std::vector<std::pair<int, int>> moves;  // (point, target cluster index)
      for (int k : clusters[static_cast<std::size_t>(victim)].members)
        moves.emplace_back(k, nearest_centroid(points[static_cast<std::size_t>(k)], clusters, victim));
      clusters.erase(clusters.begin() + victim);
      for (auto [k, target] : moves) {
        const int t = target > victim ? target - 1 : target;
        clusters[static_cast<std::size_t>(t)].members.push_back(k);
      }
      for (auto& c : clusters) {
        std::sort(c.members.begin(), c.members.end());
        c.centroid = mean_of(points, c.members);
      }
    }

    // At most one split per pass: the cluster whose widest coordinate
    // spread exceeds the threshold, cut at the centroid along it.
    if (static_cast<int>(clusters.size()) < opt.max_clusters) {
      int split_i = -1, split_d = -1;
      double best_sd = opt.split_stddev;
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto& c = clusters[i];
        if (static_cast<int>(c.members.size()) < 2 * opt.min_cluster_size) continue;
        for (Eigen::Index d = 0; d < dim; ++d) {
          double var = 0.0;
          int low_side = 0;
          for (int k : c.members) {
            const double diff = points[static_cast<std::size_t>(k)][d] - c.centroid[d];
            var += diff * diff;
            if (diff <= 0.0) ++low_side;
          }
          const double sd = std::sqrt(var / static_cast<double>(c.members.size()));
          const int high_side = static_cast<int>(c.members.size()) - low_side;
          if (low_side < opt.min_cluster_size || high_side < opt.min_cluster_size) continue;
          if (sd > best_sd) {
            best_sd = sd;
            split_i = static_cast<int>(i);
            split_d = static_cast<int>(d);
          }
        }
      }
      if (split_i >= 0) {
        structural = true;
        auto& parent = clusters[static_cast<std::size_t>(split_i)];
        std::vector<int> low, high;
        for (int k : parent.members) {
          if (points[static_cast<std::size_t>(k)][split_d] <= parent.centroid[split_d])
            low.push_back(k);
          else
            high.push_back(k);
        }
        parent.members = std::move(low);
        parent.centroid = mean_of(points, parent.members);
        IsodataCluster born;
        born.members = std::move(high);
        born.centroid = mean_of(points, born.members);
        born.origin = -1;
        clusters.push_back(std::move(born));
      }
    }

    // Greedy merge of close centroid pairs, nearest first, each cluster at
    // most once per pass; the tag of the side with more members survives.
    if (clusters.size() >= 2) {
      std::vector<std::tuple<double, int, int>> pairs;
      for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::size_t j = i + 1; j < clusters.size(); ++j) {
          const double d = (clusters[i].centroid - clusters[j].centroid).norm();
          if (d < opt.merge_distance) pairs.emplace_back(d, static_cast<int>(i), static_cast<int>(j));
        }
      std::sort(pairs.begin(), pairs.end());
      std::vector<char> used(clusters.size(), 0), dead(clusters.size(), 0);
      for (const auto& [d, i, j] : pairs) {
        if (used[static_cast<std::size_t>(i)] || used[static_cast<std::size_t>(j)]) continue;
        used[static_cast<std::size_t>(i)] = used[static_cast<std::size_t>(j)] = 1;
        dead[static_cast<std::size_t>(j)] = 1;
        structural = true;
        auto& a = clusters[static_cast<std::size_t>(i)];
        auto& b = clusters[static_cast<std::size_t>(j)];
        const double na = static_cast<double>(a.members.size());
        const double nb = static_cast<double>(b.members.size());
        a.centroid = (na * a.centroid + nb * b.centroid) / (na + nb);
        if (b.members.size() > a.members.size()) a.origin = b.origin;
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        std::sort(a.members.begin(), a.members.end());
      }
      for (std::size_t i = clusters.size(); i-- > 0;)
        if (dead[i]) clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(i));
    }

    std::vector<std::vector<int>> partition;
    partition.reserve(clusters.size());
    for (const auto& c : clusters) partition.push_back(c.members);
    std::sort(partition.begin(), partition.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });
    if (!structural && partition == prev_partition) {
      res.converged = true;
      break;
    }
    prev_partition = std::move(partition);
  }

  res.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < clusters.size(); ++i)
    for (int k : clusters[i].members) res.assignment[static_cast<std::size_t>(k)] = static_cast<int>(i);
  res.clusters = std::move(clusters);
  return res;
}

}  // namespace aog
