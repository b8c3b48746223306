#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace aog {

struct IsodataOptions {
  int max_clusters = 4;        // hard ceiling on the number of clusters
  int min_cluster_size = 2;    // smaller clusters are dissolved into their neighbors
  double split_stddev = 0.35;  // split when some coordinate's spread exceeds this
  double merge_distance = 0.15;  // merge centroids closer than this
  int max_iterations = 20;
};

struct IsodataCluster {
  Eigen::VectorXd centroid;  // mean of the member points
  std::vector<int> members;  // indices into the input list, ascending
  // Tag carried from the seed that started the cluster; clusters born from
  // a split get -1. Merges keep the tag of the larger side.
  int origin = -1;
};

struct IsodataResult {
  std::vector<IsodataCluster> clusters;
  std::vector<int> assignment;  // per input point: index into `clusters`
  int iterations = 0;
  bool converged = false;  // the last pass changed nothing
};

// Deterministic split-and-merge clustering with Euclidean distances and no
// randomness. Each pass reassigns points to their nearest centroid (ties:
// lowest cluster index), drops empty clusters, dissolves clusters below
// min_cluster_size one at a time (lowest index first, members move to the
// nearest surviving centroid), performs at most one split (the cluster with
// the largest per-coordinate standard deviation above split_stddev, cut at
// its centroid along that coordinate, considered only when it has at least
// 2*min_cluster_size members and both sides of the cut keep at least
// min_cluster_size), then greedily merges centroid pairs closer than
// merge_distance (nearest pair first, each cluster merged at most once per
// pass, keeping the tag of the side with more members). Stops when a pass
// changes nothing or after max_iterations passes.
//
// `seeds` are (centroid, tag) pairs; when empty, a single seed at the mean
// of all points with tag -1 is used. An empty point list yields an empty
// result.
IsodataResult isodata_cluster(const std::vector<Eigen::VectorXd>& points,
                              const std::vector<std::pair<Eigen::VectorXd, int>>& seeds,
                              const IsodataOptions& opt);

}  // namespace aog
