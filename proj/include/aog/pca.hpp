#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace aog {

// Truncated principal-component description of a set of feature vectors:
// the mean, K orthonormal axes (largest-variance directions first, each
// axis's largest-magnitude entry made positive), and the per-sample
// projection coefficients onto those axes.
struct PcaBasis {
  Eigen::VectorXd mean;
  std::vector<Eigen::VectorXd> axes;
  Eigen::MatrixXd coefficients;  // one row per sample, one column per axis
  double sigma = 0.0;            // reconstruction bound the axis count was chosen for
  double delta = 0.0;            // loading threshold used for the coordinate mask
};

struct PcaRefactorResult {
  PcaBasis basis;
  // Per coordinate: 1 when the mean entry and every retained axis entry
  // are all below delta in magnitude — the coordinates whose edits leave
  // the retained low-dimensional description unchanged.
  std::vector<std::uint8_t> low_loading;
};

// Decomposes the samples around their mean and keeps the smallest number
// of leading variance directions whose reconstruction residual is below
// sigma for every sample (zero directions when the samples already sit
// within sigma of the mean; all numerically usable directions when even
// they cannot reach the bound). Deterministic: directions come from a
// symmetric eigen-decomposition, are ordered by descending variance, and
// have their sign fixed as described on PcaBasis. Requires at least two
// samples of equal dimension.
PcaRefactorResult pca_refactor(const std::vector<Eigen::VectorXd>& samples, double sigma,
                               double delta);

}  // namespace aog
