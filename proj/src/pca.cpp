#include "aog/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aog {

PcaRefactorResult pca_refactor(const std::vector<Eigen::VectorXd>& samples, double sigma,
                               double delta) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("pca_refactor: need at least two samples");
  const Eigen::Index dim = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != dim) throw std::invalid_argument("pca_refactor: sample dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("pca_refactor: sigma must be positive");

  PcaRefactorResult out;
  out.basis.sigma = sigma;
  out.basis.delta = delta;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(n);
  out.basis.mean = mean;

  Eigen::MatrixXd centered(n, dim);
  for (int k = 0; k < n; ++k) centered.row(k) = (samples[static_cast<std::size_t>(k)] - mean).transpose();

  // The directions live in the row space of `centered`, so the n x n inner
  // product matrix carries the whole decomposition regardless of dim.
  const Eigen::MatrixXd gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_refactor: eigen-decomposition failed");

  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const double max_eval = std::max(evals[n - 1], 0.0);
  const double floor = 1e-10 * std::max(1.0, max_eval);

  std::vector<double> residual2(static_cast<std::size_t>(n));
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    residual2[static_cast<std::size_t>(k)] = centered.row(k).squaredNorm();
    worst = std::max(worst, residual2[static_cast<std::size_t>(k)]);
  }

  std::vector<Eigen::VectorXd> axes;
  std::vector<Eigen::VectorXd> coeff_cols;
  for (int rank = n - 1; rank >= 0 && worst >= sigma * sigma; --rank) {
    const double lambda = evals[rank];
    if (lambda <= floor) break;  // remaining directions are numerical noise
    Eigen::VectorXd axis = centered.transpose() * es.eigenvectors().col(rank);
    axis /= axis.norm();
    // Fix the sign: the largest-magnitude entry (lowest index on ties)
    // becomes positive.
    Eigen::Index peak = 0;
    for (Eigen::Index j = 1; j < dim; ++j)
      if (std::abs(axis[j]) > std::abs(axis[peak])) peak = j;
    if (axis[peak] < 0.0) axis = -axis;

    Eigen::VectorXd beta = centered * axis;
    worst = 0.0;
    for (int k = 0; k < n; ++k) {
      residual2[static_cast<std::size_t>(k)] =
          std::max(0.0, residual2[static_cast<std::size_t>(k)] - beta[k] * beta[k]);
      worst = std::max(worst, residual2[static_cast<std::size_t>(k)]);
    }
    axes.push_back(std::move(axis));
    coeff_cols.push_back(std::move(beta));
  }

  const int K = static_cast<int>(axes.size());
  out.basis.axes = std::move(axes);
  out.basis.coefficients.resize(n, K);
  for (int i = 0; i < K; ++i) out.basis.coefficients.col(i) = coeff_cols[static_cast<std::size_t>(i)];

  out.low_loading.assign(static_cast<std::size_t>(dim), 0);
  for (Eigen::Index j = 0; j < dim; ++j) {
    bool low = std::abs(mean[j]) < delta;
    for (int i = 0; low && i < K; ++i)
      if (std::abs(out.basis.axes[static_cast<std::size_t>(i)][j]) >= delta) low = false;
    out.low_loading[static_cast<std::size_t>(j)] = low ? 1 : 0;
  }
  return out;
}

}  // namespace aog
