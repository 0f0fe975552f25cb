#pragma once

// Greedy minimum-redundancy maximum-relevance selection on absolute Pearson
// correlations, difference criterion: relevance - mean redundancy.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "copydraw/error.hpp"

namespace copydraw {

struct SelectionResult {
  std::vector<std::size_t> selected;  // in selection order
  std::vector<double> relevance;      // per step
  std::vector<double> redundancy;     // per step, mean over already-selected
  std::vector<double> score;          // per step
};

namespace detail {

/// |Pearson r| of two centered columns with precomputed norms; 0 if either is constant.
inline double abs_corr(const Eigen::VectorXd& a, double na, const Eigen::VectorXd& b, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, std::abs(a.dot(b)) / (na * nb));
}

}  // namespace detail

inline SelectionResult mrmr_select(const Eigen::MatrixXd& features, std::span<const double> target, int k) {
  const Eigen::Index n = features.rows(), p = features.cols();
  if (k < 1) fail(Errc::KInvalid, "k must be >= 1");
  if (n < 3) fail(Errc::TooFewTrials, "MRMR needs at least 3 trials");
  if (static_cast<Eigen::Index>(target.size()) != n) fail(Errc::DimensionMismatch, "one target per trial required");
  if (!features.allFinite()) fail(Errc::DimensionMismatch, "non-finite feature values");

  const Eigen::MatrixXd fc = features.rowwise() - features.colwise().mean();
  const Eigen::VectorXd norms = fc.colwise().norm().transpose();
  Eigen::VectorXd zc = Eigen::Map<const Eigen::VectorXd>(target.data(), n);
  zc.array() -= zc.mean();
  const double zn = zc.norm();

  std::vector<double> relevance(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    relevance[static_cast<std::size_t>(j)] = detail::abs_corr(fc.col(j), norms[j], zc, zn);

  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), static_cast<std::size_t>(p));
  std::vector<double> red_sum(static_cast<std::size_t>(p), 0.0);
  std::vector<bool> taken(static_cast<std::size_t>(p), false);
  SelectionResult res;
  for (std::size_t step = 0; step < want; ++step) {
    std::size_t best = 0;
    double best_score = -INFINITY;
    for (std::size_t j = 0; j < static_cast<std::size_t>(p); ++j) {
      if (taken[j]) continue;
      const double red = step == 0 ? 0.0 : red_sum[j] / static_cast<double>(step);
      const double s = relevance[j] - red;
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    taken[best] = true;
    res.selected.push_back(best);
    res.relevance.push_back(relevance[best]);
    res.redundancy.push_back(step == 0 ? 0.0 : red_sum[best] / static_cast<double>(step));
    res.score.push_back(best_score);
    const auto bi = static_cast<Eigen::Index>(best);
    for (std::size_t j = 0; j < static_cast<std::size_t>(p); ++j) {
      if (taken[j]) continue;
      const auto ji = static_cast<Eigen::Index>(j);
      red_sum[j] += detail::abs_corr(fc.col(ji), norms[ji], fc.col(bi), norms[bi]);
    }
  }
  return res;
}

}  // namespace copydraw
