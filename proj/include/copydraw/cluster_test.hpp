#pragma once

// Cluster-based permutation test over an ordered bin axis (e.g. PSD frequency
// bins). Bins whose Welch t exceeds the two-sided cluster_alpha critical value
// form clusters of contiguous same-sign bins; a cluster's mass is the sum of
// |t|. Cluster p-values come from the permutation distribution of the maximum
// cluster mass under shuffled group labels.

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/random.hpp"
#include "copydraw/stats.hpp"

namespace copydraw {

struct BinCluster {
  Eigen::Index first_bin = 0;
  Eigen::Index last_bin = 0;  // inclusive
  double mass = 0.0;
  int sign = 1;
  double p = 1.0;
};

struct ClusterTestResult {
  std::vector<double> t;               // per bin
  std::vector<BinCluster> clusters;    // all observed clusters with p-values
  std::vector<BinCluster> significant; // p < report_alpha
};

namespace detail {

inline std::vector<BinCluster> find_clusters(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double cluster_alpha,
                                             std::vector<double>* t_out = nullptr) {
  const Eigen::Index bins = a.cols();
  std::vector<double> t(static_cast<std::size_t>(bins));
  std::vector<int> supra(static_cast<std::size_t>(bins), 0);
  std::vector<double> ca(static_cast<std::size_t>(a.rows())), cb(static_cast<std::size_t>(b.rows()));
  for (Eigen::Index j = 0; j < bins; ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) ca[static_cast<std::size_t>(i)] = a(i, j);
    for (Eigen::Index i = 0; i < b.rows(); ++i) cb[static_cast<std::size_t>(i)] = b(i, j);
    const auto w = welch_t(ca, cb);
    t[static_cast<std::size_t>(j)] = w.t;
    if (std::isinf(w.t)) {
      supra[static_cast<std::size_t>(j)] = w.t > 0 ? 1 : -1;
    } else if (w.t != 0.0 && w.df > 0) {
      const double crit = boost::math::quantile(boost::math::complement(boost::math::students_t(w.df), cluster_alpha / 2.0));
      if (std::abs(w.t) > crit) supra[static_cast<std::size_t>(j)] = w.t > 0 ? 1 : -1;
    }
  }
  std::vector<BinCluster> clusters;
  for (Eigen::Index j = 0; j < bins;) {
    const int sg = supra[static_cast<std::size_t>(j)];
    if (sg == 0) {
      ++j;
      continue;
    }
    BinCluster c;
    c.first_bin = j;
    c.sign = sg;
    while (j < bins && supra[static_cast<std::size_t>(j)] == sg) {
      c.mass += std::min(std::abs(t[static_cast<std::size_t>(j)]), 1e300);
      ++j;
    }
    c.last_bin = j - 1;
    clusters.push_back(c);
  }
  if (t_out) *t_out = std::move(t);
  return clusters;
}

}  // namespace detail

inline ClusterTestResult cluster_permutation_test(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b,
                                                  std::size_t n_perm, double cluster_alpha, double report_alpha,
                                                  std::uint64_t seed) {
  if (samples_a.rows() < 2 || samples_b.rows() < 2) fail(Errc::TooFewTrials, "need at least 2 trials per group");
  if (samples_a.cols() != samples_b.cols()) fail(Errc::DimensionMismatch, "groups differ in bin count");

  ClusterTestResult res;
  res.clusters = detail::find_clusters(samples_a, samples_b, cluster_alpha, &res.t);

  const Eigen::Index na = samples_a.rows(), nb = samples_b.rows();
  Eigen::MatrixXd pooled(na + nb, samples_a.cols());
  pooled << samples_a, samples_b;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(na + nb));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

  std::vector<double> null_max(n_perm, 0.0);
  Rng rng(seed);
  Eigen::MatrixXd pa(na, pooled.cols()), pb(nb, pooled.cols());
  for (std::size_t r = 0; r < n_perm; ++r) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index i = 0; i < na; ++i) pa.row(i) = pooled.row(order[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < nb; ++i) pb.row(i) = pooled.row(order[static_cast<std::size_t>(na + i)]);
    for (const auto& c : detail::find_clusters(pa, pb, cluster_alpha)) null_max[r] = std::max(null_max[r], c.mass);
  }
  for (auto& c : res.clusters) {
    const auto exceed = std::count_if(null_max.begin(), null_max.end(), [&](double m) { return m >= c.mass; });
    c.p = (static_cast<double>(exceed) + 1.0) / (static_cast<double>(n_perm) + 1.0);
    if (c.p < report_alpha) res.significant.push_back(c);
  }
  return res;
}

}  // namespace copydraw
