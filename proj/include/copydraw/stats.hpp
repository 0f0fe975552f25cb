#pragma once

// Scalar statistics: ROC AUC, ICC, Pearson/OLS, Mann-Whitney U, Welch's t,
// and percentiles. p-values use asymptotic distributions.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "copydraw/error.hpp"

namespace copydraw {

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample variance (n-1 denominator).
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Linear-interpolation percentile, q in [0, 100].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) fail(Errc::EmptySample, "percentile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Average ranks (1-based), ties share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

/// P(score_pos > score_neg) + 0.5 P(tie), from rank sums.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(Errc::DimensionMismatch, "scores and labels differ in length");
  const auto r = average_ranks(scores);
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      n_pos += 1;
      rank_sum += r[i];
    } else {
      n_neg += 1;
    }
  }
  if (n_pos == 0 || n_neg == 0) fail(Errc::SingleClass, "ROC AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

/// sigma_b^2 / (sigma_b^2 + sigma_w^2) over two clusters. sigma_b is the spread
/// of the two cluster means around their midpoint; sigma_w is pooled within.
inline double icc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(Errc::DimensionMismatch, "scores and labels differ in length");
  double s[2] = {0, 0}, n[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int c = labels[i] ? 1 : 0;
    s[c] += scores[i];
    n[c] += 1;
  }
  if (n[0] == 0 || n[1] == 0) fail(Errc::SingleClass, "ICC needs both clusters");
  const double m0 = s[0] / n[0], m1 = s[1] / n[1];
  const double half = 0.5 * (m1 - m0);
  const double var_b = half * half;
  double ss_w = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - (labels[i] ? m1 : m0);
    ss_w += d * d;
  }
  const double var_w = ss_w / (n[0] + n[1]);
  if (var_b + var_w == 0.0) return 0.0;
  return var_b / (var_b + var_w);
}

struct Correlation {
  double r = 0.0;
  double p = 1.0;
};

inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

inline double normal_two_sided_p(double z) {
  const boost::math::normal dist;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z))));
}

inline Correlation pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(Errc::DimensionMismatch, "samples differ in length");
  if (a.size() < 3) fail(Errc::TooFewSamples, "Pearson r needs n >= 3");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) fail(Errc::DegenerateVariance, "zero variance");
  Correlation c;
  c.r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  const double df = static_cast<double>(a.size()) - 2.0;
  const double denom = 1.0 - c.r * c.r;
  c.p = denom <= 0.0 ? 0.0 : t_two_sided_p(c.r * std::sqrt(df / denom), df);
  return c;
}

/// Pearson r that maps degenerate (constant) inputs to r = 0, p = 1.
inline Correlation pearson_r_or_zero(std::span<const double> a, std::span<const double> b) {
  try {
    return pearson_r(a, b);
  } catch (const Error& e) {
    if (e.code() == Errc::DegenerateVariance) return {};
    throw;
  }
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  double p = 1.0;
  double r2 = 0.0;
};

inline OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  const auto c = pearson_r(x, y);
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r = c.r;
  f.p = c.p;
  f.r2 = c.r * c.r;
  return f;
}

struct TestResult {
  double statistic = 0.0;
  double p = 1.0;
};

/// U of sample `a`; normal approximation with tie and continuity correction.
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(Errc::EmptySample, "Mann-Whitney U needs non-empty samples");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto r = average_ranks(all);
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
  double r1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += r[i];
  TestResult res;
  res.statistic = r1 - n1 * (n1 + 1) / 2.0;

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = n1 * n2 / 2.0;
  const double sigma = std::sqrt(n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))));
  if (!(sigma > 0.0)) {
    res.p = 1.0;
    return res;
  }
  const double u_max = std::max(res.statistic, n1 * n2 - res.statistic);
  const double z = (u_max - mu - 0.5) / sigma;
  res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), z)));
  return res;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(Errc::EmptySample, "Welch's t needs n >= 2 per sample");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double v1 = sample_variance(a) / n1, v2 = sample_variance(b) / n2;
  const double diff = mean(a) - mean(b);
  WelchResult w;
  const double se2 = v1 + v2;
  if (se2 == 0.0) {
    w.df = n1 + n2 - 2.0;
    if (diff == 0.0) return w;
    w.t = diff > 0 ? INFINITY : -INFINITY;
    w.p = 0.0;
    return w;
  }
  w.t = diff / std::sqrt(se2);
  w.df = se2 * se2 / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
  w.p = t_two_sided_p(w.t, w.df);
  return w;
}

}  // namespace copydraw
