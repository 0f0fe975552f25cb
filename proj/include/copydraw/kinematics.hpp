#pragma once

// Kinematic feature extraction from pen traces.
//
// Derivatives use the three-point difference on non-uniform timestamps,
// which is exact for quadratics. Each derivative order trims one sample
// at each end: velocity has n-2 samples, acceleration n-4, jerk n-6.
// "Jitter" is the jerk (third derivative).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "copydraw/dtw.hpp"
#include "copydraw/error.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

enum class FeatureSet { Standard, Extended, Angular };

constexpr std::size_t dimension(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::Standard: return 9;
    case FeatureSet::Extended: return 12;
    case FeatureSet::Angular: return 36;
  }
  return 0;
}

constexpr std::string_view to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::Standard: return "standard";
    case FeatureSet::Extended: return "extended";
    case FeatureSet::Angular: return "angular";
  }
  return "standard";
}

inline FeatureSet parse_feature_set(std::string_view s) {
  if (s == "standard") return FeatureSet::Standard;
  if (s == "extended") return FeatureSet::Extended;
  if (s == "angular") return FeatureSet::Angular;
  fail(Errc::InvalidSpec, "unknown feature set \"" + std::string(s) + "\"");
}

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

/// One derivative order sampled at `t`.
struct DerivativeSeries {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return t.size(); }
  double magnitude(std::size_t i) const { return std::hypot(x[i], y[i]); }
};

struct Derivatives {
  DerivativeSeries velocity;
  DerivativeSeries acceleration;
  DerivativeSeries jerk;
};

/// Minimum samples for a non-empty jerk series.
inline constexpr std::size_t kMinDerivativeSamples = 7;

inline DerivativeSeries central_difference(const std::vector<double>& t, const std::vector<double>& x,
                                           const std::vector<double>& y) {
  DerivativeSeries d;
  if (t.size() < 3) return d;
  const std::size_t n = t.size() - 2;
  d.t.resize(n);
  d.x.resize(n);
  d.y.resize(n);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    const double cm = -h2 / (h1 * (h1 + h2));
    const double c0 = (h2 - h1) / (h1 * h2);
    const double cp = h1 / (h2 * (h1 + h2));
    d.t[i - 1] = t[i];
    d.x[i - 1] = cm * x[i - 1] + c0 * x[i] + cp * x[i + 1];
    d.y[i - 1] = cm * y[i - 1] + c0 * y[i] + cp * y[i + 1];
  }
  return d;
}

inline Derivatives derivatives(const Trace& trace) {
  const auto& s = trace.samples;
  if (s.size() < kMinDerivativeSamples)
    fail(Errc::TooFewSamples, "need at least " + std::to_string(kMinDerivativeSamples) + " samples, got " +
                                  std::to_string(s.size()));
  std::vector<double> t(s.size()), x(s.size()), y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0 && !(s[i].t > s[i - 1].t)) fail(Errc::InvariantViolation, "timestamps must be strictly increasing");
    t[i] = s[i].t;
    x[i] = s[i].x;
    y[i] = s[i].y;
  }
  Derivatives d;
  d.velocity = central_difference(t, x, y);
  d.acceleration = central_difference(d.velocity.t, d.velocity.x, d.velocity.y);
  d.jerk = central_difference(d.acceleration.t, d.acceleration.x, d.acceleration.y);
  return d;
}

namespace detail {

inline void append_means(const DerivativeSeries& d, std::vector<double>& out) {
  double mag = 0, ax = 0, ay = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    mag += d.magnitude(i);
    ax += std::abs(d.x[i]);
    ay += std::abs(d.y[i]);
  }
  const double n = static_cast<double>(d.size());
  out.insert(out.end(), {mag / n, ax / n, ay / n});
}

}  // namespace detail

inline const std::vector<std::string>& standard_feature_names() {
  static const std::vector<std::string> names = {"speed",  "speed_x",  "speed_y",  "accel", "accel_x",
                                                 "accel_y", "jerk", "jerk_x", "jerk_y"};
  return names;
}

inline FeatureVector standard_features(const Trace& trace) {
  const auto d = derivatives(trace);
  FeatureVector fv;
  fv.values.reserve(9);
  detail::append_means(d.velocity, fv.values);
  detail::append_means(d.acceleration, fv.values);
  detail::append_means(d.jerk, fv.values);
  fv.names = standard_feature_names();
  return fv;
}

inline FeatureVector extended_features(const Trace& trace) {
  FeatureVector fv = standard_features(trace);
  const auto perf = task_performance(trace);
  fv.values.insert(fv.values.end(), {perf.total_cost, perf.mean_distance, perf.fraction_matched});
  fv.names.insert(fv.names.end(), {"dtw_cost", "dtw_mean_distance", "dtw_fraction_matched"});
  return fv;
}

inline constexpr int kAngularBins = 8;

/// Bin of a velocity direction: 45 degree sectors starting at +x, counter-clockwise.
/// A direction exactly on an edge belongs to the higher sector.
inline int direction_bin(double vx, double vy) {
  double deg = std::atan2(vy, vx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  int bin = static_cast<int>(std::floor(deg / 45.0));
  return bin >= kAngularBins ? 0 : bin;
}

inline FeatureVector angular_features(const Trace& trace) {
  const auto d = derivatives(trace);
  const auto& v = d.velocity;
  std::array<double, kAngularBins> speed{}, accel{}, jerk{};
  std::array<int, kAngularBins> ns{}, na{}, nj{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int b = direction_bin(v.x[i], v.y[i]);
    speed[b] += v.magnitude(i);
    ++ns[b];
  }
  // acceleration sample k sits at velocity sample k+1; jerk sample k at k+2
  for (std::size_t k = 0; k < d.acceleration.size(); ++k) {
    const int b = direction_bin(v.x[k + 1], v.y[k + 1]);
    accel[b] += d.acceleration.magnitude(k);
    ++na[b];
  }
  for (std::size_t k = 0; k < d.jerk.size(); ++k) {
    const int b = direction_bin(v.x[k + 2], v.y[k + 2]);
    jerk[b] += d.jerk.magnitude(k);
    ++nj[b];
  }
  FeatureVector fv;
  for (int b = 0; b < kAngularBins; ++b) {
    fv.values.push_back(ns[b] ? speed[b] / ns[b] : 0.0);
    fv.values.push_back(na[b] ? accel[b] / na[b] : 0.0);
    fv.values.push_back(nj[b] ? jerk[b] / nj[b] : 0.0);
    const std::string p = "bin" + std::to_string(b) + "_";
    fv.names.insert(fv.names.end(), {p + "speed", p + "accel", p + "jerk"});
  }
  const auto ext = extended_features(trace);
  fv.values.insert(fv.values.end(), ext.values.begin(), ext.values.end());
  fv.names.insert(fv.names.end(), ext.names.begin(), ext.names.end());
  return fv;
}

inline FeatureVector extract_features(const Trace& trace, FeatureSet fs) {
  switch (fs) {
    case FeatureSet::Standard: return standard_features(trace);
    case FeatureSet::Extended: return extended_features(trace);
    case FeatureSet::Angular: return angular_features(trace);
  }
  return standard_features(trace);
}

/// Clip-then-standardize transform, fitted on training rows only.
struct FeatureScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;  // population STD

  static FeatureScaler fit(const Eigen::MatrixXd& train) {
    if (train.rows() == 0) fail(Errc::EmptyTraining, "no training rows");
    FeatureScaler s;
    s.mean = train.colwise().mean();
    s.stddev = ((train.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(train.rows()))
                   .sqrt()
                   .matrix();
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) fail(Errc::DimensionMismatch, "feature count differs from scaler");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double sd = stddev[j];
      if (!(sd > 0.0)) {
        out.col(j).setZero();
        continue;
      }
      const double lo = mean[j] - 3.0 * sd, hi = mean[j] + 3.0 * sd;
      for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = (std::clamp(x(i, j), lo, hi) - mean[j]) / sd;
    }
    return out;
  }
};

struct PreprocessedFeatures {
  Eigen::MatrixXd train;
  Eigen::MatrixXd applied;
  FeatureScaler scaler;
};

/// Clips each feature to mean +/- 3 STD of `train`, then z-scores with the same
/// statistics. Constant features map to 0.
inline PreprocessedFeatures preprocess_features(const Eigen::MatrixXd& train, const Eigen::MatrixXd& apply_to) {
  PreprocessedFeatures p;
  p.scaler = FeatureScaler::fit(train);
  p.train = p.scaler.apply(train);
  p.applied = p.scaler.apply(apply_to);
  return p;
}

inline Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().values.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != static_cast<std::size_t>(m.cols()))
      fail(Errc::DimensionMismatch, "feature vectors of different length");
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(static_cast<Eigen::Index>(i), j) = rows[i].values[j];
  }
  return m;
}

}  // namespace copydraw
