#pragma once

// Filter-bank source power comodulation (SPoC).
//
// For one frequency band, SPoC finds spatial filters w whose projected band
// power w^T C_e w covaries with a per-epoch target z_e. With C the average
// epoch covariance and C_z the z-weighted average, the filters solve
//     C_z w = lambda C w,   w^T C w = 1,
// so lambda is the covariance between projected power and the z-scored target.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/filter.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct FrequencyBand {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const FrequencyBand&) const = default;
};

inline const std::vector<FrequencyBand>& canonical_bands() {
  static const std::vector<FrequencyBand> bands = {
      {"theta", 4.0, 8.0}, {"alpha", 8.0, 12.0}, {"beta", 12.0, 30.0}, {"gamma", 30.0, 45.0}, {"gamma_high", 55.0, 90.0}};
  return bands;
}

inline const FrequencyBand& band_by_name(std::string_view name) {
  for (const auto& b : canonical_bands())
    if (b.name == name) return b;
  fail(Errc::InvalidSpec, "unknown band \"" + std::string(name) + "\"");
}

/// Zero-phase 4th-order Butterworth band-pass applied per channel.
inline NeuralEpoch bandpass(const NeuralEpoch& epoch, const FrequencyBand& band) {
  const auto f = butter_bandpass(band.lo, band.hi, epoch.sample_rate, 4);
  NeuralEpoch out = epoch;
  out.data = filtfilt_rows(f, epoch.data);
  return out;
}

/// Channel covariance with per-channel mean removed, denominator n_samples.
inline Eigen::MatrixXd epoch_cov(const Eigen::MatrixXd& data) {
  if (data.cols() < 2) fail(Errc::TooFewSamples, "epoch covariance needs at least 2 samples");
  const Eigen::MatrixXd xc = data.colwise() - data.rowwise().mean();
  Eigen::MatrixXd c = xc * xc.transpose() / static_cast<double>(data.cols());
  return 0.5 * (c + c.transpose());
}

inline Eigen::MatrixXd epoch_cov(const NeuralEpoch& epoch) { return epoch_cov(epoch.data); }

struct SpocComponent {
  Eigen::VectorXd filter;   // w, normalized so w^T C w = 1
  Eigen::VectorXd pattern;  // a = C w
  double eigenvalue = 0.0;  // covariance of projected power with the z-scored target
  FrequencyBand band;
};

inline constexpr double kSpocRegularization = 1e-6;

/// Returns z standardized with population STD; throws DegenerateTarget if constant.
inline std::vector<double> zscore_target(std::span<const double> z) {
  const double n = static_cast<double>(z.size());
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double ss = 0;
  for (double v : z) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) fail(Errc::DegenerateTarget, "target has zero variance");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - m) / sd;
  return out;
}

/// Fits SPoC on precomputed per-epoch covariances. The k components with the
/// largest |lambda| are returned in that order (ties keep eigen order).
inline std::vector<SpocComponent> fit_spoc(std::span<const Eigen::MatrixXd> covs, std::span<const double> target,
                                           int k, const FrequencyBand& band = {}) {
  if (covs.empty() || covs.size() != target.size()) fail(Errc::DimensionMismatch, "one target per epoch required");
  const Eigen::Index p = covs.front().rows();
  if (k < 1 || k > p) fail(Errc::KTooLarge, "k = " + std::to_string(k) + " with " + std::to_string(p) + " channels");
  const auto z = zscore_target(target);

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p), cz = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t e = 0; e < covs.size(); ++e) {
    if (covs[e].rows() != p) fail(Errc::DimensionMismatch, "epochs differ in channel count");
    c += covs[e];
    cz += z[e] * covs[e];
  }
  c /= static_cast<double>(covs.size());
  cz /= static_cast<double>(covs.size());
  Eigen::MatrixXd c_reg = c;
  c_reg.diagonal().array() += kSpocRegularization * c.trace() / static_cast<double>(p);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(cz, c_reg);
  if (ges.info() != Eigen::Success) fail(Errc::EigenFailure, "generalized eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& ev = ges.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev[a]) > std::abs(ev[b]); });

  std::vector<SpocComponent> out;
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd w = ges.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    const double q = w.dot(c * w);
    if (!(q > 0.0)) fail(Errc::EigenFailure, "filter has zero power under the average covariance");
    w /= std::sqrt(q);
    // sign convention: the largest-magnitude filter entry is positive
    Eigen::Index imax = 0;
    w.cwiseAbs().maxCoeff(&imax);
    if (w[imax] < 0) w = -w;
    SpocComponent comp;
    comp.filter = w;
    comp.pattern = c * w;
    comp.eigenvalue = w.dot(cz * w);
    comp.band = band;
    out.push_back(std::move(comp));
  }
  return out;
}

/// Band-filters each epoch with `band`, then fits SPoC.
inline std::vector<SpocComponent> fit_spoc(std::span<const NeuralEpoch> filtered_epochs, std::span<const double> target,
                                           int k, const FrequencyBand& band = {}) {
  std::vector<Eigen::MatrixXd> covs;
  covs.reserve(filtered_epochs.size());
  for (const auto& e : filtered_epochs) covs.push_back(epoch_cov(e));
  return fit_spoc(std::span<const Eigen::MatrixXd>(covs), target, k, band);
}

/// log(w^T C_e w) for an epoch's band covariance.
inline double spoc_power(const SpocComponent& comp, const Eigen::MatrixXd& epoch_covariance) {
  if (epoch_covariance.rows() != comp.filter.size()) fail(Errc::DimensionMismatch, "channel count differs from filter");
  return std::log(comp.filter.dot(epoch_covariance * comp.filter));
}

inline double spoc_power(const SpocComponent& comp, const NeuralEpoch& filtered_epoch) {
  if (filtered_epoch.channels() != comp.filter.size()) fail(Errc::DimensionMismatch, "channel count differs from filter");
  return spoc_power(comp, epoch_cov(filtered_epoch));
}

/// Forward-model patterns A = C W (W^T C W)^-1.
inline Eigen::MatrixXd patterns(const Eigen::MatrixXd& filters, const Eigen::MatrixXd& cov) {
  if (cov.rows() != filters.rows()) fail(Errc::DimensionMismatch, "covariance and filters differ in channels");
  const Eigen::MatrixXd proj = filters.transpose() * cov * filters;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(proj);
  if (!lu.isInvertible()) fail(Errc::SingularProjection, "W^T C W is singular");
  return cov * filters * lu.inverse();
}

/// Log variance per channel per band, channel-major (channel c, band b at c * n_bands + b).
inline std::vector<double> ecog_band_powers(const NeuralEpoch& epoch, std::span<const FrequencyBand> bands) {
  std::vector<double> out(static_cast<std::size_t>(epoch.channels()) * bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto filtered = bandpass(epoch, bands[b]);
    const Eigen::MatrixXd c = epoch_cov(filtered);
    for (Eigen::Index ch = 0; ch < epoch.channels(); ++ch)
      out[static_cast<std::size_t>(ch) * bands.size() + b] = std::log(c(ch, ch));
  }
  return out;
}

}  // namespace copydraw
