#pragma once

// Butterworth band-pass design (analog prototype -> band-pass -> bilinear
// transform with pre-warping) as second-order sections, and forward-backward
// zero-phase filtering with odd reflection padding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "copydraw/error.hpp"

namespace copydraw {

/// b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

struct SosFilter {
  std::vector<Biquad> sections;
  double max_pole_radius = 0.0;

  std::complex<double> response(double freq_hz, double fs) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= s.response(omega);
    return h;
  }

  /// Samples until the slowest pole decays below 1e-3 of its initial amplitude.
  std::size_t settling_samples() const {
    if (max_pole_radius <= 0.0) return 1;
    if (max_pole_radius >= 1.0) return 1u << 20;
    return static_cast<std::size_t>(std::ceil(std::log(1e-3) / std::log(max_pole_radius)));
  }
};

/// Band-pass Butterworth of prototype order `order` (the digital filter has
/// 2 * order poles). Unity gain at the band's geometric centre.
inline SosFilter butter_bandpass(double lo_hz, double hi_hz, double fs, int order = 4) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0))
    fail(Errc::BandOutOfRange, "band [" + std::to_string(lo_hz) + ", " + std::to_string(hi_hz) +
                                   "] Hz not inside (0, " + std::to_string(fs / 2.0) + ")");
  using cplx = std::complex<double>;
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * fs;
  const double w_lo = fs2 * std::tan(pi * lo_hz / fs);
  const double w_hi = fs2 * std::tan(pi * hi_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0 = std::sqrt(w_lo * w_hi);

  // prototype poles in the upper half plane; conjugates are implied
  SosFilter f;
  for (int k = 0; k < order / 2 + order % 2; ++k) {
    const double theta = pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cplx proto = std::polar(1.0, theta);
    // each low-pass pole maps to two band-pass poles
    const cplx half = proto * bw / 2.0;
    const cplx disc = std::sqrt(half * half - w0 * w0);
    for (const cplx s : {half + disc, half - disc}) {
      // real prototype pole (odd order) yields a conjugate pair from its two roots
      const cplx z = (fs2 + s) / (fs2 - s);
      if (order % 2 == 1 && k == order / 2 && s.imag() < 0.0) continue;
      const cplx zz = z.imag() >= 0.0 ? z : std::conj(z);
      Biquad bq;
      bq.b0 = 1.0;
      bq.b1 = 0.0;
      bq.b2 = -1.0;  // zeros at z = +1 and z = -1
      bq.a1 = -2.0 * zz.real();
      bq.a2 = std::norm(zz);
      f.sections.push_back(bq);
      f.max_pole_radius = std::max(f.max_pole_radius, std::abs(zz));
    }
  }
  const double f_center = std::atan(w0 / fs2) * fs / pi;
  const double gain = std::abs(f.response(f_center, fs));
  const double per_section = std::pow(gain, -1.0 / static_cast<double>(f.sections.size()));
  for (auto& s : f.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  return f;
}

namespace detail {

/// Direct-form II transposed, in place. `z` holds each section's two states.
inline void sos_filter_inplace(const SosFilter& f, std::vector<double>& x, std::vector<double> z) {
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const auto& s = f.sections[k];
    double z1 = z[2 * k], z2 = z[2 * k + 1];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

/// Steady-state section states for a unit step input, cascaded.
inline std::vector<double> sos_step_states(const SosFilter& f) {
  std::vector<double> zi(2 * f.sections.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const auto& s = f.sections[k];
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * dc;
    const double z1 = s.b1 - s.a1 * dc + z2;
    zi[2 * k] = z1 * scale;
    zi[2 * k + 1] = z2 * scale;
    scale *= dc;
  }
  return zi;
}

}  // namespace detail

/// Zero-phase forward-backward filtering of one series, padded at both ends
/// by odd reflection over one settling length (capped at n - 1).
inline std::vector<double> filtfilt(const SosFilter& f, const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  const std::size_t pad = std::min(n - 1, f.settling_samples());
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  const auto zi = detail::sos_step_states(f);
  auto scaled = [&](double v) {
    std::vector<double> z = zi;
    for (double& e : z) e *= v;
    return z;
  };
  detail::sos_filter_inplace(f, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter_inplace(f, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

/// Row-wise zero-phase filtering of a channels x samples matrix.
inline Eigen::MatrixXd filtfilt_rows(const SosFilter& f, const Eigen::MatrixXd& data) {
  Eigen::MatrixXd out(data.rows(), data.cols());
  std::vector<double> row(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    for (Eigen::Index i = 0; i < data.cols(); ++i) row[static_cast<std::size_t>(i)] = data(c, i);
    const auto y = filtfilt(f, row);
    for (Eigen::Index i = 0; i < data.cols(); ++i) out(c, i) = y[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace copydraw
