#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct Psd {
  std::vector<double> freqs;
  Eigen::MatrixXd power;  // channels x freqs, units^2 / Hz
};

/// Welch estimate: Hann-windowed, mean-detrended segments, one-sided density.
/// The sum of power over bins times the bin width approximates the variance.
inline Psd welch_psd(const Eigen::MatrixXd& data, double fs, Eigen::Index segment_length, Eigen::Index overlap) {
  const Eigen::Index n = data.cols();
  if (segment_length < 2 || segment_length > n)
    fail(Errc::SegmentTooLong, "segment length " + std::to_string(segment_length) + " for " + std::to_string(n) + " samples");
  if (overlap < 0 || overlap >= segment_length) fail(Errc::SegmentTooLong, "overlap must be in [0, segment_length)");
  const Eigen::Index step = segment_length - overlap;
  const Eigen::Index n_seg = 1 + (n - segment_length) / step;
  const Eigen::Index n_freq = segment_length / 2 + 1;

  std::vector<double> window(static_cast<std::size_t>(segment_length));
  double wss = 0;
  for (Eigen::Index i = 0; i < segment_length; ++i) {
    // periodic Hann
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment_length)));
    window[static_cast<std::size_t>(i)] = w;
    wss += w * w;
  }
  const double scale = 1.0 / (fs * wss);

  Psd out;
  out.freqs.resize(static_cast<std::size_t>(n_freq));
  for (Eigen::Index k = 0; k < n_freq; ++k)
    out.freqs[static_cast<std::size_t>(k)] = static_cast<double>(k) * fs / static_cast<double>(segment_length);
  out.power = Eigen::MatrixXd::Zero(data.rows(), n_freq);

  Eigen::FFT<double> fft;
  std::vector<double> seg(static_cast<std::size_t>(segment_length));
  std::vector<std::complex<double>> spec;
  for (Eigen::Index ch = 0; ch < data.rows(); ++ch) {
    for (Eigen::Index s = 0; s < n_seg; ++s) {
      const Eigen::Index start = s * step;
      double m = 0;
      for (Eigen::Index i = 0; i < segment_length; ++i) m += data(ch, start + i);
      m /= static_cast<double>(segment_length);
      for (Eigen::Index i = 0; i < segment_length; ++i)
        seg[static_cast<std::size_t>(i)] = (data(ch, start + i) - m) * window[static_cast<std::size_t>(i)];
      fft.fwd(spec, seg);
      for (Eigen::Index k = 0; k < n_freq; ++k) {
        double p = std::norm(spec[static_cast<std::size_t>(k)]) * scale;
        const bool nyquist = (segment_length % 2 == 0) && k == n_freq - 1;
        if (k != 0 && !nyquist) p *= 2.0;
        out.power(ch, k) += p;
      }
    }
  }
  out.power /= static_cast<double>(n_seg);
  return out;
}

inline Psd welch_psd(const NeuralEpoch& epoch, Eigen::Index segment_length, Eigen::Index overlap) {
  return welch_psd(epoch.data, epoch.sample_rate, segment_length, overlap);
}

}  // namespace copydraw
