#pragma once

// Shrinkage LDA, ridge regression and exact SHAP values for linear models.

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <vector>

#include "copydraw/error.hpp"

namespace copydraw {

struct ShrunkCovariance {
  Eigen::MatrixXd cov;
  double shrinkage = 0.0;
};

/// Ledoit-Wolf shrinkage toward a scaled identity. Rows are samples; the
/// empirical covariance uses denominator n.
inline ShrunkCovariance ledoit_wolf_cov(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (n < 2) fail(Errc::TooFewSamples, "Ledoit-Wolf needs at least 2 samples");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const double dn = static_cast<double>(n);
  const Eigen::MatrixXd s = xc.transpose() * xc / dn;
  const double mu = s.trace() / static_cast<double>(p);

  // d^2 = ||S - mu I||_F^2 / p
  Eigen::MatrixXd target_diff = s;
  target_diff.diagonal().array() -= mu;
  const double d2 = target_diff.squaredNorm() / static_cast<double>(p);

  // b_bar^2 = 1/n^2 sum_k ||x_k x_k^T - S||_F^2 / p, expanded without forming outer products
  const Eigen::MatrixXd x2 = xc.array().square().matrix();
  const double sum_fourth = (x2.transpose() * x2).sum();
  const double b_bar2 = (sum_fourth / dn - s.squaredNorm()) / (dn * static_cast<double>(p));
  const double b2 = std::min(b_bar2, d2);
  ShrunkCovariance out;
  out.shrinkage = d2 == 0.0 ? 0.0 : std::clamp(b2 / d2, 0.0, 1.0);
  out.cov = (1.0 - out.shrinkage) * s;
  out.cov.diagonal().array() += out.shrinkage * mu;
  return out;
}

/// Two-class LDA. Label 1 is DBS ON; decision(x) >= 0 leans ON.
struct LdaModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd mean_on;
  Eigen::VectorXd mean_off;
  double shrinkage = 0.0;
  bool sign_flipped = false;

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
};

inline LdaModel fit_lda(const Eigen::MatrixXd& x, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) fail(Errc::DimensionMismatch, "labels vs rows");
  const Eigen::Index p = x.cols();
  Eigen::VectorXd sum_on = Eigen::VectorXd::Zero(p), sum_off = Eigen::VectorXd::Zero(p);
  Eigen::Index n_on = 0, n_off = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (labels[i]) {
      sum_on += x.row(i).transpose();
      ++n_on;
    } else {
      sum_off += x.row(i).transpose();
      ++n_off;
    }
  }
  if (n_on == 0 || n_off == 0) fail(Errc::SingleClass, "LDA needs both classes");
  if (n_on < 2 || n_off < 2) fail(Errc::TooFewSamples, "LDA needs at least 2 samples per class");

  LdaModel m;
  m.mean_on = sum_on / static_cast<double>(n_on);
  m.mean_off = sum_off / static_cast<double>(n_off);
  // pooled within-class scatter: class-centered residuals share one shrinkage estimate
  Eigen::MatrixXd resid(x.rows(), p);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    resid.row(i) = x.row(i) - (labels[i] ? m.mean_on : m.mean_off).transpose();
  const auto sc = ledoit_wolf_cov(resid);
  m.shrinkage = sc.shrinkage;
  const Eigen::VectorXd delta = m.mean_on - m.mean_off;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sc.cov);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
    m.weights = sc.cov.completeOrthogonalDecomposition().solve(delta);
  } else {
    m.weights = ldlt.solve(delta);
  }
  m.bias = -m.weights.dot(0.5 * (m.mean_on + m.mean_off));

  double on_mean_decision = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (labels[i]) on_mean_decision += m.decision(x.row(i).transpose());
  if (on_mean_decision < 0) {
    m.weights = -m.weights;
    m.bias = -m.bias;
    m.sign_flipped = true;
  }
  return m;
}

inline Eigen::VectorXd decision_scores(const LdaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size()) fail(Errc::DimensionMismatch, "feature count differs from model");
  return (x * model.weights).array() + model.bias;
}

/// phi_ij = w_j (x_ij - background_j); base = w . background + b.
struct ShapAttribution {
  Eigen::MatrixXd values;  // trials x features
  double base = 0.0;
};

inline ShapAttribution linear_shap(const LdaModel& model, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& background_mean) {
  if (x.cols() != model.weights.size() || background_mean.size() != model.weights.size())
    fail(Errc::DimensionMismatch, "feature count differs from model");
  ShapAttribution a;
  a.values = (x.rowwise() - background_mean.transpose()).array().rowwise() * model.weights.transpose().array();
  a.base = model.weights.dot(background_mean) + model.bias;
  return a;
}

struct RidgeModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double alpha = 1.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.size()) fail(Errc::DimensionMismatch, "feature count differs from model");
    return (x * weights).array() + bias;
  }
};

/// Ridge with unpenalized intercept: columns and targets are centered first.
inline RidgeModel fit_ridge(const Eigen::MatrixXd& x, std::span<const double> z, double alpha = 1.0) {
  if (static_cast<Eigen::Index>(z.size()) != x.rows()) fail(Errc::DimensionMismatch, "targets vs rows");
  if (x.rows() < 1) fail(Errc::TooFewSamples, "ridge needs at least one sample");
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double zm = zv.mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += alpha;
  RidgeModel m;
  m.alpha = alpha;
  m.weights = gram.ldlt().solve(xc.transpose() * (zv.array() - zm).matrix());
  m.bias = zm - xm.dot(m.weights);
  return m;
}

}  // namespace copydraw
