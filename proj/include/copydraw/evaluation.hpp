#pragma once

// End-to-end decoding pipelines evaluated with chronological cross-validation
// and label-permutation chance levels:
//   behavioral_decode   kinematic features -> LDA (DBS ON/OFF), ROC AUC
//   neural_decode       band covariances -> SPoC/ECoG bank -> MRMR -> ridge, Pearson r
//   controllability     frozen marker features -> LDA (DBS ON/OFF), ROC AUC

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copydraw/dtw.hpp"
#include "copydraw/error.hpp"
#include "copydraw/folds.hpp"
#include "copydraw/kinematics.hpp"
#include "copydraw/linmodels.hpp"
#include "copydraw/marker.hpp"
#include "copydraw/parallel.hpp"
#include "copydraw/random.hpp"
#include "copydraw/spoc.hpp"
#include "copydraw/stats.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct FoldMetric {
  int test_on_block = 0;
  int test_off_block = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double value = 0.0;
};

struct ChanceLevel {
  std::size_t n_perm = 0;
  double percentile = 95.0;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> distribution;  // replicate order
};

struct EvaluationReport {
  std::string metric;  // "roc_auc" or "pearson_r"
  std::vector<FoldMetric> folds;
  double mean = 0.0;
  std::optional<ChanceLevel> chance;

  bool significant() const { return chance && mean > chance->value; }
};

struct PermutationConfig {
  std::size_t n_perm = 1000;
  double percentile = 95.0;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: all available
};

/// Runs `replicate` n_perm times, replicate r drawing from Rng(derive_seed(seed, r)),
/// and returns the requested percentile of the resulting means. The result does
/// not depend on the worker count.
inline ChanceLevel permutation_chance(const std::function<double(Rng&)>& replicate, const PermutationConfig& cfg) {
  ChanceLevel c;
  c.n_perm = cfg.n_perm;
  c.percentile = cfg.percentile;
  c.seed = cfg.seed;
  c.distribution.assign(cfg.n_perm, 0.0);
  parallel_for(cfg.n_perm, cfg.workers, [&](std::size_t r) {
    Rng rng(derive_seed(cfg.seed, r));
    c.distribution[r] = replicate(rng);
  });
  c.value = cfg.n_perm ? percentile(c.distribution, cfg.percentile) : 0.0;
  return c;
}

/// One relabelling for a permutation replicate. The same permuted labels
/// serve every fold, train and test alike, so the replicate keeps the
/// dependence between folds that the real chrono-CV run has. Shuffling each
/// fold's training labels independently drops that dependence and yields a
/// null distribution that is too narrow.
template <typename T>
std::vector<T> permuted(std::span<const T> labels, Rng& rng) {
  std::vector<T> out(labels.begin(), labels.end());
  rng.shuffle(std::span<T>(out));
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline std::vector<int> condition_labels(const std::vector<TrialRef>& trials) {
  std::vector<int> y;
  for (const auto& t : trials) y.push_back(t.condition == DbsCondition::On ? 1 : 0);
  return y;
}

// ---------------------------------------------------------------------------
// Classification under chrono-CV (shared by behavioral and controllability)

/// Per fold: clip/standardize on train, fit shrinkage LDA, ROC AUC on test.
inline std::vector<double> classification_cv(const Eigen::MatrixXd& x, std::span<const int> labels,
                                             const std::vector<FoldSplit>& splits) {
  std::vector<double> aucs;
  aucs.reserve(splits.size());
  for (const auto& s : splits) {
    const auto y_train = gather(labels, std::span<const std::size_t>(s.train));
    const auto y_test = gather(labels, std::span<const std::size_t>(s.test));
    const auto pre = preprocess_features(gather_rows(x, s.train), gather_rows(x, s.test));
    const auto model = fit_lda(pre.train, y_train);
    const Eigen::VectorXd scores = decision_scores(model, pre.applied);
    aucs.push_back(roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), y_test));
  }
  return aucs;
}

/// Mean AUC of one permutation replicate. A relabelling that leaves some fold
/// with a single class is redrawn from the same stream.
inline double permuted_classification(const Eigen::MatrixXd& x, std::span<const int> labels,
                                      const std::vector<FoldSplit>& splits, Rng& rng) {
  while (true) {
    const auto y = permuted(labels, rng);
    try {
      return mean(classification_cv(x, y, splits));
    } catch (const Error& e) {
      if (e.code() != Errc::SingleClass) throw;
    }
  }
}

inline EvaluationReport make_report(std::string metric, const std::vector<FoldSplit>& splits,
                                    const std::vector<double>& values) {
  EvaluationReport r;
  r.metric = std::move(metric);
  for (std::size_t i = 0; i < splits.size(); ++i)
    r.folds.push_back({splits[i].fold.test_on_block, splits[i].fold.test_off_block, splits[i].train.size(),
                       splits[i].test.size(), values[i]});
  r.mean = mean(values);
  return r;
}

// ---------------------------------------------------------------------------
// Behavioral decoding

struct BehavioralData {
  std::vector<TrialRef> trials;
  Eigen::MatrixXd features;  // trials x features, raw
  std::vector<std::string> names;
  std::vector<int> labels;  // 1 = ON
};

inline BehavioralData behavioral_features(const Session& s, FeatureSet fs) {
  BehavioralData d;
  d.trials = included_trials(s);
  std::vector<FeatureVector> rows;
  for (const auto& t : d.trials) rows.push_back(extract_features(trial_at(s, t).trace, fs));
  d.features = to_matrix(rows);
  if (!rows.empty()) d.names = rows.front().names;
  d.labels = condition_labels(d.trials);
  return d;
}

/// Session-wide model fitted on all trials; its decision values are the
/// CopyDraw scores used as neural targets.
struct SessionScoreModel {
  FeatureScaler scaler;
  LdaModel lda;
  Eigen::MatrixXd preprocessed;
  Eigen::VectorXd scores;
};

inline SessionScoreModel fit_session_scores(const Eigen::MatrixXd& features, std::span<const int> labels) {
  SessionScoreModel m;
  const auto pre = preprocess_features(features, features);
  m.scaler = pre.scaler;
  m.preprocessed = pre.train;
  m.lda = fit_lda(pre.train, labels);
  m.scores = decision_scores(m.lda, pre.train);
  return m;
}

struct ShapSummary {
  std::vector<std::string> names;
  std::vector<double> mean_abs;  // mean |phi| per feature
  std::vector<double> signed_importance;  // mean |phi| signed by the weight: > 0 means larger under ON
  double base = 0.0;
  Eigen::MatrixXd values;  // trials x features
};

struct TaskPerformanceSummary {
  std::vector<TaskPerformance> per_trial;
  double mean_fraction_on = 0, mean_fraction_off = 0;
  double mean_distance_on = 0, mean_distance_off = 0;
  double mean_value_on = 0, mean_value_off = 0;
  double mwu_u = 0, mwu_p = 1;
  double effect_size = 0;  // rank-biserial, > 0 means higher under ON
};

struct BehavioralResult {
  FeatureSet feature_set = FeatureSet::Standard;
  BehavioralData data;
  EvaluationReport report;
  SessionScoreModel session_model;
  ShapSummary shap;
  double icc = 0.0;
  TaskPerformanceSummary task;
};

inline TaskPerformanceSummary summarize_task_performance(const Session& s, const std::vector<TrialRef>& trials) {
  TaskPerformanceSummary t;
  std::vector<double> on, off;
  double n_on = 0, n_off = 0;
  for (const auto& r : trials) {
    const auto p = task_performance(trial_at(s, r).trace);
    t.per_trial.push_back(p);
    const bool is_on = r.condition == DbsCondition::On;
    (is_on ? t.mean_fraction_on : t.mean_fraction_off) += p.fraction_matched;
    (is_on ? t.mean_distance_on : t.mean_distance_off) += p.mean_distance;
    (is_on ? n_on : n_off) += 1;
    if (!p.perfect) (is_on ? on : off).push_back(p.value);
  }
  if (n_on > 0) {
    t.mean_fraction_on /= n_on;
    t.mean_distance_on /= n_on;
  }
  if (n_off > 0) {
    t.mean_fraction_off /= n_off;
    t.mean_distance_off /= n_off;
  }
  t.mean_value_on = mean(on);
  t.mean_value_off = mean(off);
  if (!on.empty() && !off.empty()) {
    const auto u = mann_whitney_u(on, off);
    t.mwu_u = u.statistic;
    t.mwu_p = u.p;
    t.effect_size = 2.0 * u.statistic / (static_cast<double>(on.size()) * static_cast<double>(off.size())) - 1.0;
  }
  return t;
}

inline BehavioralResult behavioral_decode(const Session& s, FeatureSet fs, const std::optional<PermutationConfig>& perm) {
  BehavioralResult r;
  r.feature_set = fs;
  r.data = behavioral_features(s, fs);
  const auto splits = fold_splits(chrono_folds(s), r.data.trials);
  const auto aucs = classification_cv(r.data.features, r.data.labels, splits);
  r.report = make_report("roc_auc", splits, aucs);
  if (perm && perm->n_perm > 0) {
    r.report.chance = permutation_chance(
        [&](Rng& rng) { return permuted_classification(r.data.features, r.data.labels, splits, rng); }, *perm);
  }

  r.session_model = fit_session_scores(r.data.features, r.data.labels);
  const auto& sm = r.session_model;
  const Eigen::VectorXd background = sm.preprocessed.colwise().mean().transpose();
  const auto shap = linear_shap(sm.lda, sm.preprocessed, background);
  r.shap.names = r.data.names;
  r.shap.base = shap.base;
  r.shap.values = shap.values;
  for (Eigen::Index j = 0; j < shap.values.cols(); ++j) {
    const double ma = shap.values.col(j).cwiseAbs().mean();
    r.shap.mean_abs.push_back(ma);
    r.shap.signed_importance.push_back(sm.lda.weights[j] >= 0 ? ma : -ma);
  }
  r.icc = icc(std::span<const double>(sm.scores.data(), static_cast<std::size_t>(sm.scores.size())), r.data.labels);
  r.task = summarize_task_performance(s, r.data.trials);
  return r;
}

// ---------------------------------------------------------------------------
// Neural decoding

struct NeuralData {
  Modality modality = Modality::Eeg;
  double sample_rate = 300.0;
  std::vector<TrialRef> trials;
  BandCovariances covs;      // [band][trial], EEG
  Eigen::MatrixXd ecog_bank;  // trials x (channels * bands), ECoG
};

/// Band-filters every included trial once. Covariances (EEG) and log band
/// powers (ECoG) do not depend on the target, so folds and permutation
/// replicates reuse them.
inline NeuralData prepare_neural(const Session& s, const std::vector<TrialRef>& trials, const NeuralConfig& cfg,
                                 unsigned workers = 0) {
  NeuralData d;
  d.modality = s.modality;
  d.trials = trials;
  for (const auto& t : trials)
    if (!trial_at(s, t).neural)
      fail(Errc::MissingEpochs, "block " + std::to_string(t.block_index) + " trial " + std::to_string(t.trial_pos) +
                                    " has no neural epoch");
  if (trials.empty()) fail(Errc::MissingEpochs, "no trials");
  const auto& first = *trial_at(s, trials.front()).neural;
  d.sample_rate = first.sample_rate;
  for (const auto& t : trials) {
    const auto& ep = *trial_at(s, t).neural;
    if (ep.channels() != first.channels() || ep.sample_rate != first.sample_rate)
      fail(Errc::DimensionMismatch, "epochs differ in channel count or sample rate");
  }
  const std::size_t nb = cfg.bands.size();
  std::vector<SosFilter> filters;
  for (const auto& b : cfg.bands) filters.push_back(butter_bandpass(b.lo, b.hi, d.sample_rate, 4));

  d.covs.assign(nb, std::vector<Eigen::MatrixXd>(trials.size()));
  parallel_for(trials.size(), workers, [&](std::size_t i) {
    const auto& ep = *trial_at(s, trials[i]).neural;
    for (std::size_t b = 0; b < nb; ++b) d.covs[b][i] = epoch_cov(filtfilt_rows(filters[b], ep.data));
  });
  if (d.modality == Modality::Ecog) {
    const Eigen::Index nch = first.channels();
    d.ecog_bank.resize(static_cast<Eigen::Index>(trials.size()), nch * static_cast<Eigen::Index>(nb));
    for (std::size_t i = 0; i < trials.size(); ++i)
      for (Eigen::Index ch = 0; ch < nch; ++ch)
        for (std::size_t b = 0; b < nb; ++b)
          d.ecog_bank(static_cast<Eigen::Index>(i), ch * static_cast<Eigen::Index>(nb) + static_cast<Eigen::Index>(b)) =
              std::log(d.covs[b][i](ch, ch));
  }
  return d;
}

struct NeuralFoldOutput {
  std::vector<double> r;                  // per fold
  std::vector<double> predictions;        // per trial (test-fold predictions)
  std::vector<std::vector<std::size_t>> selected;  // per fold
  std::vector<std::vector<std::size_t>> selected_bands;  // per fold, band of each selected feature
};

/// One pass of the neural fold loop.
inline NeuralFoldOutput neural_cv(const NeuralData& d, std::span<const double> targets,
                                  const std::vector<FoldSplit>& splits, const NeuralConfig& cfg) {
  NeuralFoldOutput out;
  out.predictions.assign(targets.size(), 0.0);
  for (const auto& s : splits) {
    const auto z_train = gather(targets, std::span<const std::size_t>(s.train));
    const auto marker = fit_marker(d.modality, d.sample_rate, d.covs, d.ecog_bank, s.train, z_train, cfg);
    std::vector<double> pred, truth;
    std::vector<const Eigen::MatrixXd*> ptrs(cfg.bands.size());
    for (auto i : s.test) {
      Eigen::VectorXd bank;
      if (d.modality == Modality::Ecog) {
        bank = d.ecog_bank.row(static_cast<Eigen::Index>(i)).transpose();
      } else {
        for (std::size_t b = 0; b < cfg.bands.size(); ++b) ptrs[b] = &d.covs[b][i];
        bank = marker.bank_from_covs(ptrs);
      }
      const double p = marker.predict_from_bank(bank);
      pred.push_back(p);
      truth.push_back(targets[i]);
      out.predictions[i] = p;
    }
    out.r.push_back(pearson_r_or_zero(pred, truth).r);
    out.selected.push_back(marker.selected);
    std::vector<std::size_t> bands;
    for (auto j : marker.selected) bands.push_back(marker.band_of(j));
    out.selected_bands.push_back(std::move(bands));
  }
  return out;
}

struct NeuralResult {
  TargetKind target = TargetKind::CopyDrawScore;
  std::vector<TrialRef> trials;  // trials that entered the analysis
  std::vector<double> targets;
  std::vector<double> predictions;  // out-of-fold
  EvaluationReport report;
  FittedMarker marker;  // refit on all trials
  std::vector<std::size_t> band_counts;  // selected features per band, summed over folds
};

/// `targets` is aligned with `trials`; trials with a non-finite target
/// (e.g. the perfect task-performance sentinel) are left out.
inline NeuralResult neural_decode(const Session& s, const std::vector<TrialRef>& trials, std::span<const double> targets,
                                  TargetKind kind, const NeuralConfig& cfg, const std::optional<PermutationConfig>& perm,
                                  unsigned workers = 0) {
  if (trials.size() != targets.size()) fail(Errc::DimensionMismatch, "one target per trial required");
  NeuralResult r;
  r.target = kind;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!std::isfinite(targets[i])) continue;
    r.trials.push_back(trials[i]);
    r.targets.push_back(targets[i]);
  }
  const auto data = prepare_neural(s, r.trials, cfg, workers);
  const auto splits = fold_splits(chrono_folds(s), r.trials);
  const auto out = neural_cv(data, r.targets, splits, cfg);
  r.predictions = out.predictions;
  r.report = make_report("pearson_r", splits, out.r);
  r.band_counts.assign(cfg.bands.size(), 0);
  for (const auto& fb : out.selected_bands)
    for (auto b : fb) ++r.band_counts[b];
  if (perm && perm->n_perm > 0) {
    PermutationConfig pc = *perm;
    if (pc.workers == 0) pc.workers = workers;
    r.report.chance = permutation_chance(
        [&](Rng& rng) {
          const auto z = permuted(std::span<const double>(r.targets), rng);
          return mean(neural_cv(data, z, splits, cfg).r);
        },
        pc);
  }
  std::vector<std::size_t> all(r.trials.size());
  std::iota(all.begin(), all.end(), 0);
  r.marker = fit_marker(data.modality, data.sample_rate, data.covs, data.ecog_bank, all, r.targets, cfg);
  r.marker.target = kind;
  return r;
}

/// CopyDraw scores for every included trial (session-wide LDA, standard features by default).
inline std::vector<double> copydraw_scores(const Session& s, FeatureSet fs = FeatureSet::Standard) {
  const auto d = behavioral_features(s, fs);
  const auto m = fit_session_scores(d.features, d.labels);
  return {m.scores.data(), m.scores.data() + m.scores.size()};
}

inline std::vector<double> task_performance_targets(const Session& s) {
  std::vector<double> out;
  for (const auto& t : included_trials(s)) out.push_back(task_performance(trial_at(s, t).trace).value);
  return out;
}

// ---------------------------------------------------------------------------
// Controllability

struct ControllabilityResult {
  std::vector<TrialRef> trials;
  Eigen::MatrixXd features;  // trials x selected marker features
  EvaluationReport report;
};

/// Keeps the marker's bands, filters and selected features fixed and refits
/// only an LDA on DBS condition per fold.
inline ControllabilityResult controllability(const Session& s, const FittedMarker& marker,
                                             const std::optional<PermutationConfig>& perm, unsigned workers = 0) {
  ControllabilityResult r;
  r.trials = included_trials(s);
  NeuralConfig cfg;
  cfg.bands = marker.bands;
  const auto data = prepare_neural(s, r.trials, cfg, workers);
  if (data.modality != marker.modality) fail(Errc::DimensionMismatch, "marker modality differs from session");
  r.features.resize(static_cast<Eigen::Index>(r.trials.size()), static_cast<Eigen::Index>(marker.selected.size()));
  std::vector<const Eigen::MatrixXd*> ptrs(cfg.bands.size());
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    Eigen::VectorXd bank;
    if (data.modality == Modality::Ecog) {
      bank = data.ecog_bank.row(static_cast<Eigen::Index>(i)).transpose();
    } else {
      for (std::size_t b = 0; b < cfg.bands.size(); ++b) ptrs[b] = &data.covs[b][i];
      bank = marker.bank_from_covs(ptrs);
    }
    r.features.row(static_cast<Eigen::Index>(i)) = marker.selected_features(bank).transpose();
  }
  const auto labels = condition_labels(r.trials);
  const auto splits = fold_splits(chrono_folds(s), r.trials);
  r.report = make_report("roc_auc", splits, classification_cv(r.features, labels, splits));
  if (perm && perm->n_perm > 0) {
    PermutationConfig pc = *perm;
    if (pc.workers == 0) pc.workers = workers;
    r.report.chance =
        permutation_chance(
        [&](Rng& rng) { return permuted_classification(r.features, labels, splits, rng); },
        pc);
  }
  return r;
}

}  // namespace copydraw
