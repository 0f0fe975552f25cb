#pragma once

// The portable neural marker: frequency bands, spatial filters (EEG) or
// channel/band pairs (ECoG), the MRMR-selected features, their training
// normalization and the final ridge weights.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/linmodels.hpp"
#include "copydraw/mrmr.hpp"
#include "copydraw/spoc.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

enum class TargetKind { CopyDrawScore, TaskPerformance, Custom };

constexpr std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::CopyDrawScore: return "copydraw-score";
    case TargetKind::TaskPerformance: return "task-performance";
    case TargetKind::Custom: return "custom";
  }
  return "custom";
}

inline TargetKind parse_target_kind(std::string_view s) {
  if (s == "copydraw-score" || s == "copydraw") return TargetKind::CopyDrawScore;
  if (s == "task-performance") return TargetKind::TaskPerformance;
  if (s == "custom") return TargetKind::Custom;
  fail(Errc::InvalidSpec, "unknown target kind \"" + std::string(s) + "\"");
}

struct NeuralConfig {
  std::vector<FrequencyBand> bands = canonical_bands();
  int k_spoc = 8;
  int k_select = 8;
  double ridge_alpha = 1.0;
};

/// Per-trial band covariances: covs[band][trial].
using BandCovariances = std::vector<std::vector<Eigen::MatrixXd>>;

struct FittedMarker {
  Modality modality = Modality::Eeg;
  double sample_rate = 300.0;
  Eigen::Index n_channels = 0;
  std::vector<FrequencyBand> bands;
  std::vector<std::vector<SpocComponent>> components;  // EEG only: per band
  std::vector<std::size_t> selected;                   // bank indices in selection order
  Eigen::VectorXd feature_mean;                        // bank-wide training normalization
  Eigen::VectorXd feature_std;
  RidgeModel ridge;
  TargetKind target = TargetKind::CopyDrawScore;

  std::size_t bank_size() const {
    if (modality == Modality::Ecog) return static_cast<std::size_t>(n_channels) * bands.size();
    std::size_t n = 0;
    for (const auto& c : components) n += c.size();
    return n;
  }

  /// Band of a bank index. EEG banks are band-major, ECoG banks channel-major.
  std::size_t band_of(std::size_t bank_index) const {
    if (modality == Modality::Ecog) return bank_index % bands.size();
    for (std::size_t b = 0; b < components.size(); ++b) {
      if (bank_index < components[b].size()) return b;
      bank_index -= components[b].size();
    }
    fail(Errc::DimensionMismatch, "bank index out of range");
  }

  std::string feature_name(std::size_t bank_index) const {
    if (modality == Modality::Ecog)
      return "ch" + std::to_string(bank_index / bands.size()) + "_" + bands[bank_index % bands.size()].name;
    const std::size_t b = band_of(bank_index);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < b; ++i) offset += components[i].size();
    return bands[b].name + "_spoc" + std::to_string(bank_index - offset);
  }

  /// Raw (unnormalized) bank from one trial's band covariances.
  Eigen::VectorXd bank_from_covs(const std::vector<const Eigen::MatrixXd*>& covs) const {
    if (covs.size() != bands.size()) fail(Errc::DimensionMismatch, "one covariance per band required");
    Eigen::VectorXd f(static_cast<Eigen::Index>(bank_size()));
    if (modality == Modality::Ecog) {
      for (Eigen::Index ch = 0; ch < n_channels; ++ch)
        for (std::size_t b = 0; b < bands.size(); ++b)
          f[ch * static_cast<Eigen::Index>(bands.size()) + static_cast<Eigen::Index>(b)] = std::log((*covs[b])(ch, ch));
      return f;
    }
    Eigen::Index i = 0;
    for (std::size_t b = 0; b < bands.size(); ++b)
      for (const auto& comp : components[b]) f[i++] = spoc_power(comp, *covs[b]);
    return f;
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& bank) const {
    Eigen::VectorXd out(bank.size());
    for (Eigen::Index j = 0; j < bank.size(); ++j)
      out[j] = feature_std[j] > 0.0 ? (bank[j] - feature_mean[j]) / feature_std[j] : 0.0;
    return out;
  }

  /// Normalized selected features, in selection order.
  Eigen::VectorXd selected_features(const Eigen::VectorXd& bank) const {
    const Eigen::VectorXd z = normalize(bank);
    Eigen::VectorXd out(static_cast<Eigen::Index>(selected.size()));
    for (std::size_t i = 0; i < selected.size(); ++i) out[static_cast<Eigen::Index>(i)] = z[static_cast<Eigen::Index>(selected[i])];
    return out;
  }

  double predict_from_bank(const Eigen::VectorXd& bank) const {
    return ridge.weights.dot(selected_features(bank)) + ridge.bias;
  }

  /// Band-filters an unseen epoch and evaluates the full bank.
  Eigen::VectorXd bank_from_epoch(const NeuralEpoch& epoch) const {
    if (epoch.channels() != n_channels) fail(Errc::DimensionMismatch, "epoch channel count differs from marker");
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& band : bands) covs.push_back(epoch_cov(bandpass(epoch, band)));
    std::vector<const Eigen::MatrixXd*> ptrs;
    for (const auto& c : covs) ptrs.push_back(&c);
    return bank_from_covs(ptrs);
  }

  double predict(const NeuralEpoch& epoch) const { return predict_from_bank(bank_from_epoch(epoch)); }
};

/// Fits the full marker on the `train` rows: SPoC per band (EEG), log-power
/// bank, z-scoring with training statistics, MRMR selection, ridge.
/// `ecog_bank` holds precomputed channel/band log powers (ECoG only).
inline FittedMarker fit_marker(Modality modality, double sample_rate, const BandCovariances& covs,
                               const Eigen::MatrixXd& ecog_bank, std::span<const std::size_t> train,
                               std::span<const double> target, const NeuralConfig& cfg) {
  if (train.size() != target.size()) fail(Errc::DimensionMismatch, "one target per training trial required");
  FittedMarker m;
  m.modality = modality;
  m.sample_rate = sample_rate;
  m.bands = cfg.bands;

  const std::size_t n_trials = modality == Modality::Ecog ? static_cast<std::size_t>(ecog_bank.rows()) : covs.front().size();
  Eigen::MatrixXd bank;
  if (modality == Modality::Eeg) {
    m.n_channels = covs.front().front().rows();
    const int k = std::min<int>(cfg.k_spoc, static_cast<int>(m.n_channels));
    for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
      std::vector<Eigen::MatrixXd> train_covs;
      train_covs.reserve(train.size());
      for (auto i : train) train_covs.push_back(covs[b][i]);
      m.components.push_back(fit_spoc(std::span<const Eigen::MatrixXd>(train_covs), target, k, cfg.bands[b]));
    }
    bank.resize(static_cast<Eigen::Index>(n_trials), static_cast<Eigen::Index>(m.bank_size()));
    std::vector<const Eigen::MatrixXd*> ptrs(cfg.bands.size());
    for (std::size_t t = 0; t < n_trials; ++t) {
      for (std::size_t b = 0; b < cfg.bands.size(); ++b) ptrs[b] = &covs[b][t];
      bank.row(static_cast<Eigen::Index>(t)) = m.bank_from_covs(ptrs).transpose();
    }
  } else {
    m.n_channels = ecog_bank.cols() / static_cast<Eigen::Index>(cfg.bands.size());
    bank = ecog_bank;
  }

  Eigen::MatrixXd train_bank(static_cast<Eigen::Index>(train.size()), bank.cols());
  for (std::size_t i = 0; i < train.size(); ++i) train_bank.row(static_cast<Eigen::Index>(i)) = bank.row(static_cast<Eigen::Index>(train[i]));
  m.feature_mean = train_bank.colwise().mean().transpose();
  m.feature_std = ((train_bank.rowwise() - m.feature_mean.transpose()).array().square().colwise().sum() /
                   static_cast<double>(train.size()))
                      .sqrt()
                      .transpose();
  Eigen::MatrixXd train_z(train_bank.rows(), train_bank.cols());
  for (Eigen::Index i = 0; i < train_bank.rows(); ++i) train_z.row(i) = m.normalize(train_bank.row(i).transpose()).transpose();

  const auto sel = mrmr_select(train_z, target, cfg.k_select);
  m.selected = sel.selected;
  Eigen::MatrixXd x_sel(train_z.rows(), static_cast<Eigen::Index>(m.selected.size()));
  for (std::size_t j = 0; j < m.selected.size(); ++j) x_sel.col(static_cast<Eigen::Index>(j)) = train_z.col(static_cast<Eigen::Index>(m.selected[j]));
  m.ridge = fit_ridge(x_sel, target, cfg.ridge_alpha);
  return m;
}

// ---- JSON ----

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json marker_to_json(const FittedMarker& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["modality"] = std::string(to_string(m.modality));
  j["sample_rate"] = m.sample_rate;
  j["n_channels"] = m.n_channels;
  j["target"] = std::string(to_string(m.target));
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : m.bands) bands.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});
  j["bands"] = bands;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& per_band : m.components) {
    nlohmann::json jb = nlohmann::json::array();
    for (const auto& c : per_band)
      jb.push_back({{"filter", vec_to_json(c.filter)}, {"pattern", vec_to_json(c.pattern)}, {"eigenvalue", c.eigenvalue}});
    comps.push_back(jb);
  }
  j["components"] = comps;
  j["selected"] = m.selected;
  nlohmann::json names = nlohmann::json::array();
  for (auto s : m.selected) names.push_back(m.feature_name(s));
  j["selected_names"] = names;
  j["feature_mean"] = vec_to_json(m.feature_mean);
  j["feature_std"] = vec_to_json(m.feature_std);
  j["ridge"] = {{"weights", vec_to_json(m.ridge.weights)}, {"bias", m.ridge.bias}, {"alpha", m.ridge.alpha}};
  return j;
}

inline FittedMarker marker_from_json(const nlohmann::json& j) {
  try {
    FittedMarker m;
    m.modality = parse_modality(j.at("modality").get<std::string>());
    m.sample_rate = j.at("sample_rate").get<double>();
    m.n_channels = j.at("n_channels").get<Eigen::Index>();
    m.target = parse_target_kind(j.at("target").get<std::string>());
    for (const auto& b : j.at("bands")) m.bands.push_back({b.at("name").get<std::string>(), b.at("lo").get<double>(), b.at("hi").get<double>()});
    std::size_t bi = 0;
    for (const auto& jb : j.at("components")) {
      std::vector<SpocComponent> per_band;
      for (const auto& c : jb) {
        SpocComponent comp;
        comp.filter = vec_from_json(c.at("filter"));
        comp.pattern = vec_from_json(c.at("pattern"));
        comp.eigenvalue = c.at("eigenvalue").get<double>();
        if (bi < m.bands.size()) comp.band = m.bands[bi];
        per_band.push_back(std::move(comp));
      }
      m.components.push_back(std::move(per_band));
      ++bi;
    }
    m.selected = j.at("selected").get<std::vector<std::size_t>>();
    m.feature_mean = vec_from_json(j.at("feature_mean"));
    m.feature_std = vec_from_json(j.at("feature_std"));
    m.ridge.weights = vec_from_json(j.at("ridge").at("weights"));
    m.ridge.bias = j.at("ridge").at("bias").get<double>();
    m.ridge.alpha = j.at("ridge").at("alpha").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::SchemaViolation, std::string("marker: ") + e.what());
  }
}

}  // namespace copydraw
