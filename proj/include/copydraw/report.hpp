#pragma once

// Run configuration, JSON reports and their CSV projections.
//
// Reports are built with nlohmann::json objects (keys sorted), carry no
// timestamps and never include the worker count, so identical inputs and seed
// give byte-identical output regardless of scheduling.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "copydraw/evaluation.hpp"
#include "copydraw/kinematics.hpp"
#include "copydraw/marker.hpp"
#include "copydraw/outcome.hpp"
#include "copydraw/stats.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
  std::vector<std::string> sessions;
  FeatureSet feature_set = FeatureSet::Standard;
  std::vector<FrequencyBand> bands = canonical_bands();
  int k_spoc = 8;
  int k_select = 8;
  double ridge_alpha = 1.0;
  std::size_t n_perm = 1000;
  double percentile = 95.0;
  double icc_threshold = kDefaultIccThreshold;
  std::uint64_t seed = 0;
  std::string output_dir;
  TargetKind target = TargetKind::CopyDrawScore;
  unsigned workers = 0;  // not serialized: results do not depend on it

  NeuralConfig neural() const { return {bands, k_spoc, k_select, ridge_alpha}; }
  std::optional<PermutationConfig> permutation() const {
    if (n_perm == 0) return std::nullopt;
    return PermutationConfig{n_perm, percentile, seed, workers};
  }
};

inline nlohmann::json bands_to_json(const std::vector<FrequencyBand>& bands) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : bands) out.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});
  return out;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  return {{"sessions", c.sessions},
          {"feature_set", std::string(to_string(c.feature_set))},
          {"bands", bands_to_json(c.bands)},
          {"k_spoc", c.k_spoc},
          {"k_select", c.k_select},
          {"ridge_alpha", c.ridge_alpha},
          {"n_perm", c.n_perm},
          {"percentile", c.percentile},
          {"icc_threshold", c.icc_threshold},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"target", std::string(to_string(c.target))}};
}

inline nlohmann::json chance_to_json(const std::optional<ChanceLevel>& c) {
  if (!c) return nullptr;
  return {{"n_perm", c->n_perm},
          {"percentile", c->percentile},
          {"value", c->value},
          {"seed", c->seed},
          {"distribution", c->distribution}};
}

inline nlohmann::json evaluation_to_json(const EvaluationReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds)
    folds.push_back({{"test_on_block", f.test_on_block},
                     {"test_off_block", f.test_off_block},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"value", f.value}});
  return {{"metric", r.metric},
          {"mean", r.mean},
          {"folds", folds},
          {"chance", chance_to_json(r.chance)},
          {"significant", r.chance ? nlohmann::json(r.significant()) : nlohmann::json(nullptr)}};
}

inline nlohmann::json trial_refs_to_json(const std::vector<TrialRef>& trials) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trials)
    out.push_back({{"block", t.block_index}, {"trial", t.trial_pos}, {"condition", std::string(to_string(t.condition))}});
  return out;
}

/// Non-finite values (the perfect task-performance sentinel) serialize as null.
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json behavioral_to_json(const BehavioralResult& r, const Session& s, const RunConfig& cfg) {
  nlohmann::json shap = {{"feature_names", r.shap.names},
                         {"mean_abs", r.shap.mean_abs},
                         {"signed_importance", r.shap.signed_importance},
                         {"base", r.shap.base}};
  const auto& t = r.task;
  nlohmann::json tp_values = nlohmann::json::array();
  for (const auto& p : t.per_trial) tp_values.push_back(finite_or_null(p.value));
  nlohmann::json task = {{"mean_fraction_matched", {{"ON", t.mean_fraction_on}, {"OFF", t.mean_fraction_off}}},
                         {"mean_distance", {{"ON", t.mean_distance_on}, {"OFF", t.mean_distance_off}}},
                         {"mean_value", {{"ON", t.mean_value_on}, {"OFF", t.mean_value_off}}},
                         {"mann_whitney_u", t.mwu_u},
                         {"mann_whitney_p", t.mwu_p},
                         {"effect_size", t.effect_size},
                         {"per_trial", tp_values}};
  const auto& sm = r.session_model;
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "behavioral-decode"},
          {"session_id", s.id},
          {"config", config_to_json(cfg)},
          {"feature_set", std::string(to_string(r.feature_set))},
          {"n_trials", r.data.trials.size()},
          {"trials", trial_refs_to_json(r.data.trials)},
          {"evaluation", evaluation_to_json(r.report)},
          {"mean_auc", r.report.mean},
          {"icc", r.icc},
          {"copydraw_scores", std::vector<double>(sm.scores.data(), sm.scores.data() + sm.scores.size())},
          {"lda", {{"weights", vec_to_json(sm.lda.weights)}, {"bias", sm.lda.bias}, {"shrinkage", sm.lda.shrinkage}}},
          {"shap", shap},
          {"task_performance", task},
          {"caveats", {"CopyDraw scores come from one LDA fitted on all trials of the session (not nested), so they are optimistic labels"}}};
}

inline nlohmann::json neural_to_json(const NeuralResult& r, const Session& s, const RunConfig& cfg) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t b = 0; b < cfg.bands.size() && b < r.band_counts.size(); ++b) counts[cfg.bands[b].name] = r.band_counts[b];
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "neural-decode"},
          {"session_id", s.id},
          {"modality", std::string(to_string(s.modality))},
          {"config", config_to_json(cfg)},
          {"target", std::string(to_string(r.target))},
          {"n_trials", r.trials.size()},
          {"trials", trial_refs_to_json(r.trials)},
          {"targets", r.targets},
          {"predictions", r.predictions},
          {"evaluation", evaluation_to_json(r.report)},
          {"mean_r", r.report.mean},
          {"band_counts", counts},
          {"marker", marker_to_json(r.marker)}};
}

inline nlohmann::json controllability_to_json(const ControllabilityResult& r, const Session& s, const RunConfig& cfg) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "controllability"},
          {"session_id", s.id},
          {"config", config_to_json(cfg)},
          {"n_trials", r.trials.size()},
          {"evaluation", evaluation_to_json(r.report)},
          {"mean_auc", r.report.mean}};
}

inline nlohmann::json outcome_to_json(const OutcomeType& o, double auc, double auc_chance, double r, double r_chance,
                                      double icc, double threshold) {
  return {{"type", o.name()},
          {"number", o.number()},
          {"auc_sig", o.auc_sig},
          {"r_sig", o.r_sig},
          {"icc_high", o.icc_high},
          {"auc", auc},
          {"auc_chance", auc_chance},
          {"r", r},
          {"r_chance", r_chance},
          {"icc", icc},
          {"icc_threshold", threshold},
          {"recommendation", std::string(recommendation(o.kind))}};
}

/// Reads mean/chance for a section of a session report; throws SchemaViolation
/// if the section or its chance level is missing.
struct MetricWithChance {
  double mean = 0.0;
  double chance = 0.0;
};

inline MetricWithChance metric_with_chance(const nlohmann::json& section, const std::string& where) {
  try {
    const auto& ev = section.at("evaluation");
    if (ev.at("chance").is_null()) fail(Errc::SchemaViolation, where + ": no permutation chance level (n_perm was 0)");
    return {ev.at("mean").get<double>(), ev.at("chance").at("value").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::SchemaViolation, where + ": " + e.what());
  }
}

inline OutcomeType outcome_from_report(const nlohmann::json& report, TargetKind target, double icc_threshold,
                                       nlohmann::json* detail = nullptr) {
  if (!report.contains("behavioral")) fail(Errc::SchemaViolation, "report has no behavioral section");
  const std::string key(to_string(target));
  if (!report.contains("neural") || !report["neural"].contains(key))
    fail(Errc::SchemaViolation, "report has no neural section for target " + key);
  const auto auc = metric_with_chance(report["behavioral"], "behavioral");
  const auto r = metric_with_chance(report["neural"][key], "neural/" + key);
  const double icc_v = report["behavioral"].value("icc", 0.0);
  const auto o = classify_outcome(auc.mean, auc.chance, r.mean, r.chance, icc_v, icc_threshold);
  if (detail) *detail = outcome_to_json(o, auc.mean, auc.chance, r.mean, r.chance, icc_v, icc_threshold);
  return o;
}

// ---- CSV projections ----

inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string predictions_csv(const NeuralResult& r) {
  std::ostringstream os;
  os << "trial,block,condition,true,predicted\n";
  for (std::size_t i = 0; i < r.trials.size(); ++i)
    os << r.trials[i].trial_pos << ',' << r.trials[i].block_index << ',' << to_string(r.trials[i].condition) << ','
       << csv_number(r.targets[i]) << ',' << csv_number(r.predictions[i]) << '\n';
  return os.str();
}

inline std::string band_counts_csv(const NeuralResult& r, const std::vector<FrequencyBand>& bands) {
  std::ostringstream os;
  os << "band,lo_hz,hi_hz,count\n";
  for (std::size_t b = 0; b < bands.size(); ++b)
    os << bands[b].name << ',' << csv_number(bands[b].lo) << ',' << csv_number(bands[b].hi) << ',' << r.band_counts[b] << '\n';
  return os.str();
}

inline std::string features_csv(const BehavioralData& d) {
  std::ostringstream os;
  os << "block,trial,condition";
  for (const auto& n : d.names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    const auto& t = d.trials[static_cast<std::size_t>(i)];
    os << t.block_index << ',' << t.trial_pos << ',' << to_string(t.condition);
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) os << ',' << csv_number(d.features(i, j));
    os << '\n';
  }
  return os.str();
}

inline std::string scores_csv(const BehavioralResult& r) {
  std::ostringstream os;
  os << "trial,block,condition,copydraw_score,task_performance\n";
  for (std::size_t i = 0; i < r.data.trials.size(); ++i) {
    const auto& t = r.data.trials[i];
    os << t.trial_pos << ',' << t.block_index << ',' << to_string(t.condition) << ','
       << csv_number(r.session_model.scores[static_cast<Eigen::Index>(i)]) << ',' << csv_number(r.task.per_trial[i].value)
       << '\n';
  }
  return os.str();
}

// ---- cross-session tables ----

struct CrossSessionTables {
  std::string sessions_csv;          // one row per session, sorted by behavioral AUC (descending)
  std::string shap_csv;              // session x feature signed importance
  std::string task_performance_csv;  // per-session ON/OFF task performance components
  std::string band_counts_csv;       // selected features per band, per session and target
  nlohmann::json summary;            // cross-session fits and counts
};

namespace detail {

inline std::optional<double> number_at(const nlohmann::json& j, const std::string& pointer) {
  const nlohmann::json::json_pointer ptr(pointer);
  if (!j.contains(ptr)) return std::nullopt;
  const auto& v = j.at(ptr);
  if (!v.is_number()) return std::nullopt;
  return v.get<double>();
}

inline std::string flag_at(const nlohmann::json& j, const std::string& pointer) {
  const nlohmann::json::json_pointer ptr(pointer);
  if (!j.contains(ptr) || !j.at(ptr).is_boolean()) return "";
  return j.at(ptr).get<bool>() ? "true" : "false";
}

inline std::string csv_opt(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

inline nlohmann::json ols_or_null(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) return nullptr;
  try {
    const auto f = ols_fit(x, y);
    return {{"n", x.size()}, {"slope", f.slope}, {"intercept", f.intercept}, {"r", f.r}, {"p", f.p}, {"r2", f.r2}};
  } catch (const Error&) {
    return nullptr;
  }
}

}  // namespace detail

/// Merges combined session reports (sections "behavioral", "neural"/<target>,
/// "controllability"/<target>) into cross-session tables. Sections missing
/// from a report leave empty cells.
inline CrossSessionTables cross_session_tables(const std::vector<nlohmann::json>& reports,
                                               double icc_threshold = kDefaultIccThreshold) {
  using detail::csv_opt;
  using detail::flag_at;
  using detail::number_at;
  const std::string cd = "/neural/copydraw-score", tp = "/neural/task-performance";

  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto auc_of = [&](std::size_t i) { return number_at(reports[i], "/behavioral/mean_auc").value_or(-INFINITY); };
  const auto id_of = [&](std::size_t i) { return reports[i].value("session_id", std::string()); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (auc_of(a) != auc_of(b)) return auc_of(a) > auc_of(b);
    return id_of(a) < id_of(b);
  });

  CrossSessionTables out;
  std::ostringstream sessions, shap, task, bands;
  sessions << "session_id,modality,mean_auc,auc_chance,auc_significant,icc,r_copydraw,r_copydraw_chance,"
              "r_copydraw_significant,r_task,r_task_chance,r_task_significant,control_auc,control_auc_chance,"
              "control_significant,task_effect_size,task_mwu_p,outcome_type\n";
  shap << "session_id,feature,signed_importance,mean_abs\n";
  task << "session_id,fraction_matched_on,fraction_matched_off,mean_distance_on,mean_distance_off,effect_size,"
          "mann_whitney_p,mean_auc\n";
  bands << "session_id,target,band,count\n";

  std::vector<double> auc_x_r, r_for_auc, r_cd, r_task, pos_eff, pos_auc, neg_eff, neg_auc;
  std::vector<double> cd_paired, task_paired;
  nlohmann::json type_counts = nlohmann::json::object();
  int sig_behavioral = 0, sig_neural = 0, sig_control = 0;
  int inc_sig = 0, inc_ns = 0, dec_sig = 0, dec_ns = 0;

  for (auto i : order) {
    const auto& r = reports[i];
    const std::string id = id_of(i);
    std::string modality;
    for (const auto* key : {"copydraw-score", "task-performance"})
      if (r.contains("neural") && r["neural"].contains(key)) modality = r["neural"][key].value("modality", "");

    const auto auc = number_at(r, "/behavioral/mean_auc");
    const auto rc = number_at(r, cd + "/mean_r");
    const auto rt = number_at(r, tp + "/mean_r");
    const auto eff = number_at(r, "/behavioral/task_performance/effect_size");
    const auto mwu_p = number_at(r, "/behavioral/task_performance/mann_whitney_p");

    std::string type;
    try {
      type = outcome_from_report(r, TargetKind::CopyDrawScore, icc_threshold).name();
      type_counts[type] = type_counts.value(type, 0) + 1;
    } catch (const Error&) {
    }
    sessions << id << ',' << modality << ',' << csv_opt(auc) << ',' << csv_opt(number_at(r, "/behavioral/evaluation/chance/value"))
             << ',' << flag_at(r, "/behavioral/evaluation/significant") << ',' << csv_opt(number_at(r, "/behavioral/icc"))
             << ',' << csv_opt(rc) << ',' << csv_opt(number_at(r, cd + "/evaluation/chance/value")) << ','
             << flag_at(r, cd + "/evaluation/significant") << ',' << csv_opt(rt) << ','
             << csv_opt(number_at(r, tp + "/evaluation/chance/value")) << ',' << flag_at(r, tp + "/evaluation/significant")
             << ',' << csv_opt(number_at(r, "/controllability/copydraw-score/mean_auc")) << ','
             << csv_opt(number_at(r, "/controllability/copydraw-score/evaluation/chance/value")) << ','
             << flag_at(r, "/controllability/copydraw-score/evaluation/significant") << ',' << csv_opt(eff) << ','
             << csv_opt(mwu_p) << ',' << type << '\n';

    sig_behavioral += flag_at(r, "/behavioral/evaluation/significant") == "true";
    sig_neural += flag_at(r, cd + "/evaluation/significant") == "true";
    sig_control += flag_at(r, "/controllability/copydraw-score/evaluation/significant") == "true";

    if (auc && rc) {
      r_for_auc.push_back(*rc);
      auc_x_r.push_back(*auc);
    }
    if (rc) r_cd.push_back(*rc);
    if (rt) r_task.push_back(*rt);
    if (rc && rt) {
      cd_paired.push_back(*rc);
      task_paired.push_back(*rt);
    }
    if (auc && eff && *eff != 0.0) {
      (*eff > 0 ? pos_eff : neg_eff).push_back(*eff);
      (*eff > 0 ? pos_auc : neg_auc).push_back(*auc);
    }
    if (eff && mwu_p) {
      const bool sig = *mwu_p < 0.05;
      if (*eff > 0) (sig ? inc_sig : inc_ns)++;
      if (*eff < 0) (sig ? dec_sig : dec_ns)++;
    }

    if (r.contains(nlohmann::json::json_pointer("/behavioral/shap/feature_names"))) {
      const auto& sh = r["behavioral"]["shap"];
      for (std::size_t f = 0; f < sh["feature_names"].size(); ++f)
        shap << id << ',' << sh["feature_names"][f].get<std::string>() << ','
             << csv_number(sh["signed_importance"][f].get<double>()) << ',' << csv_number(sh["mean_abs"][f].get<double>())
             << '\n';
    }
    if (r.contains("behavioral") && r["behavioral"].contains("task_performance")) {
      const std::string b = "/behavioral/task_performance";
      task << id << ',' << csv_opt(number_at(r, b + "/mean_fraction_matched/ON")) << ','
           << csv_opt(number_at(r, b + "/mean_fraction_matched/OFF")) << ',' << csv_opt(number_at(r, b + "/mean_distance/ON"))
           << ',' << csv_opt(number_at(r, b + "/mean_distance/OFF")) << ',' << csv_opt(eff) << ',' << csv_opt(mwu_p) << ','
           << csv_opt(auc) << '\n';
    }
    if (r.contains("neural"))
      for (const auto& [target, section] : r["neural"].items())
        if (section.contains("band_counts"))
          for (const auto& [band, count] : section["band_counts"].items())
            bands << id << ',' << target << ',' << band << ',' << count.get<long long>() << '\n';
  }

  nlohmann::json welch = nullptr;
  if (cd_paired.size() >= 2) {
    try {
      const auto w = welch_t(cd_paired, task_paired);
      welch = {{"n", cd_paired.size()}, {"t", w.t}, {"df", w.df}, {"p", w.p}};
    } catch (const Error&) {
    }
  }
  out.summary = {
      {"schema_version", kReportSchemaVersion},
      {"n_sessions", reports.size()},
      {"icc_threshold", icc_threshold},
      {"significant_sessions", {{"behavioral", sig_behavioral}, {"neural_copydraw", sig_neural}, {"controllability", sig_control}}},
      {"outcome_types", type_counts},
      {"auc_vs_r", detail::ols_or_null(r_for_auc, auc_x_r)},
      {"r_task_vs_r_copydraw", detail::ols_or_null(cd_paired, task_paired)},
      {"r_copydraw_vs_r_task_welch", welch},
      {"mean_r", {{"copydraw-score", r_cd.empty() ? nlohmann::json(nullptr) : nlohmann::json(mean(r_cd))},
                  {"task-performance", r_task.empty() ? nlohmann::json(nullptr) : nlohmann::json(mean(r_task))}}},
      {"auc_vs_task_effect", {{"positive", detail::ols_or_null(pos_eff, pos_auc)}, {"negative", detail::ols_or_null(neg_eff, neg_auc)}}},
      {"task_effect_counts",
       {{"increase", {{"significant", inc_sig}, {"not_significant", inc_ns}}},
        {"decrease", {{"significant", dec_sig}, {"not_significant", dec_ns}}}}}};
  out.sessions_csv = sessions.str();
  out.shap_csv = shap.str();
  out.task_performance_csv = task.str();
  out.band_counts_csv = bands.str();
  return out;
}

}  // namespace copydraw
