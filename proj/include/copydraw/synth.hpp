#pragma once

// Synthetic sessions with planted ground truth.
//
// Traces: a walker advances along a pseudo-letter template (three concatenated
// stroke atoms) at a per-trial speed, perturbed by a smoothed Ornstein-Uhlenbeck
// process. DBS ON scales the walker speed and can add a vertical oscillation.
//
// Epochs: each planted source is band-limited noise (white noise through the
// analysis Butterworth bank) whose per-trial variance is
//     power * max(floor, 1 + gain_behavior * z_trial + gain_dbs * [ON]),
// projected through a unit-norm mixing column. Non-modulated background
// sources and spatially white noise make up the noise floor, scaled so the
// per-channel planted-source power over noise power equals `snr`.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string_view>
#include <numbers>
#include <string>
#include <vector>

#include "copydraw/dtw.hpp"
#include "copydraw/error.hpp"
#include "copydraw/evaluation.hpp"
#include "copydraw/filter.hpp"
#include "copydraw/random.hpp"
#include "copydraw/spoc.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct KinematicSpec {
  double on_speed_gain = 1.5;       // ON walker speed multiplier
  double on_tremor_y_px = 0.0;      // ON-only vertical oscillation amplitude
  double tremor_hz = 5.0;
  double base_speed = 60.0;         // px/s along the template
  double trial_speed_sd = 0.08;     // per-trial log-speed spread
  double latent_speed_coupling = 0.0;  // log-speed change per unit behavioral latent
  double perturbation_px = 5.0;     // stationary STD of the path perturbation
  double perturbation_tau = 0.3;    // s
  double tablet_rate = 100.0;       // Hz
  double time_limit = 8.0;          // s
};

enum class ModulationSource { CopyDrawScore, TaskPerformance, Latent };

struct SourceSpec {
  std::string band = "beta";
  double power = 1.0;
  double gain_behavior = 0.8;
  double gain_dbs = 0.0;
  std::vector<double> mixing;  // empty: random unit-norm column
};

struct NeuralSynthSpec {
  bool enabled = true;
  Modality modality = Modality::Eeg;
  int n_channels = 8;
  double sample_rate = 300.0;
  double epoch_seconds = 4.0;
  std::vector<SourceSpec> sources = {SourceSpec{}};
  int n_background = 2;
  double snr = 3.0;
  ModulationSource modulation = ModulationSource::CopyDrawScore;
  double variance_floor = 0.05;
  bool white_noise_only = false;
};

struct SynthSpec {
  std::string session_id = "synthetic";
  int n_blocks = 12;
  int trials_per_block = 12;
  DbsCondition first_condition = DbsCondition::Off;
  KinematicSpec kinematics;
  NeuralSynthSpec neural;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::vector<Eigen::VectorXd> mixing;  // per planted source
  std::vector<double> latent;           // per trial, chronological
  std::vector<double> modulation;       // z_trial driving source variance
  std::vector<std::vector<double>> variance_multiplier;  // [source][trial]
  double noise_sigma = 0.0;
  double background_power = 0.0;
  double on_speed_gain = 1.0;
  double on_tremor_y_px = 0.0;
  double snr = 0.0;
};

inline void validate_spec(const SynthSpec& s) {
  auto bad = [](const std::string& m) { fail(Errc::InvalidSpec, m); };
  if (s.n_blocks < 2) bad("n_blocks must be >= 2");
  if (s.trials_per_block < 1 || s.trials_per_block > static_cast<int>(kMaxTrialsPerBlock)) bad("trials_per_block must be in [1, 12]");
  const auto& k = s.kinematics;
  if (!(k.on_speed_gain > 0) || !(k.base_speed > 0) || !(k.tablet_rate > 0) || !(k.time_limit > 0) ||
      !(k.perturbation_tau > 0) || k.perturbation_px < 0 || k.trial_speed_sd < 0 || k.on_tremor_y_px < 0)
    bad("kinematic parameters out of range");
  const auto& n = s.neural;
  if (!n.enabled) return;
  if (!(n.snr > 0)) bad("snr must be positive");
  if (n.n_channels < 1) bad("n_channels must be >= 1");
  if (!(n.sample_rate > 2.0 * kMaxBandEdgeHz)) bad("sample_rate too low for the analysis bands");
  if (!(n.epoch_seconds > 0)) bad("epoch_seconds must be positive");
  if (n.n_background < 0) bad("n_background must be >= 0");
  if (!n.white_noise_only && n.sources.empty()) bad("at least one planted source required");
  for (const auto& src : n.sources) {
    band_by_name(src.band);
    if (!(src.power > 0)) bad("source power must be positive");
    if (!src.mixing.empty() && static_cast<int>(src.mixing.size()) != n.n_channels) bad("mixing column length != n_channels");
  }
}

// ---------------------------------------------------------------------------
// Templates and traces

namespace detail {

inline std::vector<Point2> atom(int kind) {
  std::vector<Point2> p;
  const double pi = std::numbers::pi;
  constexpr int n = 60;
  for (int i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / n;
    switch (kind) {
      case 0: p.push_back({50.0 - 50.0 * std::cos(pi * u), -50.0 * std::sin(pi * u)}); break;  // arch
      case 1: p.push_back({100.0 * u + 25.0 * std::sin(2 * pi * u), -40.0 * (1 - std::cos(2 * pi * u))}); break;  // loop
      case 2: p.push_back({100.0 * u, 30.0 * std::sin(2 * pi * u)}); break;  // wave
      case 3: {  // zigzag
        const double seg = u * 3.0;
        const int k = std::min(2, static_cast<int>(seg));
        const double f = seg - k;
        const double y0 = (k % 2 == 0) ? 0.0 : -60.0, y1 = (k % 2 == 0) ? -60.0 : 0.0;
        p.push_back({100.0 * u, y0 + (y1 - y0) * f});
        break;
      }
      default: p.push_back({100.0 * u, -60.0 * u * u}); break;  // hook
    }
  }
  return p;
}

/// Resamples a polyline at uniform arc-length spacing.
inline std::vector<Point2> resample(const std::vector<Point2>& pts, double spacing) {
  std::vector<Point2> out{pts.front()};
  double carry = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = euclidean(pts[i - 1], pts[i]);
    double pos = spacing - carry;
    while (pos <= seg) {
      const double f = pos / seg;
      out.push_back({pts[i - 1].x + f * (pts[i].x - pts[i - 1].x), pts[i - 1].y + f * (pts[i].y - pts[i - 1].y)});
      pos += spacing;
    }
    carry = seg - (pos - spacing);
  }
  if (euclidean(out.back(), pts.back()) > 1e-9) out.push_back(pts.back());
  return out;
}

/// Point at arc length `s` along a uniformly resampled polyline.
inline Point2 at_arc_length(const std::vector<Point2>& pts, double spacing, double s) {
  if (s <= 0) return pts.front();
  const double idx = s / spacing;
  const auto i = static_cast<std::size_t>(idx);
  if (i + 1 >= pts.size()) return pts.back();
  const double f = idx - static_cast<double>(i);
  return {pts[i].x + f * (pts[i + 1].x - pts[i].x), pts[i].y + f * (pts[i + 1].y - pts[i].y)};
}

}  // namespace detail

inline constexpr double kTemplateSpacing = 4.0;  // px between template points

/// Pseudo-letter built from three stroke atoms laid out left to right.
inline std::vector<Point2> make_template(Rng& rng) {
  std::vector<Point2> dense;
  double x0 = 100.0;
  for (int a = 0; a < 3; ++a) {
    const int kind = static_cast<int>(rng.below(5));
    for (const auto& p : detail::atom(kind)) dense.push_back({x0 + p.x, 300.0 + p.y});
    x0 += 110.0;
  }
  return detail::resample(dense, kTemplateSpacing);
}

inline Trace synthesize_trace(const std::vector<Point2>& templ, const KinematicSpec& k, bool on, double latent, Rng& rng) {
  double log_speed = std::log(k.base_speed) + k.trial_speed_sd * rng.normal() + k.latent_speed_coupling * latent;
  if (on) log_speed += std::log(k.on_speed_gain);
  const double speed = std::exp(log_speed);
  const double length = kTemplateSpacing * static_cast<double>(templ.size() - 1);

  // perturbation: OU driven, then two exponential smoothers for a differentiable path
  const double dt = 1e-3;
  const double a = std::exp(-dt / k.perturbation_tau);
  const double drive = k.perturbation_px * std::sqrt(1.0 - a * a);
  const double smooth = std::exp(-dt / 0.04);
  double ou[2] = {k.perturbation_px * rng.normal(), k.perturbation_px * rng.normal()};
  double s1[2] = {ou[0], ou[1]}, s2[2] = {ou[0], ou[1]};
  const double tremor_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Trace tr;
  tr.templ = templ;
  tr.trial_duration_limit = k.time_limit;
  const double period = 1.0 / k.tablet_rate;
  double next_sample = 0.0;
  double s = 0.0;
  const auto steps = static_cast<long>(std::ceil(k.time_limit / dt));
  for (long step = 0; step <= steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    if (t + 1e-12 >= next_sample) {
      const Point2 base = detail::at_arc_length(templ, kTemplateSpacing, s);
      double y = base.y + s2[1];
      if (on && k.on_tremor_y_px > 0)
        y += k.on_tremor_y_px * std::sin(2.0 * std::numbers::pi * k.tremor_hz * t + tremor_phase);
      tr.samples.push_back({t, base.x + s2[0], y});
      next_sample += period * (1.0 + 0.2 * (rng.uniform() - 0.5));
    }
    if (s >= length) break;
    s += speed * dt;
    for (int ax = 0; ax < 2; ++ax) {
      ou[ax] = a * ou[ax] + drive * rng.normal();
      s1[ax] = smooth * s1[ax] + (1 - smooth) * ou[ax];
      s2[ax] = smooth * s2[ax] + (1 - smooth) * s1[ax];
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Epochs

struct EpochComponents {
  Eigen::MatrixXd source;  // planted sources only
  Eigen::MatrixXd noise;   // background sources + white noise
  Eigen::MatrixXd total() const { return source + noise; }
};

/// Fixed per-session quantities of the neural generator.
struct NeuralPlan {
  std::vector<Eigen::VectorXd> mixing;
  std::vector<SosFilter> source_filters;
  std::vector<Eigen::VectorXd> bg_mixing;
  std::vector<SosFilter> bg_filters;
  double bg_power = 0.0;
  double noise_sigma = 1.0;
};

inline Eigen::VectorXd random_unit_column(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v / v.norm();
}

/// Noise levels follow from the mean planted power per channel, given the
/// trial variance multipliers.
inline NeuralPlan plan_neural(const NeuralSynthSpec& spec, const std::vector<std::vector<double>>& multipliers, Rng& rng) {
  NeuralPlan plan;
  const auto& bands = canonical_bands();
  double planted = 0.0;
  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const auto& src = spec.sources[i];
    Eigen::VectorXd m = src.mixing.empty()
                            ? random_unit_column(spec.n_channels, rng)
                            : Eigen::Map<const Eigen::VectorXd>(src.mixing.data(), spec.n_channels).normalized();
    const auto& band = band_by_name(src.band);
    plan.source_filters.push_back(butter_bandpass(band.lo, band.hi, spec.sample_rate, 4));
    double mean_mult = 0.0;
    for (double v : multipliers[i]) mean_mult += v;
    mean_mult /= static_cast<double>(std::max<std::size_t>(1, multipliers[i].size()));
    planted += src.power * mean_mult / static_cast<double>(spec.n_channels);
    plan.mixing.push_back(std::move(m));
  }
  const double noise_budget = planted / spec.snr;  // per channel
  const double bg_share = spec.n_background > 0 ? 0.5 : 0.0;
  plan.noise_sigma = std::sqrt(noise_budget * (1.0 - bg_share));
  if (spec.n_background > 0) plan.bg_power = noise_budget * bg_share * spec.n_channels / spec.n_background;
  for (int b = 0; b < spec.n_background; ++b) {
    plan.bg_mixing.push_back(random_unit_column(spec.n_channels, rng));
    const auto& band = bands[rng.below(bands.size())];
    plan.bg_filters.push_back(butter_bandpass(band.lo, band.hi, spec.sample_rate, 4));
  }
  return plan;
}

namespace detail {

inline std::vector<double> unit_band_noise(const SosFilter& f, std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.normal();
  auto y = filtfilt(f, w);
  double m = 0, ss = 0;
  for (double v : y) m += v;
  m /= static_cast<double>(n);
  for (double& v : y) {
    v -= m;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  for (double& v : y) v /= sd;
  return y;
}

}  // namespace detail

/// One trial's epoch, split into planted-source and noise parts.
inline EpochComponents synthesize_epoch_components(const NeuralSynthSpec& spec, const NeuralPlan& plan,
                                                   const std::vector<double>& trial_multipliers, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(spec.epoch_seconds * spec.sample_rate));
  const Eigen::Index nch = spec.n_channels, ns = static_cast<Eigen::Index>(n);
  EpochComponents c;
  c.source = Eigen::MatrixXd::Zero(nch, ns);
  c.noise = Eigen::MatrixXd::Zero(nch, ns);
  if (spec.white_noise_only) {
    for (Eigen::Index i = 0; i < nch; ++i)
      for (Eigen::Index j = 0; j < ns; ++j) c.noise(i, j) = rng.normal();
    return c;
  }
  for (std::size_t s = 0; s < plan.mixing.size(); ++s) {
    const auto sig = detail::unit_band_noise(plan.source_filters[s], n, rng);
    const double amp = std::sqrt(spec.sources[s].power * trial_multipliers[s]);
    const Eigen::Map<const Eigen::RowVectorXd> row(sig.data(), ns);
    c.source += amp * plan.mixing[s] * row;
  }
  for (std::size_t b = 0; b < plan.bg_mixing.size(); ++b) {
    const auto sig = detail::unit_band_noise(plan.bg_filters[b], n, rng);
    const Eigen::Map<const Eigen::RowVectorXd> row(sig.data(), ns);
    c.noise += std::sqrt(plan.bg_power) * plan.bg_mixing[b] * row;
  }
  for (Eigen::Index i = 0; i < nch; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) c.noise(i, j) += plan.noise_sigma * rng.normal();
  return c;
}

inline std::vector<std::string> default_channel_names(Modality m, int n) {
  std::vector<std::string> names;
  char buf[16];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, m == Modality::Eeg ? "E%02d" : "ECOG%d", i + 1);
    names.emplace_back(buf);
  }
  return names;
}

/// Per-source, per-trial variance multipliers from the modulation signal.
inline std::vector<std::vector<double>> variance_multipliers(const NeuralSynthSpec& spec, std::span<const double> z,
                                                             std::span<const int> on) {
  std::vector<std::vector<double>> out;
  for (const auto& src : spec.sources) {
    std::vector<double> m(z.size());
    for (std::size_t t = 0; t < z.size(); ++t)
      m[t] = std::max(spec.variance_floor, 1.0 + src.gain_behavior * z[t] + src.gain_dbs * (on[t] ? 1.0 : 0.0));
    out.push_back(std::move(m));
  }
  return out;
}

/// Epochs for a list of trials given their modulation values and conditions.
inline std::vector<NeuralEpoch> synthesize_epochs(const NeuralSynthSpec& spec, std::span<const double> z,
                                                  std::span<const int> on, Rng& rng, GroundTruth* truth = nullptr) {
  const auto mult = variance_multipliers(spec, z, on);
  const auto plan = plan_neural(spec, mult, rng);
  std::vector<NeuralEpoch> epochs;
  epochs.reserve(z.size());
  std::vector<double> tm(spec.sources.size());
  for (std::size_t t = 0; t < z.size(); ++t) {
    for (std::size_t s = 0; s < spec.sources.size(); ++s) tm[s] = mult[s][t];
    NeuralEpoch ep;
    ep.data = synthesize_epoch_components(spec, plan, tm, rng).total();
    ep.sample_rate = spec.sample_rate;
    ep.modality = spec.modality;
    ep.channel_names = default_channel_names(spec.modality, spec.n_channels);
    epochs.push_back(std::move(ep));
  }
  if (truth) {
    truth->mixing = plan.mixing;
    truth->modulation.assign(z.begin(), z.end());
    truth->variance_multiplier = mult;
    truth->noise_sigma = plan.noise_sigma;
    truth->background_power = plan.bg_power;
    truth->snr = spec.snr;
  }
  return epochs;
}

// ---------------------------------------------------------------------------
// Sessions

struct SynthSession {
  Session session;
  GroundTruth truth;
};

inline std::vector<double> zscored(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 0 ? (v[i] - m) / sd : 0.0;
  return out;
}

inline SynthSession generate_session(const SynthSpec& spec) {
  validate_spec(spec);
  SynthSession out;
  auto& s = out.session;
  s.id = spec.session_id;
  s.modality = spec.neural.modality;
  Rng rng(derive_seed(spec.seed, 0));
  Rng neural_rng(derive_seed(spec.seed, 1));

  out.truth.on_speed_gain = spec.kinematics.on_speed_gain;
  out.truth.on_tremor_y_px = spec.kinematics.on_tremor_y_px;
  DbsCondition cond = spec.first_condition;
  for (int b = 0; b < spec.n_blocks; ++b) {
    Block blk;
    blk.index = b;
    blk.condition = cond;
    for (int t = 0; t < spec.trials_per_block; ++t) {
      const double latent = rng.normal();
      out.truth.latent.push_back(latent);
      const auto templ = make_template(rng);
      Trial tr;
      tr.trace = synthesize_trace(templ, spec.kinematics, cond == DbsCondition::On, latent, rng);
      blk.trials.push_back(std::move(tr));
    }
    s.blocks.push_back(std::move(blk));
    cond = cond == DbsCondition::On ? DbsCondition::Off : DbsCondition::On;
  }

  if (spec.neural.enabled) {
    const auto trials = included_trials(s);
    std::vector<int> on = condition_labels(trials);
    std::vector<double> z;
    switch (spec.neural.modulation) {
      case ModulationSource::CopyDrawScore: z = zscored(copydraw_scores(s)); break;
      case ModulationSource::TaskPerformance: {
        auto tp = task_performance_targets(s);
        for (double& v : tp) v = std::isfinite(v) && v > 0 ? std::log(v) : 0.0;
        z = zscored(tp);
        break;
      }
      case ModulationSource::Latent: z = zscored(out.truth.latent); break;
    }
    auto epochs = synthesize_epochs(spec.neural, z, on, neural_rng, &out.truth);
    for (std::size_t i = 0; i < trials.size(); ++i)
      s.blocks[trials[i].block_pos].trials[trials[i].trial_pos].neural = std::move(epochs[i]);
  }
  validate_session(s);
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive DTW oracle

inline constexpr std::size_t kBruteForceMaxPoints = 6;

/// Minimum over every monotone step path from (0,0) to any (n-1, j); path
/// costs are accumulated from the start in path order. Ties prefer the
/// smallest end column.
inline DtwAlignment brute_force_dtw(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  if (a.size() > kBruteForceMaxPoints || b.size() > kBruteForceMaxPoints)
    fail(Errc::TooLarge, "brute-force DTW is limited to 6 points per side");
  if (a.empty() || b.empty()) fail(Errc::TooFewPoints, "empty point list");
  DtwAlignment best;
  best.total_cost = INFINITY;
  std::vector<std::pair<std::size_t, std::size_t>> path;
  auto visit = [&](auto&& self, std::size_t i, std::size_t j, double acc) -> void {
    path.emplace_back(i, j);
    acc += euclidean(a[i], b[j]);
    if (i == a.size() - 1) {
      if (acc < best.total_cost || (acc == best.total_cost && j + 1 < best.n_c)) {
        best.total_cost = acc;
        best.n_c = j + 1;
        best.path = path;
      }
    }
    if (i + 1 < a.size() && j + 1 < b.size()) self(self, i + 1, j + 1, acc);
    if (i + 1 < a.size()) self(self, i + 1, j, acc);
    if (j + 1 < b.size()) self(self, i, j + 1, acc);
    path.pop_back();
  };
  visit(visit, 0, 0, 0.0);
  std::vector<double> sum(a.size(), 0.0);
  std::vector<double> count(a.size(), 0.0);
  for (const auto& [i, j] : best.path) {
    sum[i] += euclidean(a[i], b[j]);
    count[i] += 1;
  }
  for (std::size_t i = 0; i < a.size(); ++i) best.per_trace_distance.push_back(sum[i] / count[i]);
  return best;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json spec_to_json(const SynthSpec& s) {
  using nlohmann::json;
  const auto& k = s.kinematics;
  const auto& n = s.neural;
  json sources = json::array();
  for (const auto& src : n.sources)
    sources.push_back({{"band", src.band}, {"power", src.power}, {"gain_behavior", src.gain_behavior},
                       {"gain_dbs", src.gain_dbs}, {"mixing", src.mixing}});
  const char* mod = n.modulation == ModulationSource::CopyDrawScore   ? "copydraw-score"
                    : n.modulation == ModulationSource::TaskPerformance ? "task-performance"
                                                                        : "latent";
  return {{"session_id", s.session_id},
          {"n_blocks", s.n_blocks},
          {"trials_per_block", s.trials_per_block},
          {"first_condition", std::string(to_string(s.first_condition))},
          {"seed", s.seed},
          {"kinematics",
           {{"on_speed_gain", k.on_speed_gain}, {"on_tremor_y_px", k.on_tremor_y_px}, {"tremor_hz", k.tremor_hz},
            {"base_speed", k.base_speed}, {"trial_speed_sd", k.trial_speed_sd},
            {"latent_speed_coupling", k.latent_speed_coupling}, {"perturbation_px", k.perturbation_px},
            {"perturbation_tau", k.perturbation_tau}, {"tablet_rate", k.tablet_rate}, {"time_limit", k.time_limit}}},
          {"neural",
           {{"enabled", n.enabled}, {"modality", std::string(to_string(n.modality))}, {"n_channels", n.n_channels},
            {"sample_rate", n.sample_rate}, {"epoch_seconds", n.epoch_seconds}, {"sources", sources},
            {"n_background", n.n_background}, {"snr", n.snr}, {"modulation", mod},
            {"variance_floor", n.variance_floor}, {"white_noise_only", n.white_noise_only}}}};
}

/// Reads a spec; every field except `seed` is optional and defaults as in SynthSpec.
inline SynthSpec spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    if (!j.contains("seed")) fail(Errc::InvalidSpec, "seed is mandatory");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.session_id = j.value("session_id", s.session_id);
    s.n_blocks = j.value("n_blocks", s.n_blocks);
    s.trials_per_block = j.value("trials_per_block", s.trials_per_block);
    if (j.contains("first_condition")) s.first_condition = parse_condition(j["first_condition"].get<std::string>());
    if (j.contains("kinematics")) {
      const auto& jk = j["kinematics"];
      auto& k = s.kinematics;
      k.on_speed_gain = jk.value("on_speed_gain", k.on_speed_gain);
      k.on_tremor_y_px = jk.value("on_tremor_y_px", k.on_tremor_y_px);
      k.tremor_hz = jk.value("tremor_hz", k.tremor_hz);
      k.base_speed = jk.value("base_speed", k.base_speed);
      k.trial_speed_sd = jk.value("trial_speed_sd", k.trial_speed_sd);
      k.latent_speed_coupling = jk.value("latent_speed_coupling", k.latent_speed_coupling);
      k.perturbation_px = jk.value("perturbation_px", k.perturbation_px);
      k.perturbation_tau = jk.value("perturbation_tau", k.perturbation_tau);
      k.tablet_rate = jk.value("tablet_rate", k.tablet_rate);
      k.time_limit = jk.value("time_limit", k.time_limit);
    }
    if (j.contains("neural")) {
      const auto& jn = j["neural"];
      auto& n = s.neural;
      n.enabled = jn.value("enabled", n.enabled);
      if (jn.contains("modality")) n.modality = parse_modality(jn["modality"].get<std::string>());
      n.n_channels = jn.value("n_channels", n.n_channels);
      n.sample_rate = jn.value("sample_rate", n.sample_rate);
      n.epoch_seconds = jn.value("epoch_seconds", n.epoch_seconds);
      n.n_background = jn.value("n_background", n.n_background);
      n.snr = jn.value("snr", n.snr);
      n.variance_floor = jn.value("variance_floor", n.variance_floor);
      n.white_noise_only = jn.value("white_noise_only", n.white_noise_only);
      if (jn.contains("modulation")) {
        const auto m = jn["modulation"].get<std::string>();
        if (m == "copydraw-score") n.modulation = ModulationSource::CopyDrawScore;
        else if (m == "task-performance") n.modulation = ModulationSource::TaskPerformance;
        else if (m == "latent") n.modulation = ModulationSource::Latent;
        else fail(Errc::InvalidSpec, "unknown modulation \"" + m + "\"");
      }
      if (jn.contains("sources")) {
        n.sources.clear();
        for (const auto& js : jn["sources"]) {
          SourceSpec src;
          src.band = js.value("band", src.band);
          src.power = js.value("power", src.power);
          src.gain_behavior = js.value("gain_behavior", src.gain_behavior);
          src.gain_dbs = js.value("gain_dbs", src.gain_dbs);
          src.mixing = js.value("mixing", src.mixing);
          n.sources.push_back(std::move(src));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidSpec, e.what());
  }
  validate_spec(s);
  return s;
}

inline nlohmann::json truth_to_json(const GroundTruth& g) {
  nlohmann::json mixing = nlohmann::json::array();
  for (const auto& m : g.mixing) mixing.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  return {{"mixing", mixing},
          {"latent", g.latent},
          {"modulation", g.modulation},
          {"variance_multiplier", g.variance_multiplier},
          {"noise_sigma", g.noise_sigma},
          {"background_power", g.background_power},
          {"on_speed_gain", g.on_speed_gain},
          {"on_tremor_y_px", g.on_tremor_y_px},
          {"snr", g.snr}};
}

/// Named presets used by the CLI and the acceptance suite.
inline SynthSpec preset_spec(std::string_view name, std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  s.session_id = std::string(name) + "-" + std::to_string(seed);
  if (name == "default") return s;
  if (name == "null") {
    s.kinematics.on_speed_gain = 1.0;
    s.neural.sources.front().gain_behavior = 0.0;
    return s;
  }
  if (name == "white-noise") {
    s.neural.white_noise_only = true;
    return s;
  }
  if (name == "noncontrollable") {
    s.kinematics.on_speed_gain = 1.0;
    s.kinematics.latent_speed_coupling = 0.3;
    s.neural.modulation = ModulationSource::Latent;
    return s;
  }
  if (name == "dbs-marker") {
    s.neural.sources.front().gain_behavior = 0.0;
    s.neural.sources.front().gain_dbs = 1.0;
    return s;
  }
  if (name == "ecog") {
    s.neural.modality = Modality::Ecog;
    s.neural.n_channels = 4;
    s.neural.n_background = 1;
    return s;
  }
  fail(Errc::InvalidSpec, "unknown preset \"" + std::string(name) + "\"");
}

}  // namespace copydraw
