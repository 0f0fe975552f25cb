#pragma once

// Domain types shared by every module: pen traces, neural epochs, trials,
// blocks and sessions, together with their validation rules.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "copydraw/error.hpp"

namespace copydraw {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct PenSample {
  double t = 0.0;  // seconds since trial start
  double x = 0.0;  // screen px
  double y = 0.0;
  bool operator==(const PenSample&) const = default;
};

struct Trace {
  std::vector<PenSample> samples;
  std::vector<Point2> templ;
  double trial_duration_limit = 0.0;  // seconds

  std::vector<Point2> points() const {
    std::vector<Point2> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.x, s.y});
    return out;
  }
  bool operator==(const Trace&) const = default;
};

enum class DbsCondition { Off, On };

constexpr std::string_view to_string(DbsCondition c) { return c == DbsCondition::On ? "ON" : "OFF"; }

inline DbsCondition parse_condition(std::string_view s) {
  if (s == "ON") return DbsCondition::On;
  if (s == "OFF") return DbsCondition::Off;
  fail(Errc::SchemaViolation, "condition must be \"ON\" or \"OFF\", got \"" + std::string(s) + "\"");
}

enum class Exclusion { None, MarkerIssue, LabProtocol, Fragmented };

constexpr std::string_view to_string(Exclusion e) {
  switch (e) {
    case Exclusion::None: return "none";
    case Exclusion::MarkerIssue: return "marker_issue";
    case Exclusion::LabProtocol: return "lab_protocol";
    case Exclusion::Fragmented: return "fragmented";
  }
  return "none";
}

inline Exclusion parse_exclusion(std::string_view s) {
  if (s == "none") return Exclusion::None;
  if (s == "marker_issue") return Exclusion::MarkerIssue;
  if (s == "lab_protocol") return Exclusion::LabProtocol;
  if (s == "fragmented") return Exclusion::Fragmented;
  fail(Errc::SchemaViolation, "unknown exclusion reason \"" + std::string(s) + "\"");
}

enum class Modality { Eeg, Ecog };

constexpr std::string_view to_string(Modality m) { return m == Modality::Eeg ? "EEG" : "ECOG"; }

inline Modality parse_modality(std::string_view s) {
  if (s == "EEG") return Modality::Eeg;
  if (s == "ECOG") return Modality::Ecog;
  fail(Errc::SchemaViolation, "modality must be \"EEG\" or \"ECOG\", got \"" + std::string(s) + "\"");
}

/// Highest analysis band edge; epochs must be sampled above twice this.
inline constexpr double kMaxBandEdgeHz = 90.0;

struct NeuralEpoch {
  Eigen::MatrixXd data;  // channels x samples
  double sample_rate = 300.0;
  std::vector<std::string> channel_names;
  Modality modality = Modality::Eeg;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }

  bool operator==(const NeuralEpoch& o) const {
    return data.rows() == o.data.rows() && data.cols() == o.data.cols() && data == o.data &&
           sample_rate == o.sample_rate && channel_names == o.channel_names && modality == o.modality;
  }
};

struct Trial {
  Trace trace;
  std::optional<NeuralEpoch> neural;
  Exclusion excluded = Exclusion::None;

  bool is_excluded() const { return excluded != Exclusion::None; }
  bool operator==(const Trial&) const = default;
};

struct Block {
  int index = 0;
  DbsCondition condition = DbsCondition::Off;
  std::vector<Trial> trials;
  bool operator==(const Block&) const = default;
};

inline constexpr std::size_t kMaxTrialsPerBlock = 12;

struct Session {
  std::string id;
  std::vector<Block> blocks;
  Modality modality = Modality::Eeg;
  bool operator==(const Session&) const = default;
};

/// Flat reference to a non-excluded trial, in chronological order.
struct TrialRef {
  std::size_t block_pos = 0;  // position in Session::blocks
  std::size_t trial_pos = 0;  // position in Block::trials
  int block_index = 0;
  DbsCondition condition = DbsCondition::Off;
};

inline std::vector<TrialRef> included_trials(const Session& s) {
  std::vector<TrialRef> out;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const auto& blk = s.blocks[b];
    for (std::size_t t = 0; t < blk.trials.size(); ++t) {
      if (blk.trials[t].is_excluded()) continue;
      out.push_back({b, t, blk.index, blk.condition});
    }
  }
  return out;
}

inline const Trial& trial_at(const Session& s, const TrialRef& r) { return s.blocks[r.block_pos].trials[r.trial_pos]; }

/// Collapses repeated timestamps keeping the last sample at each time.
/// Throws InvariantViolation if time runs backwards.
inline std::vector<PenSample> dedupe_samples(const std::vector<PenSample>& in, const std::string& where = "") {
  std::vector<PenSample> out;
  out.reserve(in.size());
  for (const auto& s : in) {
    if (!out.empty() && s.t < out.back().t)
      fail(Errc::InvariantViolation, where + "pen timestamps decrease (" + std::to_string(out.back().t) + " -> " +
                                         std::to_string(s.t) + ")");
    if (!out.empty() && s.t == out.back().t)
      out.back() = s;
    else
      out.push_back(s);
  }
  return out;
}

inline void validate_trace(const Trace& tr, const std::string& where = "") {
  for (const auto& s : tr.samples) {
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y))
      fail(Errc::InvariantViolation, where + "non-finite pen sample");
    if (s.t < 0.0) fail(Errc::InvariantViolation, where + "negative pen timestamp");
  }
  for (std::size_t i = 1; i < tr.samples.size(); ++i)
    if (!(tr.samples[i].t > tr.samples[i - 1].t))
      fail(Errc::InvariantViolation, where + "pen timestamps not strictly increasing");
  if (tr.samples.size() < 4) fail(Errc::InvariantViolation, where + "trace has fewer than 4 samples");
  if (tr.templ.empty()) fail(Errc::InvariantViolation, where + "template is empty");
  for (const auto& p : tr.templ)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(Errc::InvariantViolation, where + "non-finite template point");
  if (!(tr.trial_duration_limit > 0.0)) fail(Errc::InvariantViolation, where + "trial_duration_limit must be positive");
}

inline void validate_epoch(const NeuralEpoch& ep, const std::string& where = "") {
  if (ep.channels() < 1) fail(Errc::InvariantViolation, where + "epoch has no channels");
  if (ep.samples() < 2) fail(Errc::InvariantViolation, where + "epoch has fewer than 2 samples");
  if (!(ep.sample_rate > 2.0 * kMaxBandEdgeHz))
    fail(Errc::InvariantViolation, where + "sample_rate must exceed " + std::to_string(2.0 * kMaxBandEdgeHz) + " Hz");
  if (!ep.data.allFinite()) fail(Errc::InvariantViolation, where + "epoch contains non-finite values");
  if (!ep.channel_names.empty() && static_cast<Eigen::Index>(ep.channel_names.size()) != ep.channels())
    fail(Errc::InvariantViolation, where + "channel_names length does not match channel count");
}

/// Checks every type invariant; throws InvariantViolation naming the offender.
inline void validate_session(const Session& s) {
  bool has_on = false, has_off = false;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const auto& blk = s.blocks[b];
    const std::string bw = "block " + std::to_string(blk.index) + ": ";
    if (b > 0 && blk.index <= s.blocks[b - 1].index)
      fail(Errc::InvariantViolation, bw + "block indices must be strictly increasing");
    (blk.condition == DbsCondition::On ? has_on : has_off) = true;
    std::size_t kept = 0;
    for (std::size_t t = 0; t < blk.trials.size(); ++t) {
      const auto& tr = blk.trials[t];
      const std::string w = bw + "trial " + std::to_string(t) + ": ";
      validate_trace(tr.trace, w);
      if (tr.neural) {
        validate_epoch(*tr.neural, w);
        if (tr.neural->modality != s.modality) fail(Errc::InvariantViolation, w + "epoch modality differs from session");
      }
      if (!tr.is_excluded()) ++kept;
    }
    if (kept > kMaxTrialsPerBlock)
      fail(Errc::InvariantViolation, bw + "more than " + std::to_string(kMaxTrialsPerBlock) + " included trials");
  }
  if (!has_on || !has_off) fail(Errc::InvariantViolation, "session needs at least one ON and one OFF block");
}

}  // namespace copydraw
