#pragma once

// Joint behavioral/neural outcome taxonomy. Significance is "metric above its
// own permutation chance level"; ICC is high at or above the threshold.

#include <cmath>
#include <string>
#include <string_view>

#include "copydraw/error.hpp"

namespace copydraw {

inline constexpr double kDefaultIccThreshold = 0.5;

enum class OutcomeKind { Type1 = 1, Type2, Type3, Type4, Type5, Type6 };

struct OutcomeType {
  OutcomeKind kind = OutcomeKind::Type6;
  bool auc_sig = false;
  bool r_sig = false;
  bool icc_high = false;

  int number() const { return static_cast<int>(kind); }
  std::string name() const { return "Type" + std::to_string(number()); }
};

/// Recommended use of the session's marker for each outcome type.
constexpr std::string_view recommendation(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Type1: return "proportional control";
    case OutcomeKind::Type2: return "threshold control";
    case OutcomeKind::Type3: return "subtle DBS effect or data quality issue; revisit neural decoding";
    case OutcomeKind::Type4: return "no DBS effect on behavior; marker not suited for hand-motor aDBS";
    case OutcomeKind::Type5: return "strong DBS effect but failed neural decoding; investigate data or pipeline";
    case OutcomeKind::Type6: return "check DBS parameters or ceiling effect";
  }
  return "";
}

inline OutcomeType classify_outcome(bool auc_sig, bool r_sig, bool icc_high) {
  OutcomeType o{OutcomeKind::Type6, auc_sig, r_sig, icc_high};
  if (!auc_sig && icc_high)
    fail(Errc::UnreachableCombination, "non-significant behavioral AUC with high ICC cannot occur");
  if (auc_sig && r_sig) o.kind = icc_high ? OutcomeKind::Type1 : OutcomeKind::Type2;
  else if (auc_sig) o.kind = icc_high ? OutcomeKind::Type5 : OutcomeKind::Type3;
  else o.kind = r_sig ? OutcomeKind::Type4 : OutcomeKind::Type6;
  return o;
}

inline OutcomeType classify_outcome(double auc, double auc_chance, double r, double r_chance, double icc,
                                    double icc_threshold = kDefaultIccThreshold) {
  for (double v : {auc, auc_chance, r, r_chance, icc, icc_threshold})
    if (!std::isfinite(v)) fail(Errc::InvalidSpec, "outcome inputs must be finite");
  return classify_outcome(auc > auc_chance, r > r_chance, icc >= icc_threshold);
}

}  // namespace copydraw
