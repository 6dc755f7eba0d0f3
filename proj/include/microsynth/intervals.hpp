#pragma once

#include <string>

namespace microsynth {

// 97.5% normal quantile; all confidence intervals here are 95%, z-based.
inline constexpr double kZ95 = 1.959964;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class SignificancePattern {
  both_significant_same_sign,
  both_insignificant,
  sign_disagreement,
  mixed_significance,
};

struct OverlapClassification {
  SignificancePattern pattern = SignificancePattern::both_insignificant;
  bool a_significant = false;  // interval strictly clear of the threshold
  bool b_significant = false;
  bool disjoint = false;       // statistically different
  int direction = 0;           // -1: a below b; +1: a above b; 0: overlap
  std::string label() const;   // "overlap", "disjoint_lower", "disjoint_higher"
};

// Closed-interval comparison: intervals sharing an endpoint overlap; an
// interval is significant only when it lies strictly above or below the
// threshold (1 for odds ratios, 0 for coefficients).
OverlapClassification ci_overlap_classify(const Interval& a, const Interval& b,
                                          double signif_threshold);

const char* to_string(SignificancePattern p);

}  // namespace microsynth
