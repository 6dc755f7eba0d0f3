#include "microsynth/intervals.hpp"

#include "microsynth/errors.hpp"

namespace microsynth {

OverlapClassification ci_overlap_classify(const Interval& a, const Interval& b,
                                          double signif_threshold) {
  if (!(a.lo <= a.hi) || !(b.lo <= b.hi)) {
    throw ConfigError("interval bounds out of order");
  }
  OverlapClassification out;
  const int sa = a.lo > signif_threshold ? 1 : (a.hi < signif_threshold ? -1 : 0);
  const int sb = b.lo > signif_threshold ? 1 : (b.hi < signif_threshold ? -1 : 0);
  out.a_significant = sa != 0;
  out.b_significant = sb != 0;
  if (sa != 0 && sb != 0) {
    out.pattern = sa == sb ? SignificancePattern::both_significant_same_sign
                           : SignificancePattern::sign_disagreement;
  } else if (sa == 0 && sb == 0) {
    out.pattern = SignificancePattern::both_insignificant;
  } else {
    out.pattern = SignificancePattern::mixed_significance;
  }
  if (a.hi < b.lo) {
    out.disjoint = true;
    out.direction = -1;
  } else if (b.hi < a.lo) {
    out.disjoint = true;
    out.direction = 1;
  }
  return out;
}

std::string OverlapClassification::label() const {
  if (!disjoint) return "overlap";
  return direction < 0 ? "disjoint_lower" : "disjoint_higher";
}

const char* to_string(SignificancePattern p) {
  switch (p) {
    case SignificancePattern::both_significant_same_sign: return "both_significant_same_sign";
    case SignificancePattern::both_insignificant: return "both_insignificant";
    case SignificancePattern::sign_disagreement: return "sign_disagreement";
    case SignificancePattern::mixed_significance: return "mixed_significance";
  }
  return "unknown";
}

}  // namespace microsynth
