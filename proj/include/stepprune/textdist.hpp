#pragma once

#include "stepprune/errors.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

/**
 * Edit-distance primitives: unit-cost Levenshtein distance over Unicode
 * scalar values, the normalized ratio used by the fast filter, and the
 * inclusive ratio-band filter used by the dataset pipeline.
 */

namespace stepprune::textdist {

/// Minimum number of unit-cost insertions, deletions, and substitutions
/// transforming a into b, computed over Unicode scalar values.
std::int64_t levenshtein_distance(std::string_view a, std::string_view b);

/// 1 - distance(a,b) / max(|a|,|b|); 1.0 when both inputs are empty.
/// Comparison is over the raw text; pass a normalizer to fold case,
/// whitespace, or any other pre-processing into the comparison.
double levenshtein_ratio(std::string_view a, std::string_view b);

using TextNormalizer = std::function<std::string(std::string_view)>;
double levenshtein_ratio(std::string_view a, std::string_view b,
                         const TextNormalizer& normalize);

struct RatioBand {
  double lo = 0.75;
  double hi = 0.99;

  void validate() const {
    if (lo < 0.0 || hi > 1.0 || lo > hi)
      throw ContractViolation("RatioBand: requires 0 <= lo <= hi <= 1");
  }

  bool contains(double ratio) const { return ratio >= lo && ratio <= hi; }
};

using TextPair = std::pair<std::string, std::string>;

/// Keeps exactly the pairs whose ratio lies in [band.lo, band.hi], both ends
/// inclusive, preserving input order.
std::vector<TextPair> band_filter(const std::vector<TextPair>& pairs,
                                  const RatioBand& band);

}  // namespace stepprune::textdist
