#pragma once

#include "stepprune/core.hpp"

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

/**
 * Equivalence detection and sibling pruning.
 *
 * Detectors judge whether two candidate step texts describe the same
 * operation. Grouping closes the pairwise relation transitively (union-find)
 * so every sibling batch partitions into equivalence classes, and one
 * representative per class is retained.
 */

namespace stepprune::equiv {

// ============================================================================
// Verdict
// ============================================================================

enum class VerdictSource { FAST_FILTER, CLASSIFIER, ORACLE, EXTERNAL };

/// Five-tier equivalence judgment. Levels 3 and 4 count as equivalent at
/// pruning time; the full level is preserved in dataset records.
struct Verdict {
  int level = 0;             // 0..4
  double probability = 0.0;  // classifier probability; 1.0/0.0 when rule-based
  VerdictSource source = VerdictSource::FAST_FILTER;

  bool equivalent() const { return level >= 3; }
};

const char* verdict_source_name(VerdictSource s);

// ============================================================================
// Detector contract
// ============================================================================

class EquivalenceDetector {
public:
  virtual ~EquivalenceDetector() = default;

  /// Judges one unordered pair. Both texts must be nonempty. Deterministic
  /// for a fixed detector state; evaluated once per pair in generation
  /// order, so symmetry is by construction.
  virtual Verdict detect(std::string_view a, std::string_view b) const = 0;
};

/// Pair-probability source for the cascade (in-process model or remote).
using PairScorer = std::function<double(std::string_view, std::string_view)>;

/// Two-stage cascade: pairs with Levenshtein ratio <= ratio_threshold are
/// non-equivalent without invoking the classifier; the rest get the
/// classifier's probability, binarized at decision_threshold.
class CascadeDetector : public EquivalenceDetector {
public:
  CascadeDetector(double ratio_threshold, PairScorer scorer,
                  double decision_threshold = 0.5);

  Verdict detect(std::string_view a, std::string_view b) const override;

  /// How many pairs reached the classifier (instrumentation).
  std::int64_t classifier_calls() const { return classifier_calls_.load(); }
  std::int64_t fast_filter_hits() const { return fast_filter_hits_.load(); }

private:
  double ratio_threshold_;
  PairScorer scorer_;
  double decision_threshold_;
  mutable std::atomic<std::int64_t> classifier_calls_{0};
  mutable std::atomic<std::int64_t> fast_filter_hits_{0};
};

/// Ratio-only detector: equivalent iff the Levenshtein ratio exceeds the
/// threshold. The crude untrained arm of the strategy matrix.
class RatioDetector : public EquivalenceDetector {
public:
  explicit RatioDetector(double ratio_threshold)
      : ratio_threshold_(ratio_threshold) {}

  Verdict detect(std::string_view a, std::string_view b) const override;

private:
  double ratio_threshold_;
};

/// Wraps a fallible detector; failures degrade to "not equivalent" and bump
/// a warning counter instead of aborting the search.
class FailSoftDetector : public EquivalenceDetector {
public:
  explicit FailSoftDetector(std::shared_ptr<const EquivalenceDetector> inner)
      : inner_(std::move(inner)) {}

  Verdict detect(std::string_view a, std::string_view b) const override;

  std::int64_t failures() const { return failures_.load(); }

private:
  std::shared_ptr<const EquivalenceDetector> inner_;
  mutable std::atomic<std::int64_t> failures_{0};
};

// ============================================================================
// Grouping and representative selection
// ============================================================================

struct EquivalenceGrouping {
  struct PrunedEntry {
    std::size_t index;
    std::size_t representative_index;
  };

  /// Disjoint groups covering all candidate indices, ordered by smallest
  /// member; members ascending.
  std::vector<std::vector<std::size_t>> groups;
  /// Representative candidate index per group (filled by
  /// select_representatives).
  std::vector<std::size_t> representative;
  std::vector<PrunedEntry> pruned;
};

/// Pairwise detect over all unordered pairs, closed transitively via
/// union-find. Pairs already connected are skipped, so detector calls never
/// exceed C(n,2). A detection error aborts with a diagnostic naming the pair.
EquivalenceGrouping group_candidates(const std::vector<CandidateStep>& candidates,
                                     const EquivalenceDetector& detector);

struct Selection {
  std::vector<std::size_t> retained;  // generation order
  std::vector<EquivalenceGrouping::PrunedEntry> pruned;
};

/// Per group, retains the candidate with the highest generator score
/// (missing scores lose to any score), tie-broken by lowest generation
/// index. Fills grouping.representative and grouping.pruned.
Selection select_representatives(EquivalenceGrouping& grouping,
                                 const std::vector<CandidateStep>& candidates);

}  // namespace stepprune::equiv
