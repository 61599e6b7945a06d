#include "stepprune/equiv.hpp"
#include "stepprune/textdist.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

namespace stepprune::equiv {

const char* verdict_source_name(VerdictSource s) {
  switch (s) {
    case VerdictSource::FAST_FILTER: return "FAST_FILTER";
    case VerdictSource::CLASSIFIER: return "CLASSIFIER";
    case VerdictSource::ORACLE: return "ORACLE";
    case VerdictSource::EXTERNAL: return "EXTERNAL";
  }
  return "UNKNOWN";
}

// ----------------------------------------------------------------------------
// CascadeDetector
// ----------------------------------------------------------------------------

CascadeDetector::CascadeDetector(double ratio_threshold, PairScorer scorer,
                                 double decision_threshold)
    : ratio_threshold_(ratio_threshold),
      scorer_(std::move(scorer)),
      decision_threshold_(decision_threshold) {
  if (ratio_threshold_ < 0.0 || ratio_threshold_ > 1.0)
    throw ContractViolation("CascadeDetector: ratio_threshold outside [0,1]");
  if (!scorer_) throw ContractViolation("CascadeDetector: null scorer");
}

Verdict CascadeDetector::detect(std::string_view a, std::string_view b) const {
  if (a.empty() || b.empty())
    throw ContractViolation("detect: empty text");
  if (a == b) return Verdict{4, 1.0, VerdictSource::FAST_FILTER};
  double ratio = textdist::levenshtein_ratio(a, b);
  if (ratio <= ratio_threshold_) {
    fast_filter_hits_.fetch_add(1);
    return Verdict{0, 0.0, VerdictSource::FAST_FILTER};
  }
  classifier_calls_.fetch_add(1);
  double p = scorer_(a, b);
  if (p >= decision_threshold_) return Verdict{4, p, VerdictSource::CLASSIFIER};
  return Verdict{0, p, VerdictSource::CLASSIFIER};
}

// ----------------------------------------------------------------------------
// RatioDetector
// ----------------------------------------------------------------------------

Verdict RatioDetector::detect(std::string_view a, std::string_view b) const {
  if (a.empty() || b.empty())
    throw ContractViolation("detect: empty text");
  if (a == b) return Verdict{4, 1.0, VerdictSource::FAST_FILTER};
  double ratio = textdist::levenshtein_ratio(a, b);
  if (ratio > ratio_threshold_)
    return Verdict{4, 1.0, VerdictSource::FAST_FILTER};
  return Verdict{0, 0.0, VerdictSource::FAST_FILTER};
}

// ----------------------------------------------------------------------------
// FailSoftDetector
// ----------------------------------------------------------------------------

Verdict FailSoftDetector::detect(std::string_view a, std::string_view b) const {
  try {
    return inner_->detect(a, b);
  } catch (const Error&) {
    failures_.fetch_add(1);
    return Verdict{0, 0.0, VerdictSource::FAST_FILTER};
  }
}

// ----------------------------------------------------------------------------
// Grouping
// ----------------------------------------------------------------------------

namespace {

class DisjointSet {
public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void merge(std::size_t a, std::size_t b) {
    std::size_t ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
    parent_[rb] = ra;
    if (rank_[ra] == rank_[rb]) ++rank_[ra];
  }

private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

}  // namespace

EquivalenceGrouping group_candidates(const std::vector<CandidateStep>& candidates,
                                     const EquivalenceDetector& detector) {
  const std::size_t n = candidates.size();
  DisjointSet sets(n);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sets.find(i) == sets.find(j)) continue;  // already connected
      Verdict v;
      try {
        v = detector.detect(candidates[i].text, candidates[j].text);
      } catch (const Error& e) {
        throw Error("group_candidates: detection failed for pair (" +
                    std::to_string(i) + "," + std::to_string(j) +
                    "): " + e.what());
      }
      if (v.equivalent()) sets.merge(i, j);
    }
  }

  // Groups keyed by root, ordered by smallest member.
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[sets.find(i)].push_back(i);

  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_root.size());
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    groups.push_back(std::move(members));
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  EquivalenceGrouping out;
  out.groups = std::move(groups);
  return out;
}

Selection select_representatives(EquivalenceGrouping& grouping,
                                 const std::vector<CandidateStep>& candidates) {
  Selection sel;
  grouping.representative.clear();
  grouping.pruned.clear();

  for (const auto& group : grouping.groups) {
    std::size_t best = group.front();
    double best_score = -std::numeric_limits<double>::infinity();
    if (candidates[best].score) best_score = *candidates[best].score;
    for (std::size_t idx : group) {
      double s = candidates[idx].score
                     ? *candidates[idx].score
                     : -std::numeric_limits<double>::infinity();
      if (s > best_score) {  // strict: equal scores keep the earlier index
        best_score = s;
        best = idx;
      }
    }
    grouping.representative.push_back(best);
    for (std::size_t idx : group) {
      if (idx == best) continue;
      grouping.pruned.push_back({idx, best});
    }
  }

  // Retained in generation order.
  sel.retained = grouping.representative;
  std::sort(sel.retained.begin(), sel.retained.end());
  sel.pruned = grouping.pruned;
  std::sort(sel.pruned.begin(), sel.pruned.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  grouping.pruned = sel.pruned;
  return sel;
}

}  // namespace stepprune::equiv
