#pragma once

#include "stepprune/search.hpp"

#include <vector>

namespace stepprune::search::detail {

struct BatchOutcome {
  std::vector<NodeId> all;       // node ids in generation order
  std::vector<NodeId> retained;  // non-pruned, generation order
};

/// Adds a generated sibling batch under `parent`: creates nodes, charges the
/// ledger (pruned candidates included), records the EXPAND event, and when a
/// detector is present groups the batch and marks pruned nodes with PRUNE
/// events.
BatchOutcome add_batch(std::vector<SearchTreeNode>& nodes, NodeId parent,
                       std::vector<CandidateStep> batch,
                       const equiv::EquivalenceDetector* detector,
                       TokenLedger& ledger, SearchTrace& trace, int round,
                       int max_width, int max_depth);

/// Priors over retained siblings from generator scores: proportional when
/// all scores are present and nonnegative, softmax when any is negative,
/// uniform when any score is missing.
std::vector<double> normalize_priors(const std::vector<SearchTreeNode>& nodes,
                                     const std::vector<NodeId>& retained);

std::vector<CandidateStep> path_steps(const std::vector<SearchTreeNode>& nodes,
                                      NodeId id);

double clamp01(double v);

}  // namespace stepprune::search::detail
