#include "search_internal.hpp"

#include <algorithm>
#include <cmath>

namespace stepprune::search::detail {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::vector<CandidateStep> path_steps(const std::vector<SearchTreeNode>& nodes,
                                      NodeId id) {
  std::vector<CandidateStep> path;
  while (id > 0) {
    path.push_back(nodes[static_cast<std::size_t>(id)].step);
    id = nodes[static_cast<std::size_t>(id)].parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

BatchOutcome add_batch(std::vector<SearchTreeNode>& nodes, NodeId parent,
                       std::vector<CandidateStep> batch,
                       const equiv::EquivalenceDetector* detector,
                       TokenLedger& ledger, SearchTrace& trace, int round,
                       int max_width, int max_depth) {
  if (batch.size() > static_cast<std::size_t>(max_width))
    throw ContractViolation("generator returned more than tree_max_width candidates");

  auto& parent_node = nodes[static_cast<std::size_t>(parent)];
  const int child_depth = parent_node.depth + 1;
  if (child_depth > max_depth)
    throw ContractViolation("expansion would exceed tree_max_depth");

  BatchOutcome out;
  ExpandEvent expand;
  expand.parent = parent;
  expand.round = round;
  expand.depth = child_depth;

  for (auto& cand : batch) {
    cand.validate();
    NodeId id = static_cast<NodeId>(nodes.size());
    SearchTreeNode node;
    node.node_id = id;
    node.parent = parent;
    node.step = cand;
    node.depth = child_depth;
    nodes.push_back(std::move(node));
    nodes[static_cast<std::size_t>(parent)].children.push_back(id);
    ledger.add(child_depth, cand.gen_tokens);
    expand.candidates.push_back(
        {id, cand.text, cand.gen_tokens, cand.score, cand.terminal});
    out.all.push_back(id);
  }
  trace.events.push_back(expand);

  if (detector != nullptr && batch.size() >= 2) {
    equiv::EquivalenceGrouping grouping = equiv::group_candidates(batch, *detector);
    equiv::Selection sel = equiv::select_representatives(grouping, batch);
    for (const auto& entry : sel.pruned) {
      NodeId pruned_id = out.all[entry.index];
      NodeId rep_id = out.all[entry.representative_index];
      auto& pn = nodes[static_cast<std::size_t>(pruned_id)];
      pn.pruned = true;
      pn.representative = rep_id;
      ledger.pruned_candidates += 1;
      trace.events.push_back(PruneEvent{pruned_id, rep_id});
    }
    for (std::size_t idx : sel.retained) out.retained.push_back(out.all[idx]);
  } else {
    out.retained = out.all;
  }
  return out;
}

std::vector<double> normalize_priors(const std::vector<SearchTreeNode>& nodes,
                                     const std::vector<NodeId>& retained) {
  const std::size_t k = retained.size();
  std::vector<double> priors(k, 0.0);
  if (k == 0) return priors;

  bool all_scored = true;
  bool any_negative = false;
  for (NodeId id : retained) {
    const auto& score = nodes[static_cast<std::size_t>(id)].step.score;
    if (!score) {
      all_scored = false;
      break;
    }
    if (*score < 0.0) any_negative = true;
  }

  if (!all_scored) {
    for (auto& p : priors) p = 1.0 / static_cast<double>(k);
    return priors;
  }

  if (any_negative) {
    double max_score = -1e300;
    for (NodeId id : retained)
      max_score = std::max(max_score, *nodes[static_cast<std::size_t>(id)].step.score);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      priors[i] =
          std::exp(*nodes[static_cast<std::size_t>(retained[i])].step.score - max_score);
      sum += priors[i];
    }
    for (auto& p : priors) p /= sum;
    return priors;
  }

  double sum = 0.0;
  for (NodeId id : retained) sum += *nodes[static_cast<std::size_t>(id)].step.score;
  if (sum <= 0.0) {
    for (auto& p : priors) p = 1.0 / static_cast<double>(k);
    return priors;
  }
  for (std::size_t i = 0; i < k; ++i)
    priors[i] = *nodes[static_cast<std::size_t>(retained[i])].step.score / sum;
  return priors;
}

}  // namespace stepprune::search::detail
