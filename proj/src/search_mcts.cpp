#include "search_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stepprune::search {

using detail::add_batch;
using detail::clamp01;
using detail::normalize_priors;
using detail::path_steps;

namespace {

/// Argmax child by PUCT among non-pruned children; ties go to the higher
/// prior, then the lower node id. kNoNode when there are no children.
NodeId select_child(const std::vector<SearchTreeNode>& nodes, NodeId parent,
                    double c_puct) {
  const auto& p = nodes[static_cast<std::size_t>(parent)];
  double sqrt_parent = std::sqrt(static_cast<double>(p.visit_count));
  NodeId best = kNoNode;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_prior = -1.0;
  for (NodeId cid : p.children) {
    const auto& c = nodes[static_cast<std::size_t>(cid)];
    if (c.pruned) continue;
    double u = c_puct * c.prior * sqrt_parent /
               (1.0 + static_cast<double>(c.visit_count));
    double score = c.q_value() + u;
    if (score > best_score ||
        (score == best_score && c.prior > best_prior)) {
      best_score = score;
      best_prior = c.prior;
      best = cid;
    }
  }
  return best;
}

bool expandable(const SearchTreeNode& node, const SearchConfig& config) {
  return !node.expanded && !node.step.terminal && node.depth < config.tree_max_depth;
}

}  // namespace

SearchResult mcts_search(const ProblemInstance& problem,
                         GeneratorContract& generator, RewardContract& reward,
                         const equiv::EquivalenceDetector* detector,
                         const SearchConfig& config) {
  config.validate();
  problem.validate();
  if (config.algorithm != Algorithm::MCTS)
    throw ContractViolation("mcts_search: config.algorithm must be MCTS");

  SearchResult result;
  result.trace.problem_id = problem.id;
  auto& nodes = result.tree;
  auto& trace = result.trace;
  auto& ledger = result.ledger;

  SearchTreeNode root;
  root.node_id = 0;
  nodes.push_back(root);

  if (config.tree_max_depth == 0) {
    // Nothing can be expanded; the root is immediately terminal.
    trace.events.push_back(TerminalEvent{0, ""});
    trace.final_tokens = 0;
    return result;
  }

  std::vector<bool> evaluated;
  evaluated.push_back(false);

  auto eval_node = [&](NodeId id) -> double {
    auto& node = nodes[static_cast<std::size_t>(id)];
    if (!evaluated[static_cast<std::size_t>(id)]) {
      node.reward = clamp01(reward.score(problem, path_steps(nodes, id)));
      evaluated[static_cast<std::size_t>(id)] = true;
    }
    return node.reward;
  };

  for (int sim = 0; sim < config.simulations; ++sim) {
    // One simulation walks from the root to a terminal (or depth-capped)
    // node, selecting by PUCT through expanded levels and expanding every
    // fresh leaf it reaches on the way down.
    NodeId id = 0;
    std::vector<NodeId> path{0};
    while (true) {
      NodeId next = select_child(nodes, id, config.c_puct);
      if (next != kNoNode) {
        id = next;
        path.push_back(id);
        continue;
      }
      if (!expandable(nodes[static_cast<std::size_t>(id)], config)) break;
      auto batch = generator.expand(problem, path_steps(nodes, id),
                                    config.tree_max_width, config.temperature,
                                    config.max_new_tokens);
      auto outcome = add_batch(nodes, id, std::move(batch), detector, ledger,
                               trace, sim, config.tree_max_width,
                               config.tree_max_depth);
      evaluated.resize(nodes.size(), false);
      // Priors normalize over the generated batch; pruned siblings keep
      // none. Retained priors are left unscaled so a representative's
      // exploration weight matches what the op had before merging.
      auto priors = normalize_priors(nodes, outcome.all);
      for (std::size_t i = 0; i < outcome.all.size(); ++i)
        nodes[static_cast<std::size_t>(outcome.all[i])].prior = priors[i];
      for (NodeId cid : outcome.all) {
        if (nodes[static_cast<std::size_t>(cid)].pruned)
          nodes[static_cast<std::size_t>(cid)].prior = 0.0;
      }
      nodes[static_cast<std::size_t>(id)].expanded = true;
      if (outcome.retained.empty()) break;  // generator returned nothing
    }
    trace.events.push_back(SelectEvent{sim, path});

    // Evaluate the simulation endpoint, then back the value up to the root.
    double value = eval_node(id);
    for (NodeId nid : path) {
      auto& n = nodes[static_cast<std::size_t>(nid)];
      n.visit_count += 1;
      n.value_sum += value;
    }
    trace.events.push_back(BackupEvent{id, value});
  }

  // Final answer: follow highest-visit children (ties by higher Q, then
  // lower id); stop before unvisited territory.
  NodeId id = 0;
  while (true) {
    NodeId best = kNoNode;
    std::int64_t best_n = 0;
    double best_q = -1.0;
    for (NodeId cid : nodes[static_cast<std::size_t>(id)].children) {
      const auto& c = nodes[static_cast<std::size_t>(cid)];
      if (c.pruned || c.visit_count == 0) continue;
      if (c.visit_count > best_n ||
          (c.visit_count == best_n && c.q_value() > best_q)) {
        best = cid;
        best_n = c.visit_count;
        best_q = c.q_value();
      }
    }
    if (best == kNoNode) break;
    id = best;
  }

  const auto& final_node = nodes[static_cast<std::size_t>(id)];
  result.answer = (id != 0 && final_node.step.terminal) ? final_node.step.text : "";
  trace.events.push_back(TerminalEvent{id, result.answer});
  trace.final_answer = result.answer;
  trace.final_tokens = ledger.generated_total;
  trace.pruned_candidates = ledger.pruned_candidates;
  return result;
}

SearchResult run_search(const ProblemInstance& problem,
                        GeneratorContract& generator, RewardContract& reward,
                        const equiv::EquivalenceDetector* detector,
                        const SearchConfig& config) {
  if (config.algorithm == Algorithm::MCTS)
    return mcts_search(problem, generator, reward, detector, config);
  return sbs_search(problem, generator, reward, detector, config);
}

}  // namespace stepprune::search
