#include "search_internal.hpp"

#include <algorithm>

namespace stepprune::search {

using detail::add_batch;
using detail::clamp01;
using detail::path_steps;

namespace {

struct BeamItem {
  NodeId node = kNoNode;
  double score = 0.0;
  bool terminal = false;
  bool exhausted = false;  // generator returned nothing / depth limit
};

}  // namespace

SearchResult sbs_search(const ProblemInstance& problem,
                        GeneratorContract& generator, RewardContract& reward,
                        const equiv::EquivalenceDetector* detector,
                        const SearchConfig& config) {
  config.validate();
  problem.validate();
  if (config.algorithm != Algorithm::SBS)
    throw ContractViolation("sbs_search: config.algorithm must be SBS");

  SearchResult result;
  result.trace.problem_id = problem.id;
  auto& nodes = result.tree;
  auto& trace = result.trace;
  auto& ledger = result.ledger;

  SearchTreeNode root;
  root.node_id = 0;
  nodes.push_back(root);

  if (config.tree_max_depth == 0) {
    trace.events.push_back(TerminalEvent{0, ""});
    return result;
  }

  std::vector<BeamItem> beam{{0, 0.0, false, false}};

  for (int round = 0; round < config.tree_max_depth; ++round) {
    bool any_extendable = false;
    for (const auto& item : beam)
      if (!item.terminal && !item.exhausted) any_extendable = true;
    if (!any_extendable) break;

    std::vector<BeamItem> pool;
    for (auto& item : beam) {
      const auto& node = nodes[static_cast<std::size_t>(item.node)];
      if (item.terminal || item.exhausted ||
          node.depth >= config.tree_max_depth) {
        pool.push_back(item);  // keeps competing with its existing score
        continue;
      }
      auto batch = generator.expand(problem, path_steps(nodes, item.node),
                                    config.tree_max_width, config.temperature,
                                    config.max_new_tokens);
      if (batch.empty()) {
        item.exhausted = true;
        pool.push_back(item);
        continue;
      }
      // Sibling batch is pruned before top-k selection.
      auto outcome = add_batch(nodes, item.node, std::move(batch), detector,
                               ledger, trace, round, config.tree_max_width,
                               config.tree_max_depth);
      for (NodeId cid : outcome.retained) {
        auto& child = nodes[static_cast<std::size_t>(cid)];
        child.reward = clamp01(reward.score(problem, path_steps(nodes, cid)));
        pool.push_back({cid, child.reward, child.step.terminal, false});
      }
    }
    if (pool.empty()) break;

    std::stable_sort(pool.begin(), pool.end(),
                     [](const BeamItem& a, const BeamItem& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.node < b.node;
                     });
    if (pool.size() > static_cast<std::size_t>(config.beam_size))
      pool.resize(static_cast<std::size_t>(config.beam_size));
    beam = std::move(pool);

    SelectEvent sel;
    sel.round = round;
    for (const auto& item : beam) sel.nodes.push_back(item.node);
    trace.events.push_back(sel);
  }

  // Highest-scoring terminal path wins; no terminal means no answer.
  NodeId answer_node = 0;
  double best_score = -1.0;
  for (const auto& item : beam) {
    if (!item.terminal) continue;
    if (item.score > best_score) {
      best_score = item.score;
      answer_node = item.node;
    }
  }
  if (answer_node != 0) {
    result.answer = nodes[static_cast<std::size_t>(answer_node)].step.text;
  }
  trace.events.push_back(TerminalEvent{answer_node, result.answer});
  trace.final_answer = result.answer;
  trace.final_tokens = ledger.generated_total;
  trace.pruned_candidates = ledger.pruned_candidates;
  return result;
}

}  // namespace stepprune::search
