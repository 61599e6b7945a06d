#pragma once

#include "stepprune/core.hpp"
#include "stepprune/equiv.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

/**
 * Search engines: PUCT-guided MCTS and step-level beam search, both with the
 * equivalence-pruning hook at expansion points and JSONL trace emission.
 *
 * Each MCTS simulation runs selection (argmax over non-pruned children of
 * Q + c_puct * P * sqrt(N_parent) / (1 + N_child)), one expansion at the
 * selected leaf, evaluation of that leaf by the reward model, and backup to
 * the root. Beam search pools candidates per depth, prunes each sibling
 * batch before top-k selection, and keeps the best-scored paths.
 */

namespace stepprune::search {

// ============================================================================
// Contracts
// ============================================================================

class GeneratorContract {
public:
  virtual ~GeneratorContract() = default;

  /// Returns at most n candidate steps extending the path. Every candidate
  /// carries its generation token count.
  virtual std::vector<CandidateStep> expand(const ProblemInstance& problem,
                                            const std::vector<CandidateStep>& path,
                                            int n, double temperature,
                                            int max_new_tokens) = 0;
};

class RewardContract {
public:
  virtual ~RewardContract() = default;

  /// Process-reward score in [0,1] for the path (last step included). Pure
  /// with respect to its inputs.
  virtual double score(const ProblemInstance& problem,
                       const std::vector<CandidateStep>& path) = 0;
};

// ============================================================================
// Trace
// ============================================================================

struct ExpandCandidate {
  NodeId node_id = kNoNode;
  std::string text;
  std::int64_t gen_tokens = 0;
  std::optional<double> score;
  bool terminal = false;
};

struct ExpandEvent {
  NodeId parent = kNoNode;
  int round = 0;  // simulation index (MCTS) or depth round (SBS)
  int depth = 0;  // depth of the children
  std::vector<ExpandCandidate> candidates;
};

struct PruneEvent {
  NodeId node_id = kNoNode;
  NodeId representative = kNoNode;
};

struct SelectEvent {
  int round = 0;
  std::vector<NodeId> nodes;  // MCTS: selection path; SBS: surviving beam
};

struct BackupEvent {
  NodeId node_id = kNoNode;  // evaluated endpoint
  double value = 0.0;
};

struct TerminalEvent {
  NodeId node_id = kNoNode;
  std::string answer;
};

using TraceEvent =
    std::variant<ExpandEvent, PruneEvent, SelectEvent, BackupEvent, TerminalEvent>;

struct SearchTrace {
  std::string problem_id;
  std::vector<TraceEvent> events;
  std::string final_answer;
  std::int64_t final_tokens = 0;
  std::int64_t pruned_candidates = 0;
  std::optional<bool> solved;  // filled by the bench harness
};

/// One JSON object per line per event, then a final summary line.
std::string trace_to_jsonl(const SearchTrace& trace);
SearchTrace trace_from_jsonl(const std::string& jsonl);

void emit_trace(const SearchTrace& trace, const std::string& path);
SearchTrace load_trace(const std::string& path);

/// Replay fold: total gen_tokens over all EXPAND candidates.
std::int64_t fold_expand_tokens(const SearchTrace& trace);
std::int64_t count_prune_events(const SearchTrace& trace);

// ============================================================================
// Search
// ============================================================================

struct SearchResult {
  std::string answer;  // text of the chosen terminal step; empty when none
  TokenLedger ledger;
  SearchTrace trace;
  std::vector<SearchTreeNode> tree;
};

SearchResult mcts_search(const ProblemInstance& problem,
                         GeneratorContract& generator, RewardContract& reward,
                         const equiv::EquivalenceDetector* detector,
                         const SearchConfig& config);

SearchResult sbs_search(const ProblemInstance& problem,
                        GeneratorContract& generator, RewardContract& reward,
                        const equiv::EquivalenceDetector* detector,
                        const SearchConfig& config);

/// Dispatches on config.algorithm.
SearchResult run_search(const ProblemInstance& problem,
                        GeneratorContract& generator, RewardContract& reward,
                        const equiv::EquivalenceDetector* detector,
                        const SearchConfig& config);

}  // namespace stepprune::search
