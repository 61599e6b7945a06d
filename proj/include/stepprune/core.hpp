#pragma once

#include "stepprune/errors.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

/**
 * Core domain types shared by every other module: problems, candidate
 * reasoning steps, search-tree nodes, the run configuration, token
 * accounting, and the report math (accuracy / tokens / ratio).
 */

namespace stepprune {

// ============================================================================
// Domain types
// ============================================================================

struct ProblemInstance {
  std::string id;
  std::string statement;
  std::optional<std::string> reference_answer;

  void validate() const {
    if (id.empty()) throw ContractViolation("ProblemInstance: empty id");
    if (statement.empty())
      throw ContractViolation("ProblemInstance: empty statement");
  }
};

/// One generated reasoning step.
struct CandidateStep {
  std::string text;
  std::int64_t gen_tokens = 0;  // tokens consumed producing this step
  std::optional<double> score;  // generator preference, higher better
  bool terminal = false;        // step contains a final answer

  void validate() const {
    if (text.empty()) throw ContractViolation("CandidateStep: empty text");
    if (gen_tokens < 0)
      throw ContractViolation("CandidateStep: negative gen_tokens");
  }
};

using NodeId = std::int64_t;
constexpr NodeId kNoNode = -1;

/// Search-tree node. Pruned nodes stay in the tree, flagged, with a link to
/// the retained representative; they are never selected or expanded.
struct SearchTreeNode {
  NodeId node_id = kNoNode;
  NodeId parent = kNoNode;
  CandidateStep step;
  int depth = 0;
  std::int64_t visit_count = 0;  // N
  double value_sum = 0.0;        // W
  double prior = 0.0;            // P in [0,1]
  double reward = 0.0;           // process-reward score in [0,1]
  bool pruned = false;
  NodeId representative = kNoNode;  // set iff pruned
  std::vector<NodeId> children;
  bool expanded = false;

  /// Mean value Q = W/N; 0 when unvisited.
  double q_value() const {
    return visit_count > 0 ? value_sum / static_cast<double>(visit_count) : 0.0;
  }
};

enum class Algorithm { MCTS, SBS };

/// Which equivalence detector a run uses at expansion points.
enum class PruningKind { NONE, ORACLE, RATIO, CASCADE, EXTERNAL };

struct SearchConfig {
  Algorithm algorithm = Algorithm::MCTS;
  int simulations = 20;
  double c_puct = 1.25;
  int tree_max_width = 10;
  int tree_max_depth = 50;
  double temperature = 0.7;
  int max_new_tokens = 1024;
  int beam_size = 3;
  bool pruning_enabled = false;
  double ratio_threshold = 0.75;
  std::uint64_t seed = 0;

  void validate() const {
    if (simulations < 1) throw ContractViolation("SearchConfig: simulations < 1");
    if (c_puct <= 0) throw ContractViolation("SearchConfig: c_puct <= 0");
    if (tree_max_width < 1)
      throw ContractViolation("SearchConfig: tree_max_width < 1");
    if (tree_max_depth < 0)
      throw ContractViolation("SearchConfig: tree_max_depth < 0");
    if (temperature < 0) throw ContractViolation("SearchConfig: temperature < 0");
    if (max_new_tokens < 1)
      throw ContractViolation("SearchConfig: max_new_tokens < 1");
    if (beam_size < 1) throw ContractViolation("SearchConfig: beam_size < 1");
    if (beam_size > tree_max_width)
      throw ContractViolation("SearchConfig: beam_size > tree_max_width");
    if (ratio_threshold < 0.0 || ratio_threshold > 1.0)
      throw ContractViolation("SearchConfig: ratio_threshold outside [0,1]");
  }
};

// ============================================================================
// Token accounting
// ============================================================================

/// Cumulative generated-token accounting for one search run. Counts only
/// generated tokens (not prompt tokens); candidates that are later pruned
/// still count because their generation already happened.
struct TokenLedger {
  std::int64_t generated_total = 0;
  std::map<int, std::int64_t> per_depth;
  std::int64_t pruned_candidates = 0;

  void add(int depth, std::int64_t tokens) {
    if (tokens < 0) throw ContractViolation("TokenLedger: negative tokens");
    generated_total += tokens;
    per_depth[depth] += tokens;
  }

  /// Associative merge for combining per-worker ledgers.
  void merge(const TokenLedger& other) {
    generated_total += other.generated_total;
    for (const auto& [d, t] : other.per_depth) per_depth[d] += t;
    pruned_candidates += other.pruned_candidates;
  }
};

inline TokenLedger ledger_add(TokenLedger ledger, int depth,
                              std::int64_t tokens) {
  ledger.add(depth, tokens);
  return ledger;
}

// ============================================================================
// Report math
// ============================================================================

/// 100 * tokens / baseline_tokens. Baseline must be positive.
double compute_ratio(std::int64_t tokens, std::int64_t baseline_tokens);

/// Renders a percentage with two decimals, e.g. "69.49".
std::string format_percent(double value);

using AnswerChecker =
    std::function<bool(const std::string& answer, const std::string& reference)>;

/// Default checker: string equality after trimming whitespace and trailing
/// punctuation on both sides.
bool normalized_equals(const std::string& answer, const std::string& reference);

struct ProblemResult {
  ProblemInstance problem;
  std::string final_answer;
  std::int64_t tokens = 0;
};

struct AccuracyResult {
  double accuracy = 0.0;  // percentage
  std::int64_t solved = 0;
  std::int64_t total = 0;  // denominator actually used
  std::vector<std::string> item_errors;
  std::vector<bool> per_item_solved;
};

/// Percentage of results whose answer the checker accepts. Items with no
/// reference answer are recorded as errors; with strict=true they stay in
/// the denominator as unsolved, with strict=false they are excluded.
AccuracyResult score_accuracy(const std::vector<ProblemResult>& results,
                              const AnswerChecker& checker, bool strict = true);

// ============================================================================
// Bench report
// ============================================================================

struct BenchReport {
  struct PerProblem {
    std::string problem_id;
    bool solved = false;
    std::int64_t tokens = 0;
  };

  std::string method_name;
  double accuracy = 0.0;      // percentage
  std::int64_t tokens = 0;    // generated tokens, summed over problems
  double ratio = 100.0;       // percentage vs the named baseline
  std::string baseline_name;
  std::vector<PerProblem> per_problem;

  /// JSON document with keys: method, acc, tokens, ratio, per_problem.
  std::string to_json() const;
};

/// Aligned text table with Acc / Tokens / Ratio columns, one row per report.
std::string render_report_table(const std::vector<BenchReport>& reports);

}  // namespace stepprune
