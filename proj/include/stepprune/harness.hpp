#pragma once

#include "stepprune/core.hpp"
#include "stepprune/equiv.hpp"
#include "stepprune/search.hpp"

#include <memory>
#include <string>
#include <vector>

/**
 * Benchmark harness: runs a search strategy over a problem set with a
 * bounded worker pool, writes per-problem traces and resumable results, and
 * aggregates Acc / Tokens / Ratio reports across strategies.
 */

namespace stepprune::harness {

struct StrategySpec {
  std::string label;
  PruningKind kind = PruningKind::NONE;
  std::string model_path;    // cascade
  std::string external_url;  // external
  double decision_threshold = 0.5;
};

/// Parses "label:kind" or "label:kind@arg" (kind in none|oracle|ratio|
/// cascade|external; arg is the model path or endpoint URL).
StrategySpec parse_strategy(const std::string& text);

/// Builds a detector for one strategy, wrapped fail-soft so detector
/// failures degrade to "not equivalent" instead of losing a search.
/// Returns nullptr for PruningKind::NONE.
std::shared_ptr<const equiv::EquivalenceDetector> make_detector(
    const StrategySpec& spec, const SearchConfig& config);

struct RunConfig {
  SearchConfig search;
  int workers = 1;
  std::string output_dir;  // traces plus results.jsonl; empty disables
  bool resume = false;
  AnswerChecker checker;
};

struct StrategyOutcome {
  BenchReport report;
  TokenLedger ledger;
  std::int64_t detector_failures = 0;
};

/// Runs one strategy over the problem set. Per-problem results are flushed
/// as they finish; with resume enabled, problems already present in
/// results.jsonl are not rerun. Outputs are deterministic for a fixed seed
/// regardless of worker count.
StrategyOutcome run_strategy(const std::vector<ProblemInstance>& problems,
                             search::GeneratorContract& generator,
                             search::RewardContract& reward,
                             const StrategySpec& strategy,
                             const RunConfig& config);

/// Runs every strategy with identical seeds; Ratio is relative to the
/// first-listed strategy.
std::vector<BenchReport> run_bench(const std::vector<ProblemInstance>& problems,
                                   search::GeneratorContract& generator,
                                   search::RewardContract& reward,
                                   const std::vector<StrategySpec>& strategies,
                                   const RunConfig& config);

}  // namespace stepprune::harness
