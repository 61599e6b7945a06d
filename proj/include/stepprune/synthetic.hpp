#pragma once

#include "stepprune/core.hpp"
#include "stepprune/equiv.hpp"
#include "stepprune/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

/**
 * Deterministic synthetic reasoning domain for desk-scale verification.
 *
 * Every expansion renders candidate steps as surface variants of canonical
 * operations; the canonical identity is recoverable from the text (the
 * trailing integer payload), which gives the oracle detector ground truth
 * by construction. Exactly one canonical operation per depth lies on the
 * correct path, and the terminal level concludes with the problem's answer
 * value (or a decoy when the path went wrong).
 *
 * Expansion is a pure function of (config, problem, path, n): identical
 * inputs yield identical batches regardless of call order, which makes
 * paired vanilla/pruned runs share generation streams.
 */

namespace stepprune::adapters {

struct SyntheticDomainConfig {
  int n_ops = 10;            // canonical operations per depth
  int variants_per_op = 4;   // surface renderings per canonical op
  double duplication_rate = 0.0;
  int depth = 6;             // op levels; terminals appear one level deeper
  int tokens_min = 40;       // tokens_per_step sampling range
  int tokens_max = 120;
  double reward_noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Trailing integer payload that identifies a step's canonical operation
/// (or, for terminal steps, the concluded answer value).
std::optional<std::int64_t> canonical_key(std::string_view text);

std::vector<ProblemInstance> make_synthetic_problems(
    const SyntheticDomainConfig& config, int count);

class SyntheticGenerator : public search::GeneratorContract {
public:
  explicit SyntheticGenerator(SyntheticDomainConfig config);

  std::vector<CandidateStep> expand(const ProblemInstance& problem,
                                    const std::vector<CandidateStep>& path,
                                    int n, double temperature,
                                    int max_new_tokens) override;

private:
  SyntheticDomainConfig config_;
};

/// Reward 1 for on-path prefixes, 0 otherwise, plus clamped Gaussian noise.
/// The empty (root) path scores a neutral 0.5.
class SyntheticReward : public search::RewardContract {
public:
  explicit SyntheticReward(SyntheticDomainConfig config);

  double score(const ProblemInstance& problem,
               const std::vector<CandidateStep>& path) override;

private:
  SyntheticDomainConfig config_;
};

/// Ground-truth detector: two steps are equivalent iff their canonical keys
/// match. Never merges distinct operations.
class OracleDetector : public equiv::EquivalenceDetector {
public:
  equiv::Verdict detect(std::string_view a, std::string_view b) const override;
};

/// Checker comparing the answer step's trailing integer with the reference.
AnswerChecker synthetic_answer_checker();

}  // namespace stepprune::adapters
