#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stepprune/search.hpp"
#include "stepprune/synthetic.hpp"
#include "support/audit.hpp"

#include <cstdio>
#include <map>
#include <set>

using namespace stepprune;
using namespace stepprune::search;
using namespace stepprune::adapters;

namespace {

SyntheticDomainConfig domain_config(std::uint64_t seed, int depth = 4,
                                    double dup = 0.5) {
  SyntheticDomainConfig cfg;
  cfg.n_ops = 10;
  cfg.variants_per_op = 4;
  cfg.depth = depth;
  cfg.duplication_rate = dup;
  cfg.reward_noise = 0.03;
  cfg.seed = seed;
  return cfg;
}

SearchConfig mcts_config(std::uint64_t seed, int sims = 20, int width = 10,
                         int depth = 20) {
  SearchConfig cfg;
  cfg.algorithm = Algorithm::MCTS;
  cfg.simulations = sims;
  cfg.tree_max_width = width;
  cfg.tree_max_depth = depth;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("width 1 pruned search is identical to vanilla") {
  auto dom = domain_config(11, 3, 0.5);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 2);

  auto cfg = mcts_config(1, 12, 1, 10);
  cfg.beam_size = 1;
  for (const auto& p : problems) {
    auto vanilla = mcts_search(p, gen, reward, nullptr, cfg);
    auto pruned = mcts_search(p, gen, reward, &oracle, cfg);
    CHECK(trace_to_jsonl(vanilla.trace) == trace_to_jsonl(pruned.trace));
    CHECK(vanilla.ledger.generated_total == pruned.ledger.generated_total);
  }
}

TEST_CASE("zero duplication with the oracle detector matches vanilla bitwise") {
  auto dom = domain_config(12, 3, 0.0);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 2);

  auto cfg = mcts_config(2, 15, 6, 10);
  for (const auto& p : problems) {
    auto vanilla = mcts_search(p, gen, reward, nullptr, cfg);
    auto pruned = mcts_search(p, gen, reward, &oracle, cfg);
    CHECK(trace_to_jsonl(vanilla.trace) == trace_to_jsonl(pruned.trace));
  }
}

TEST_CASE("seeded runs are deterministic") {
  auto dom = domain_config(13, 4, 0.5);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 1);
  auto cfg = mcts_config(3);

  auto a = mcts_search(problems[0], gen, reward, &oracle, cfg);
  auto b = mcts_search(problems[0], gen, reward, &oracle, cfg);
  CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));

  SearchConfig sbs_cfg = cfg;
  sbs_cfg.algorithm = Algorithm::SBS;
  auto c = sbs_search(problems[0], gen, reward, &oracle, sbs_cfg);
  auto d = sbs_search(problems[0], gen, reward, &oracle, sbs_cfg);
  CHECK(trace_to_jsonl(c.trace) == trace_to_jsonl(d.trace));
}

TEST_CASE("MCTS finds the enumerated optimum on a tiny tree") {
  auto dom = domain_config(14, 3, 0.0);
  dom.n_ops = 3;
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  auto problems = make_synthetic_problems(dom, 5);

  auto cfg = mcts_config(4, 200, 3, 10);

  int matches = 0;
  for (const auto& p : problems) {
    // Exhaustive enumeration over complete paths, same generator and reward.
    std::string best_answer;
    double best_value = -1.0;
    std::vector<std::pair<std::vector<CandidateStep>, int>> stack{{{}, 0}};
    while (!stack.empty()) {
      auto [path, _] = stack.back();
      stack.pop_back();
      auto batch = gen.expand(p, path, 3, 0.7, 1024);
      if (batch.empty()) continue;
      for (const auto& c : batch) {
        auto next = path;
        next.push_back(c);
        if (c.terminal) {
          double v = reward.score(p, next);
          if (v > best_value) {
            best_value = v;
            best_answer = c.text;
          }
        } else {
          stack.push_back({next, 0});
        }
      }
    }

    auto result = mcts_search(p, gen, reward, nullptr, cfg);
    // Terminal variants share a value; compare concluded values.
    if (!result.answer.empty() &&
        adapters::canonical_key(result.answer) ==
            adapters::canonical_key(best_answer))
      ++matches;
  }
  CHECK(matches >= 4);  // acceptance runs the 100-trial version
}

TEST_CASE("pruning invariants hold on seeded runs (trace audit)") {
  auto dom = domain_config(15, 4, 0.6);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 3);

  auto cfg = mcts_config(5, 20, 8, 12);
  SearchConfig sbs_cfg = cfg;
  sbs_cfg.algorithm = Algorithm::SBS;
  sbs_cfg.beam_size = 3;

  for (const auto& p : problems) {
    auto m = mcts_search(p, gen, reward, &oracle, cfg);
    auto audit = test_audit::audit_trace(m.trace, &oracle, cfg.tree_max_width,
                                         cfg.tree_max_depth);
    for (const auto& f : audit.failures) MESSAGE(f);
    CHECK(audit.ok);

    auto backup = test_audit::audit_mcts_backup(m.trace);
    for (const auto& f : backup.failures) MESSAGE(f);
    CHECK(backup.ok);

    auto s = sbs_search(p, gen, reward, &oracle, sbs_cfg);
    auto sbs_audit = test_audit::audit_trace(s.trace, &oracle,
                                             sbs_cfg.tree_max_width,
                                             sbs_cfg.tree_max_depth);
    for (const auto& f : sbs_audit.failures) MESSAGE(f);
    CHECK(sbs_audit.ok);
  }
}

TEST_CASE("pruned MCTS never generates more tokens than vanilla") {
  for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
    auto dom = domain_config(seed, 5, 0.5);
    SyntheticGenerator gen(dom);
    SyntheticReward reward(dom);
    OracleDetector oracle;
    auto problems = make_synthetic_problems(dom, 4);
    auto cfg = mcts_config(seed, 20, 10, 12);

    std::int64_t vanilla_tokens = 0, pruned_tokens = 0;
    for (const auto& p : problems) {
      vanilla_tokens += mcts_search(p, gen, reward, nullptr, cfg)
                            .ledger.generated_total;
      pruned_tokens += mcts_search(p, gen, reward, &oracle, cfg)
                           .ledger.generated_total;
    }
    INFO("seed " << seed << ": pruned " << pruned_tokens << " vanilla "
                 << vanilla_tokens);
    CHECK(pruned_tokens <= vanilla_tokens);
  }
}

TEST_CASE("ledger matches the trace replay fold and prune counters") {
  auto dom = domain_config(16, 4, 0.5);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 2);
  auto cfg = mcts_config(6);

  for (const auto& p : problems) {
    auto result = mcts_search(p, gen, reward, &oracle, cfg);
    CHECK(fold_expand_tokens(result.trace) == result.ledger.generated_total);
    CHECK(result.trace.final_tokens == result.ledger.generated_total);
    CHECK(count_prune_events(result.trace) == result.ledger.pruned_candidates);

    // Depth ledger covers all charged tokens.
    std::int64_t per_depth_sum = 0;
    for (const auto& [d, t] : result.ledger.per_depth) per_depth_sum += t;
    CHECK(per_depth_sum == result.ledger.generated_total);
  }
}

TEST_CASE("trace serialization round-trips") {
  auto dom = domain_config(17, 3, 0.5);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 1);
  auto cfg = mcts_config(7, 10, 6, 8);

  auto result = mcts_search(problems[0], gen, reward, &oracle, cfg);
  std::string jsonl = trace_to_jsonl(result.trace);
  auto parsed = trace_from_jsonl(jsonl);
  CHECK(trace_to_jsonl(parsed) == jsonl);
  CHECK(parsed.problem_id == problems[0].id);
  CHECK(fold_expand_tokens(parsed) == result.ledger.generated_total);

  const std::string path = "test_trace_roundtrip.jsonl";
  emit_trace(result.trace, path);
  auto loaded = load_trace(path);
  CHECK(trace_to_jsonl(loaded) == jsonl);
  std::remove(path.c_str());
}

TEST_CASE("depth limit zero yields a bare terminal trace") {
  auto dom = domain_config(18, 3, 0.0);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  auto problems = make_synthetic_problems(dom, 1);
  auto cfg = mcts_config(8, 5, 5, 0);

  auto result = mcts_search(problems[0], gen, reward, nullptr, cfg);
  REQUIRE(result.trace.events.size() == 1);
  CHECK(std::holds_alternative<TerminalEvent>(result.trace.events[0]));
  CHECK(result.ledger.generated_total == 0);
  CHECK(result.answer.empty());

  SearchConfig sbs_cfg = cfg;
  sbs_cfg.algorithm = Algorithm::SBS;
  sbs_cfg.beam_size = 3;
  auto sbs_result = sbs_search(problems[0], gen, reward, nullptr, sbs_cfg);
  REQUIRE(sbs_result.trace.events.size() == 1);
  CHECK(std::holds_alternative<TerminalEvent>(sbs_result.trace.events[0]));
}

namespace {

/// Scripted generator: serves a fixed pool at the root, then terminals.
class ScriptedGenerator : public GeneratorContract {
public:
  explicit ScriptedGenerator(std::vector<CandidateStep> pool)
      : pool_(std::move(pool)) {}

  std::vector<CandidateStep> expand(const ProblemInstance&,
                                    const std::vector<CandidateStep>& path,
                                    int n, double, int) override {
    if (path.empty()) {
      auto out = pool_;
      if (static_cast<int>(out.size()) > n) out.resize(static_cast<std::size_t>(n));
      return out;
    }
    CandidateStep t;
    t.text = "The final answer is 100001.";
    t.gen_tokens = 5;
    t.score = 0.5;
    t.terminal = true;
    return {t};
  }

private:
  std::vector<CandidateStep> pool_;
};

class ScriptedReward : public RewardContract {
public:
  double score(const ProblemInstance&,
               const std::vector<CandidateStep>& path) override {
    if (path.empty()) return 0.5;
    auto key = adapters::canonical_key(path.back().text);
    if (!key) return 0.0;
    // Lower op payload scores higher: class 1001 > 1002 > 1003.
    return static_cast<double>(2000 - *key) / 1000.0;
  }
};

CandidateStep pool_step(int op, int variant, double score) {
  CandidateStep s;
  // Payload identifies the equivalence class; variant varies the surface.
  s.text = "Variant " + std::to_string(variant) + ": apply operation to get " +
           std::to_string(1000 + op) + ".";
  s.gen_tokens = 10;
  s.score = score;
  return s;
}

}  // namespace

TEST_CASE("SBS pruning keeps one member of each class before top-k") {
  // Pool of 6 in 3 classes; beam 3 must cover all classes when pruned.
  std::vector<CandidateStep> pool = {
      pool_step(1, 0, 0.9), pool_step(1, 1, 0.8), pool_step(2, 0, 0.7),
      pool_step(2, 1, 0.6), pool_step(3, 0, 0.5), pool_step(3, 1, 0.4)};
  ScriptedGenerator gen(pool);
  ScriptedReward reward;
  OracleDetector oracle;

  ProblemInstance p;
  p.id = "pool";
  p.statement = "pool";
  p.reference_answer = "100001";

  SearchConfig cfg;
  cfg.algorithm = Algorithm::SBS;
  cfg.beam_size = 3;
  cfg.tree_max_width = 6;
  cfg.tree_max_depth = 1;
  cfg.seed = 1;

  auto pruned = sbs_search(p, gen, reward, &oracle, cfg);
  // Survivors: exactly one node per class.
  std::set<std::int64_t> classes;
  for (const auto& event : pruned.trace.events) {
    if (const auto* s = std::get_if<SelectEvent>(&event)) {
      for (NodeId id : s->nodes) {
        for (const auto& e2 : pruned.trace.events) {
          if (const auto* ex = std::get_if<ExpandEvent>(&e2)) {
            for (const auto& c : ex->candidates) {
              if (c.node_id == id)
                classes.insert(*adapters::canonical_key(c.text));
            }
          }
        }
      }
    }
  }
  CHECK(classes.size() == 3);

  // Vanilla keeps the two highest-scoring members of class 1.
  auto vanilla = sbs_search(p, gen, reward, nullptr, cfg);
  std::multiset<std::int64_t> vanilla_classes;
  for (const auto& event : vanilla.trace.events) {
    if (const auto* s = std::get_if<SelectEvent>(&event)) {
      if (s->round != 0) continue;
      for (NodeId id : s->nodes) {
        for (const auto& e2 : vanilla.trace.events) {
          if (const auto* ex = std::get_if<ExpandEvent>(&e2)) {
            for (const auto& c : ex->candidates) {
              if (c.node_id == id)
                vanilla_classes.insert(*adapters::canonical_key(c.text));
            }
          }
        }
      }
    }
  }
  CHECK(vanilla_classes.count(1001) == 2);
}

TEST_CASE("SBS with a large beam only deduplicates, never drops classes") {
  auto dom = domain_config(19, 3, 0.6);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  OracleDetector oracle;
  auto problems = make_synthetic_problems(dom, 2);

  SearchConfig cfg;
  cfg.algorithm = Algorithm::SBS;
  cfg.beam_size = 10;
  cfg.tree_max_width = 10;
  cfg.tree_max_depth = 6;
  cfg.seed = 2;

  for (const auto& p : problems) {
    auto result = sbs_search(p, gen, reward, &oracle, cfg);
    // No two surviving siblings in any round are detector-equivalent.
    auto audit = test_audit::audit_trace(result.trace, &oracle,
                                         cfg.tree_max_width, cfg.tree_max_depth);
    for (const auto& f : audit.failures) MESSAGE(f);
    CHECK(audit.ok);
  }
}

TEST_CASE("SBS solves the synthetic domain") {
  auto dom = domain_config(20, 4, 0.4);
  SyntheticGenerator gen(dom);
  SyntheticReward reward(dom);
  auto problems = make_synthetic_problems(dom, 5);

  SearchConfig cfg;
  cfg.algorithm = Algorithm::SBS;
  cfg.beam_size = 3;
  cfg.tree_max_width = 10;
  cfg.tree_max_depth = 8;
  cfg.seed = 3;

  auto checker = synthetic_answer_checker();
  int solved = 0;
  for (const auto& p : problems) {
    auto result = sbs_search(p, gen, reward, nullptr, cfg);
    if (!result.answer.empty() && checker(result.answer, *p.reference_answer))
      ++solved;
  }
  CHECK(solved >= 4);
}
