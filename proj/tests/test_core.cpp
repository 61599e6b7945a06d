#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stepprune/core.hpp"
#include "stepprune/util.hpp"

#include <algorithm>

using namespace stepprune;

TEST_CASE("ledger add and additivity") {
  TokenLedger ledger;
  ledger.add(0, 0);
  CHECK(ledger.generated_total == 0);

  ledger.add(1, 128);
  ledger.add(2, 72);
  CHECK(ledger.generated_total == 200);
  CHECK(ledger.per_depth.at(1) == 128);
  CHECK(ledger.per_depth.at(2) == 72);

  CHECK_THROWS_AS(ledger.add(1, -5), ContractViolation);
}

TEST_CASE("ledger additivity over random interleavings") {
  Rng rng(99);
  TokenLedger ledger;
  std::int64_t independent_sum = 0;
  std::int64_t per_depth_sum = 0;
  for (int i = 0; i < 500; ++i) {
    int depth = static_cast<int>(rng.uniform_index(12));
    auto tokens = static_cast<std::int64_t>(rng.uniform_index(300));
    ledger.add(depth, tokens);
    independent_sum += tokens;
  }
  CHECK(ledger.generated_total == independent_sum);
  for (const auto& [d, t] : ledger.per_depth) per_depth_sum += t;
  CHECK(per_depth_sum == ledger.generated_total);
}

TEST_CASE("ledger merge is associative") {
  auto make = [](std::uint64_t seed) {
    Rng rng(seed);
    TokenLedger l;
    for (int i = 0; i < 40; ++i)
      l.add(static_cast<int>(rng.uniform_index(6)),
            static_cast<std::int64_t>(rng.uniform_index(100)));
    l.pruned_candidates = static_cast<std::int64_t>(rng.uniform_index(10));
    return l;
  };
  TokenLedger a = make(1), b = make(2), c = make(3);

  TokenLedger ab = a;
  ab.merge(b);
  TokenLedger ab_c = ab;
  ab_c.merge(c);

  TokenLedger bc = b;
  bc.merge(c);
  TokenLedger a_bc = a;
  a_bc.merge(bc);

  CHECK(ab_c.generated_total == a_bc.generated_total);
  CHECK(ab_c.pruned_candidates == a_bc.pruned_candidates);
  CHECK(ab_c.per_depth == a_bc.per_depth);
}

TEST_CASE("compute_ratio matches the published table values") {
  CHECK(format_percent(compute_ratio(74194, 106773)) == "69.49");
  CHECK(format_percent(compute_ratio(18071, 34826)) == "51.89");
}

TEST_CASE("compute_ratio identity and monotonicity") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto x = static_cast<std::int64_t>(1 + rng.uniform_index(1000000));
    CHECK(format_percent(compute_ratio(x, x)) == "100.00");
  }
  CHECK(compute_ratio(10, 100) < compute_ratio(20, 100));
  CHECK_THROWS_AS(compute_ratio(5, 0), ContractViolation);
}

namespace {

ProblemInstance make_problem(const std::string& id, const std::string& ref) {
  ProblemInstance p;
  p.id = id;
  p.statement = "statement";
  p.reference_answer = ref;
  return p;
}

}  // namespace

TEST_CASE("score_accuracy bounds and permutation invariance") {
  std::vector<ProblemResult> results;
  for (int i = 0; i < 10; ++i) {
    results.push_back({make_problem("p" + std::to_string(i), "42"),
                       i < 7 ? "42" : "13", 0});
  }
  auto acc = score_accuracy(results, normalized_equals);
  CHECK(acc.accuracy == doctest::Approx(70.0));
  CHECK(acc.solved == 7);
  CHECK(acc.total == 10);

  std::reverse(results.begin(), results.end());
  auto acc2 = score_accuracy(results, normalized_equals);
  CHECK(acc2.accuracy == doctest::Approx(acc.accuracy));

  std::vector<ProblemResult> all_correct(10, {make_problem("p", "x"), "x", 0});
  CHECK(score_accuracy(all_correct, normalized_equals).accuracy ==
        doctest::Approx(100.0));
  std::vector<ProblemResult> none_correct(10, {make_problem("p", "x"), "y", 0});
  CHECK(score_accuracy(none_correct, normalized_equals).accuracy ==
        doctest::Approx(0.0));
}

TEST_CASE("score_accuracy missing references") {
  ProblemInstance no_ref;
  no_ref.id = "p-noref";
  no_ref.statement = "s";

  std::vector<ProblemResult> results = {{make_problem("p0", "42"), "42", 0},
                                        {no_ref, "42", 0}};
  auto strict = score_accuracy(results, normalized_equals, true);
  CHECK(strict.total == 2);  // stays in the denominator as unsolved
  CHECK(strict.solved == 1);
  CHECK(strict.item_errors.size() == 1);

  auto lenient = score_accuracy(results, normalized_equals, false);
  CHECK(lenient.total == 1);
  CHECK(lenient.accuracy == doctest::Approx(100.0));
  CHECK(lenient.item_errors.size() == 1);
}

TEST_CASE("normalized answer equality") {
  CHECK(normalized_equals("  42. ", "42"));
  CHECK(normalized_equals("42!?", "42"));
  CHECK(normalized_equals("x = 3", "x = 3."));
  CHECK_FALSE(normalized_equals("42", "43"));
  CHECK_FALSE(normalized_equals("", "43"));
}

TEST_CASE("bench report JSON and table") {
  BenchReport vanilla;
  vanilla.method_name = "vanilla";
  vanilla.accuracy = 83.40;
  vanilla.tokens = 106773;
  vanilla.ratio = 100.0;
  vanilla.baseline_name = "vanilla";
  vanilla.per_problem.push_back({"p0", true, 1200});

  std::string json = vanilla.to_json();
  CHECK(json.find("\"method\"") != std::string::npos);
  CHECK(json.find("\"acc\"") != std::string::npos);
  CHECK(json.find("\"tokens\"") != std::string::npos);
  CHECK(json.find("\"ratio\"") != std::string::npos);
  CHECK(json.find("\"per_problem\"") != std::string::npos);
  CHECK(json.find("generated_only") != std::string::npos);

  BenchReport pruned = vanilla;
  pruned.method_name = "pruned";
  pruned.tokens = 74194;
  pruned.ratio = compute_ratio(74194, 106773);

  std::string table = render_report_table({vanilla, pruned});
  CHECK(table.find("Acc") != std::string::npos);
  CHECK(table.find("Tokens") != std::string::npos);
  CHECK(table.find("Ratio") != std::string::npos);
  CHECK(table.find("100.00%") != std::string::npos);
  CHECK(table.find("69.49%") != std::string::npos);
}

TEST_CASE("config validation") {
  SearchConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.simulations == 20);
  CHECK(config.c_puct == doctest::Approx(1.25));
  CHECK(config.tree_max_width == 10);
  CHECK(config.tree_max_depth == 50);
  CHECK(config.temperature == doctest::Approx(0.7));
  CHECK(config.max_new_tokens == 1024);
  CHECK(config.beam_size == 3);
  CHECK(config.ratio_threshold == doctest::Approx(0.75));

  SearchConfig bad = config;
  bad.beam_size = 20;  // > tree_max_width
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}
