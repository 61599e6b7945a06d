#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stepprune/classifier.hpp"
#include "support/corpus.hpp"

#include <cmath>

using namespace stepprune;
using namespace stepprune::classifier;

namespace {

TrainConfig em_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.features.hash_dim = 1u << 14;
  cfg.epochs = 6;
  cfg.learning_rate = 0.4;
  cfg.seed = seed;
  return cfg;
}

ClassifierModel confident_model(std::uint64_t seed) {
  test_corpus::CorpusConfig cfg;
  cfg.size = 1200;
  cfg.seed = seed;
  return train(test_corpus::make_pair_corpus(cfg), em_train_config(seed)).model;
}

}  // namespace

TEST_CASE("e-step leaves samples without confident sub-pairs unchanged") {
  auto model = confident_model(41);
  std::vector<LabeledPair> data = {
      {"We scale the quantity and record 5000. We shift the quantity and record 5037.",
       "We invert the quantity and record 5074. We negate the quantity and record 5111.",
       0, std::nullopt},
      {"single negative.", "other negative.", 1, std::nullopt},
  };
  auto refined = e_step_refine(data, model, 0.999999);
  REQUIRE(refined.data.size() == 2);
  CHECK(refined.data[0].sentence1 == data[0].sentence1);
  CHECK(refined.data[0].sentence2 == data[0].sentence2);
  CHECK(refined.dropped_samples == 0);
}

TEST_CASE("e-step removes a planted verbatim sentence from both sides") {
  auto model = confident_model(42);
  const std::string planted = test_corpus::canonical_sentence(3, 0);
  REQUIRE(model.predict_proba(planted, planted) > 0.95);

  const std::string core1 = test_corpus::canonical_sentence(10, 1);
  const std::string core2 = test_corpus::canonical_sentence(25, 2);
  std::vector<LabeledPair> data = {
      {core1 + " " + planted, core2 + " " + planted, 0, std::nullopt}};

  auto refined = e_step_refine(data, model, 0.95);
  REQUIRE(refined.data.size() == 1);
  CHECK(refined.data[0].sentence1 == core1);
  CHECK(refined.data[0].sentence2 == core2);
  CHECK(refined.removed_sentences == 2);
}

TEST_CASE("e-step drops samples whose sides empty out") {
  auto model = confident_model(43);
  const std::string a = test_corpus::canonical_sentence(5, 0);
  const std::string b = test_corpus::canonical_sentence(9, 1);
  // Both sides identical: every sentence pairs confidently with its twin.
  std::vector<LabeledPair> data = {{a + " " + b, a + " " + b, 0, std::nullopt}};

  auto refined = e_step_refine(data, model, 0.95);
  CHECK(refined.data.empty());
  CHECK(refined.dropped_samples == 1);
}

TEST_CASE("POSITIVE samples pass through the e-step untouched") {
  auto model = confident_model(44);
  const std::string s = test_corpus::canonical_sentence(2, 0);
  std::vector<LabeledPair> data = {{s + " " + s, s + " " + s, 4, std::nullopt}};
  auto refined = e_step_refine(data, model, 0.5);
  REQUIRE(refined.data.size() == 1);
  CHECK(refined.data[0].sentence1 == data[0].sentence1);
}

TEST_CASE("em_train with an unexceedable tau reproduces plain training") {
  test_corpus::CorpusConfig cfg;
  cfg.size = 600;
  cfg.pollution_rate = 0.3;
  cfg.seed = 50;
  auto data = test_corpus::make_pair_corpus(cfg);
  cfg.seed = 51;
  cfg.pollution_rate = 0.0;
  auto val = test_corpus::make_pair_corpus(cfg);

  EMConfig em;
  em.train_config = em_train_config(7);
  em.tau = std::nextafter(1.0, 0.0);  // nothing exceeds it
  em.max_iterations = 3;

  auto em_result = em_train(data, val, em);
  auto plain = train(data, em.train_config);
  auto plain_f1 = evaluate(plain.model, val).f1;

  CHECK(em_result.history[0].val_f1 == doctest::Approx(plain_f1));
  CHECK(evaluate(em_result.model, val).f1 == doctest::Approx(plain_f1));
}

TEST_CASE("max_iterations 1 means exactly one train call and no refinement") {
  test_corpus::CorpusConfig cfg;
  cfg.size = 300;
  cfg.seed = 52;
  auto data = test_corpus::make_pair_corpus(cfg);
  cfg.seed = 53;
  auto val = test_corpus::make_pair_corpus(cfg);

  EMConfig em;
  em.train_config = em_train_config(8);
  em.max_iterations = 1;

  auto result = em_train(data, val, em);
  REQUIRE(result.history.size() == 1);
  CHECK(result.history[0].iteration == 0);
  CHECK(result.history[0].dropped_samples == 0);
  CHECK(result.history[0].removed_sentences == 0);
  CHECK(result.best_iteration == 0);
}

TEST_CASE("em_train beats plain training on a corpus with planted equivalents") {
  // Pollution (equivalent sub-sentence pairs inside negatives) appears in
  // the training data only; validation measures the clean task.
  test_corpus::CorpusConfig train_cfg;
  train_cfg.size = 1500;
  train_cfg.pollution_rate = 0.3;
  train_cfg.seed = 9105;
  auto data = test_corpus::make_pair_corpus(train_cfg);

  test_corpus::CorpusConfig val_cfg;
  val_cfg.size = 1400;
  val_cfg.pollution_rate = 0.0;
  val_cfg.seed = 9205;
  auto val = test_corpus::make_pair_corpus(val_cfg);

  EMConfig em;
  em.train_config = em_train_config(9305);
  em.tau = 0.9;
  em.max_iterations = 4;
  em.min_f1_gain = -1.0;  // explore every iteration; best-F1 selection decides

  auto em_result = em_train(data, val, em);
  double plain_f1 = em_result.history[0].val_f1;  // iteration 0 is plain
  double best_f1 = evaluate(em_result.model, val).f1;
  INFO("plain F1 " << plain_f1 << ", EM F1 " << best_f1);
  CHECK(best_f1 > plain_f1);
}

TEST_CASE("em config validation") {
  EMConfig em;
  em.tau = 1.5;
  CHECK_THROWS_AS(em.validate(), ContractViolation);
  em = EMConfig{};
  em.max_iterations = 0;
  CHECK_THROWS_AS(em.validate(), ContractViolation);
}
