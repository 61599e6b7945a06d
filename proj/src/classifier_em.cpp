#include "stepprune/classifier.hpp"

#include <cmath>
#include <string>

namespace stepprune::classifier {

void EMConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0))
    throw ContractViolation("EMConfig: tau must lie in (0,1)");
  if (max_iterations < 1)
    throw ContractViolation("EMConfig: max_iterations < 1");
  train_config.features.validate();
}

RefineResult e_step_refine(const std::vector<LabeledPair>& data,
                           const ClassifierModel& model, double tau) {
  RefineResult out;
  out.data.reserve(data.size());

  for (const auto& sample : data) {
    if (binarize_label(sample.level) != BinaryLabel::NEGATIVE) {
      out.data.push_back(sample);
      continue;
    }
    auto s1 = split_sentences(sample.sentence1).sentences;
    auto s2 = split_sentences(sample.sentence2).sentences;
    if (s1.size() <= 1 && s2.size() <= 1) {
      out.data.push_back(sample);
      continue;
    }

    // Every cross-product sub-sentence pair above tau knocks the sentence
    // out of both sides.
    std::vector<bool> rm1(s1.size(), false), rm2(s2.size(), false);
    for (std::size_t i = 0; i < s1.size(); ++i) {
      for (std::size_t j = 0; j < s2.size(); ++j) {
        if (model.predict_proba(s1[i], s2[j]) > tau) {
          rm1[i] = true;
          rm2[j] = true;
        }
      }
    }

    auto rebuild = [&](const std::vector<std::string>& parts,
                       const std::vector<bool>& removed) {
      std::string joined;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        if (removed[k]) {
          ++out.removed_sentences;
          continue;
        }
        if (!joined.empty()) joined += ' ';
        joined += parts[k];
      }
      return joined;
    };

    std::string kept1 = rebuild(s1, rm1);
    std::string kept2 = rebuild(s2, rm2);
    if (kept1.empty() || kept2.empty()) {
      ++out.dropped_samples;
      continue;
    }
    LabeledPair refined = sample;
    refined.sentence1 = std::move(kept1);
    refined.sentence2 = std::move(kept2);
    out.data.push_back(std::move(refined));
  }
  return out;
}

EMResult em_train(const std::vector<LabeledPair>& data,
                  const std::vector<LabeledPair>& val_data,
                  const EMConfig& config) {
  config.validate();
  if (data.empty()) throw TrainingError("em_train: empty training set");
  if (val_data.empty()) throw TrainingError("em_train: empty validation set");

  EMResult result;
  double best_f1 = -1.0;
  double prev_f1 = 0.0;

  std::vector<LabeledPair> current = data;
  ClassifierModel last_model;

  for (int it = 0; it < config.max_iterations; ++it) {
    std::int64_t dropped = 0, removed = 0;
    if (it > 0) {
      RefineResult refined = e_step_refine(current, last_model, config.tau);
      dropped = refined.dropped_samples;
      removed = refined.removed_sentences;
      current = std::move(refined.data);
      if (current.empty()) {
        throw TrainingError("em_train: E-step emptied the training set at iteration " +
                            std::to_string(it));
      }
    }

    TrainResult trained = train(current, config.train_config);
    EvalMetrics metrics = evaluate(trained.model, val_data);

    EMIteration row;
    row.iteration = it;
    row.train_size = static_cast<std::int64_t>(current.size());
    row.dropped_samples = dropped;
    row.removed_sentences = removed;
    row.val_precision = metrics.precision;
    row.val_recall = metrics.recall;
    row.val_f1 = metrics.f1;
    result.history.push_back(row);

    if (metrics.f1 > best_f1) {
      best_f1 = metrics.f1;
      result.model = trained.model;
      result.best_iteration = it;
    }
    if (it > 0 && (metrics.f1 - prev_f1) < config.min_f1_gain) break;
    prev_f1 = metrics.f1;
    last_model = std::move(trained.model);
  }
  return result;
}

}  // namespace stepprune::classifier
