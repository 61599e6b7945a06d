#pragma once

#include "stepprune/errors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/**
 * Lightweight pair-equivalence classifier: hashed n-gram features over a
 * text pair, logistic regression fit by seeded SGD, and the EM loop that
 * strips high-confidence equivalent sub-sentences out of negative samples
 * between retraining rounds.
 */

namespace stepprune::classifier {

// ============================================================================
// Labels
// ============================================================================

struct LabeledPair {
  std::string sentence1;
  std::string sentence2;
  int level = 0;  // 0..4
  std::optional<std::string> reasoning;
};

enum class BinaryLabel { POSITIVE, NEGATIVE, DISCARD };

/// 4,3 -> POSITIVE; 1,0 -> NEGATIVE; 2 -> DISCARD.
BinaryLabel binarize_label(int level);

// ============================================================================
// Sentence splitting
// ============================================================================

struct SplitResult {
  std::vector<std::string> sentences;
  bool used_fallback = false;  // unbalanced math delimiters
  std::string diagnostic;
};

/// Splits on sentence terminators (., !, ?, newline) without ever splitting
/// inside \[...\], \(...\) or $...$ spans. Unbalanced delimiters fall back
/// to newline-only splitting with a diagnostic.
SplitResult split_sentences(std::string_view text);

// ============================================================================
// Features
// ============================================================================

struct FeatureConfig {
  int char_ngram_min = 2;
  int char_ngram_max = 4;
  int word_ngram_min = 1;
  int word_ngram_max = 2;
  std::uint32_t hash_dim = 1u << 18;
  // Pair combination blocks; the default set is symmetric in (a, b).
  bool use_union = true;
  bool use_intersection = true;
  bool use_symmetric_diff = true;
  bool use_ratio_bucket = true;

  void validate() const;
};

struct SparseFeature {
  std::uint32_t index;
  double value;
};

/// Sorted by index; L2-normalized. The bias feature is implicit.
using SparseVec = std::vector<SparseFeature>;

SparseVec featurize(std::string_view a, std::string_view b,
                    const FeatureConfig& config);

// ============================================================================
// Model
// ============================================================================

constexpr std::uint32_t kModelFormatVersion = 1;

struct ClassifierModel {
  std::vector<double> theta;  // hash_dim weights + trailing bias
  FeatureConfig feature_config;
  double decision_threshold = 0.5;
  std::uint32_t version = kModelFormatVersion;

  double predict_proba(std::string_view a, std::string_view b) const;
  double predict_logit(const SparseVec& features) const;
};

// ============================================================================
// Training
// ============================================================================

struct TrainConfig {
  FeatureConfig features;
  double learning_rate = 0.1;  // decayed as lr / sqrt(t)
  int epochs = 3;
  double l2 = 1e-6;
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<double> epoch_losses;  // mean cross-entropy after each epoch
};

/// Fits a logistic model by seeded SGD over the binarized pairs (DISCARD
/// levels dropped). Deterministic given the seed. Throws TrainingError with
/// class counts when only one class is present.
TrainResult train(const std::vector<LabeledPair>& data,
                  const TrainConfig& config);

// Loss/gradient primitives, exposed for gradient checking.
double logistic_loss(const std::vector<double>& theta, const SparseVec& x,
                     int y, double l2);
SparseVec logistic_gradient(const std::vector<double>& theta, const SparseVec& x,
                            int y, double l2);

// ============================================================================
// Evaluation
// ============================================================================

struct EvalMetrics {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall/F1 of the POSITIVE class at the model's decision
/// threshold. DISCARD-level records are skipped.
EvalMetrics evaluate(const ClassifierModel& model,
                     const std::vector<LabeledPair>& data);

// ============================================================================
// EM training
// ============================================================================

struct EMConfig {
  double tau = 0.95;         // E-step high-confidence threshold
  int max_iterations = 5;    // total train calls, including iteration 0
  double min_f1_gain = 0.002;
  TrainConfig train_config;

  void validate() const;
};

struct RefineResult {
  std::vector<LabeledPair> data;
  std::int64_t dropped_samples = 0;
  std::int64_t removed_sentences = 0;
};

/// E-step: in every NEGATIVE multi-sentence sample, any cross-product
/// sub-sentence pair scoring above tau is removed from both sides. Samples
/// reduced to an empty side are dropped. POSITIVE samples pass through.
RefineResult e_step_refine(const std::vector<LabeledPair>& data,
                           const ClassifierModel& model, double tau);

struct EMIteration {
  int iteration = 0;
  std::int64_t train_size = 0;
  std::int64_t dropped_samples = 0;
  std::int64_t removed_sentences = 0;
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_f1 = 0.0;
};

struct EMResult {
  ClassifierModel model;  // best validation F1 across iterations
  std::vector<EMIteration> history;
  int best_iteration = 0;
};

/// Iteration 0 trains on the raw data; each later iteration refines with the
/// previous model and retrains. Stops at max_iterations or when the
/// validation F1 gain falls below min_f1_gain.
EMResult em_train(const std::vector<LabeledPair>& data,
                  const std::vector<LabeledPair>& val_data,
                  const EMConfig& config);

// ============================================================================
// Model file I/O
// ============================================================================

/// Versioned binary container: magic, format version, feature-config block,
/// little-endian 64-bit-float weights. Round-trips bit-identically.
void save_model(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model(const std::string& path);

}  // namespace stepprune::classifier
