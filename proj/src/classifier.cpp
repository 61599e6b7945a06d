#include "stepprune/classifier.hpp"
#include "stepprune/textdist.hpp"
#include "stepprune/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace stepprune::classifier {

BinaryLabel binarize_label(int level) {
  switch (level) {
    case 4:
    case 3:
      return BinaryLabel::POSITIVE;
    case 2:
      return BinaryLabel::DISCARD;
    case 1:
    case 0:
      return BinaryLabel::NEGATIVE;
    default:
      throw ContractViolation("binarize_label: level " + std::to_string(level) +
                              " outside [0,4]");
  }
}

// ----------------------------------------------------------------------------
// Sentence splitting
// ----------------------------------------------------------------------------

namespace {

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

SplitResult newline_only_split(std::string_view text, std::string diagnostic) {
  SplitResult out;
  out.used_fallback = true;
  out.diagnostic = std::move(diagnostic);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string part = trim(text.substr(start, i - start));
      if (!part.empty()) out.sentences.push_back(std::move(part));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

SplitResult split_sentences(std::string_view text) {
  SplitResult out;
  std::string cur;
  std::vector<char> stack;  // 'B' = \[ \], 'P' = \( \), '$'
  bool balanced = true;

  auto flush = [&] {
    std::string t = trim(cur);
    if (!t.empty()) out.sentences.push_back(std::move(t));
    cur.clear();
  };

  std::size_t i = 0;
  while (i < text.size() && balanced) {
    char c = text[i];
    if (c == '\\' && i + 1 < text.size()) {
      char d = text[i + 1];
      if (d == '[') {
        stack.push_back('B');
      } else if (d == ']') {
        if (!stack.empty() && stack.back() == 'B') stack.pop_back();
        else { balanced = false; break; }
      } else if (d == '(') {
        stack.push_back('P');
      } else if (d == ')') {
        if (!stack.empty() && stack.back() == 'P') stack.pop_back();
        else { balanced = false; break; }
      }
      cur += c;
      cur += d;
      i += 2;
      continue;
    }
    if (c == '$') {
      if (!stack.empty() && stack.back() == '$') stack.pop_back();
      else if (stack.empty()) stack.push_back('$');
      // inside \[ \] or \( \) a dollar sign is literal
      cur += c;
      ++i;
      continue;
    }
    if (stack.empty()) {
      if (is_terminator(c)) {
        cur += c;
        ++i;
        while (i < text.size() && is_terminator(text[i])) {
          cur += text[i];
          ++i;
        }
        flush();
        continue;
      }
      if (c == '\n') {
        flush();
        ++i;
        continue;
      }
    }
    cur += c;
    ++i;
  }

  if (!balanced || !stack.empty()) {
    return newline_only_split(
        text, "unbalanced math delimiters; fell back to newline-only splitting");
  }
  flush();
  return out;
}

// ----------------------------------------------------------------------------
// Features
// ----------------------------------------------------------------------------

void FeatureConfig::validate() const {
  if (char_ngram_min < 1 || char_ngram_min > char_ngram_max)
    throw ContractViolation("FeatureConfig: bad char n-gram range");
  if (word_ngram_min < 1 || word_ngram_min > word_ngram_max)
    throw ContractViolation("FeatureConfig: bad word n-gram range");
  if (hash_dim < (1u << 10) || (hash_dim & (hash_dim - 1)) != 0)
    throw ContractViolation("FeatureConfig: hash_dim must be a power of two >= 2^10");
}

namespace {

constexpr std::uint64_t kSaltUnion = 0x55AA11EE22DD33CCULL;
constexpr std::uint64_t kSaltIntersection = 0x1234FEDCBA987654ULL;
constexpr std::uint64_t kSaltSymmetricDiff = 0x0F1E2D3C4B5A6978ULL;
constexpr std::uint64_t kSaltRatioBucket = 0xC0FFEE0DDBA11CEDULL;

std::uint64_t hash_scalar_window(const std::u32string& s, std::size_t pos,
                                 std::size_t n, std::uint64_t salt) {
  std::uint64_t h = salt;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t cp = static_cast<std::uint32_t>(s[pos + k]);
    for (int b = 0; b < 4; ++b) {
      h ^= (cp >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

/// Multiset of hashed char and word n-grams for one text.
std::map<std::uint64_t, double> gram_counts(std::string_view text,
                                            const FeatureConfig& cfg) {
  std::map<std::uint64_t, double> counts;

  std::u32string scalars = utf8_decode(text);
  for (int n = cfg.char_ngram_min; n <= cfg.char_ngram_max; ++n) {
    if (scalars.size() < static_cast<std::size_t>(n)) break;
    std::uint64_t salt = fnv1a64("c") * static_cast<std::uint64_t>(n + 1);
    for (std::size_t pos = 0; pos + n <= scalars.size(); ++pos) {
      counts[hash_scalar_window(scalars, pos, n, salt)] += 1.0;
    }
  }

  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  for (int n = cfg.word_ngram_min; n <= cfg.word_ngram_max; ++n) {
    if (words.size() < static_cast<std::size_t>(n)) break;
    std::uint64_t salt = fnv1a64("w") * static_cast<std::uint64_t>(n + 1);
    for (std::size_t pos = 0; pos + n <= words.size(); ++pos) {
      std::uint64_t h = salt;
      for (int k = 0; k < n; ++k) {
        h = fnv1a64(words[pos + k], h);
        h = fnv1a64("\x1f", h);
      }
      counts[h] += 1.0;
    }
  }
  return counts;
}

}  // namespace

SparseVec featurize(std::string_view a, std::string_view b,
                    const FeatureConfig& config) {
  config.validate();
  auto ca = gram_counts(a, config);
  auto cb = gram_counts(b, config);

  std::map<std::uint32_t, double> acc;
  auto bucket_of = [&](std::uint64_t gram_hash, std::uint64_t salt) {
    return static_cast<std::uint32_t>(splitmix64(gram_hash ^ salt) %
                                      config.hash_dim);
  };

  auto ia = ca.begin();
  auto ib = cb.begin();
  while (ia != ca.end() || ib != cb.end()) {
    std::uint64_t key;
    double va = 0.0, vb = 0.0;
    if (ib == cb.end() || (ia != ca.end() && ia->first < ib->first)) {
      key = ia->first;
      va = ia->second;
      ++ia;
    } else if (ia == ca.end() || ib->first < ia->first) {
      key = ib->first;
      vb = ib->second;
      ++ib;
    } else {
      key = ia->first;
      va = ia->second;
      vb = ib->second;
      ++ia;
      ++ib;
    }
    if (config.use_union) acc[bucket_of(key, kSaltUnion)] += std::max(va, vb);
    if (config.use_intersection) {
      double v = std::min(va, vb);
      if (v > 0.0) acc[bucket_of(key, kSaltIntersection)] += v;
    }
    if (config.use_symmetric_diff) {
      double v = std::abs(va - vb);
      if (v > 0.0) acc[bucket_of(key, kSaltSymmetricDiff)] += v;
    }
  }

  double norm_sq = 0.0;
  for (const auto& [idx, v] : acc) norm_sq += v * v;
  double inv_norm = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;

  // Gram blocks are L2-normalized; the ratio bucket rides along as a
  // unit-value indicator so it is not drowned by gram mass.
  std::map<std::uint32_t, double> scaled;
  for (const auto& [idx, v] : acc) {
    if (v != 0.0) scaled[idx] = v * inv_norm;
  }
  if (config.use_ratio_bucket) {
    double ratio = textdist::levenshtein_ratio(a, b);
    auto bucket = static_cast<std::uint64_t>(
        std::min(9.0, std::floor(ratio * 10.0)));
    scaled[bucket_of(bucket + 1, kSaltRatioBucket)] += 1.0;
  }

  SparseVec out;
  out.reserve(scaled.size());
  for (const auto& [idx, v] : scaled) {
    if (v != 0.0) out.push_back({idx, v});
  }
  return out;
}

// ----------------------------------------------------------------------------
// Model
// ----------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
  if (z > 35.0) z = 35.0;
  if (z < -35.0) z = -35.0;
  if (z >= 0.0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double ClassifierModel::predict_logit(const SparseVec& features) const {
  double z = theta.back();  // bias
  for (const auto& f : features) z += theta[f.index] * f.value;
  return z;
}

double ClassifierModel::predict_proba(std::string_view a,
                                      std::string_view b) const {
  return sigmoid(predict_logit(featurize(a, b, feature_config)));
}

// ----------------------------------------------------------------------------
// Loss / gradient
// ----------------------------------------------------------------------------

// The l2 term covers the features active in x plus the bias, matching the
// sparse SGD update.
double logistic_loss(const std::vector<double>& theta, const SparseVec& x,
                     int y, double l2) {
  double z = theta.back();
  double reg = theta.back() * theta.back();
  for (const auto& f : x) {
    z += theta[f.index] * f.value;
    reg += theta[f.index] * theta[f.index];
  }
  double p = sigmoid(z);
  p = std::min(1.0 - 1e-15, std::max(1e-15, p));
  double ce = -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
  return ce + 0.5 * l2 * reg;
}

SparseVec logistic_gradient(const std::vector<double>& theta, const SparseVec& x,
                            int y, double l2) {
  double z = theta.back();
  for (const auto& f : x) z += theta[f.index] * f.value;
  double g = sigmoid(z) - y;

  SparseVec grad;
  grad.reserve(x.size() + 1);
  for (const auto& f : x) {
    grad.push_back({f.index, g * f.value + l2 * theta[f.index]});
  }
  grad.push_back({static_cast<std::uint32_t>(theta.size() - 1),
                  g + l2 * theta.back()});
  return grad;
}

// ----------------------------------------------------------------------------
// Training
// ----------------------------------------------------------------------------

TrainResult train(const std::vector<LabeledPair>& data,
                  const TrainConfig& config) {
  config.features.validate();
  if (config.epochs < 1) throw ContractViolation("train: epochs < 1");
  if (config.learning_rate <= 0) throw ContractViolation("train: bad learning_rate");

  struct Sample {
    SparseVec x;
    int y;
  };
  std::vector<Sample> samples;
  std::int64_t positives = 0, negatives = 0;
  for (const auto& pair : data) {
    BinaryLabel label = binarize_label(pair.level);
    if (label == BinaryLabel::DISCARD) continue;
    int y = label == BinaryLabel::POSITIVE ? 1 : 0;
    (y ? positives : negatives) += 1;
    samples.push_back({featurize(pair.sentence1, pair.sentence2, config.features), y});
  }
  if (positives == 0 || negatives == 0) {
    throw TrainingError("train: single-class data (positives=" +
                        std::to_string(positives) +
                        ", negatives=" + std::to_string(negatives) + ")");
  }

  TrainResult result;
  result.model.feature_config = config.features;
  result.model.decision_threshold = config.decision_threshold;
  result.model.theta.assign(config.features.hash_dim + 1, 0.0);
  auto& theta = result.model.theta;
  const std::uint32_t bias_idx = config.features.hash_dim;

  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // 1/sqrt(t) decay over epochs.
    double lr = config.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
    rng.shuffle(order);
    for (std::size_t i : order) {
      const Sample& s = samples[i];
      double z = theta[bias_idx];
      for (const auto& f : s.x) z += theta[f.index] * f.value;
      double g = sigmoid(z) - s.y;
      for (const auto& f : s.x) {
        theta[f.index] -= lr * (g * f.value + config.l2 * theta[f.index]);
      }
      theta[bias_idx] -= lr * (g + config.l2 * theta[bias_idx]);
    }

    double loss = 0.0;
    for (const auto& s : samples) {
      double z = theta[bias_idx];
      for (const auto& f : s.x) z += theta[f.index] * f.value;
      double p = std::min(1.0 - 1e-15, std::max(1e-15, sigmoid(z)));
      loss += -(s.y * std::log(p) + (1 - s.y) * std::log(1.0 - p));
    }
    result.epoch_losses.push_back(loss / static_cast<double>(samples.size()));
  }
  return result;
}

// ----------------------------------------------------------------------------
// Evaluation
// ----------------------------------------------------------------------------

EvalMetrics evaluate(const ClassifierModel& model,
                     const std::vector<LabeledPair>& data) {
  EvalMetrics m;
  for (const auto& pair : data) {
    BinaryLabel label = binarize_label(pair.level);
    if (label == BinaryLabel::DISCARD) continue;
    bool truth = label == BinaryLabel::POSITIVE;
    bool pred = model.predict_proba(pair.sentence1, pair.sentence2) >=
                model.decision_threshold;
    if (pred && truth) ++m.tp;
    else if (pred && !truth) ++m.fp;
    else if (!pred && truth) ++m.fn;
    else ++m.tn;
  }
  m.precision = (m.tp + m.fp) > 0
                    ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                    : 0.0;
  m.recall = (m.tp + m.fn) > 0
                 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                 : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

}  // namespace stepprune::classifier
