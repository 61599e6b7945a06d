#include "stepprune/synthetic.hpp"
#include "stepprune/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

namespace stepprune::adapters {

namespace {

constexpr std::array<const char*, 10> kOpWords = {
    "add",        "subtract", "multiply", "divide",    "factor",
    "expand",     "substitute", "simplify", "rearrange", "combine"};

// Surface templates keep the payload as the trailing integer so the
// canonical key stays parseable.
std::string render_op(int depth, int op, int variant, std::int64_t payload) {
  const std::string w = kOpWords[static_cast<std::size_t>(op) % kOpWords.size()];
  const std::string s = std::to_string(depth + 1);
  const std::string p = std::to_string(payload);
  switch (variant % 8) {
    case 0: return "Step " + s + ": " + w + " the terms to get " + p + ".";
    case 1: return "Step " + s + ": " + w + "ing the terms, we get " + p + ".";
    case 2: return "Step " + s + ": we " + w + " the terms and obtain " + p + ".";
    case 3: return "At step " + s + ", " + w + " the terms to get " + p + ".";
    case 4: return "Step " + s + ": " + w + " both sides to get " + p + ".";
    case 5: return "At step " + s + ", we now " + w + " the terms to get " + p + ".";
    case 6: return "Step " + s + ": " + w + " the expression, giving " + p + ".";
    default:
      return "Step " + s + ": after we " + w + " the terms, the result is " + p + ".";
  }
}

std::string render_answer(int variant, std::int64_t value) {
  const std::string v = std::to_string(value);
  switch (variant % 4) {
    case 0: return "The final answer is " + v + ".";
    case 1: return "Thus, the final answer is " + v + ".";
    case 2: return "So the final answer is " + v + ".";
    default: return "Therefore, the final answer is " + v + ".";
  }
}

// Op payload encodes (depth, op) positionally; values stay below 100000
// for depth <= 98, well apart from 6-digit answer payloads.
std::int64_t op_payload(int depth, int op) {
  return 1009 + 997LL * depth + (op % 997);
}

std::uint64_t problem_hash(const SyntheticDomainConfig& config,
                           const ProblemInstance& problem) {
  return mix_seeds(config.seed, fnv1a64(problem.id));
}

std::int64_t answer_value(const SyntheticDomainConfig& config,
                          const ProblemInstance& problem) {
  return 100000 +
         static_cast<std::int64_t>(
             splitmix64(problem_hash(config, problem) ^ 0xA11CE5ULL) % 900000);
}

int correct_op(const SyntheticDomainConfig& config, const ProblemInstance& problem,
               int depth) {
  return static_cast<int>(
      splitmix64(problem_hash(config, problem) +
                 static_cast<std::uint64_t>(depth) * 0x9E37ULL) %
      static_cast<std::uint64_t>(config.n_ops));
}

std::uint64_t path_fingerprint(const std::vector<CandidateStep>& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& step : path) {
    h = fnv1a64(step.text, h);
    h = fnv1a64("\x1e", h);
  }
  return h;
}

/// Length of the longest fully-correct prefix: op steps must pick the
/// correct operation, a terminal step must conclude the answer value.
std::size_t correct_prefix_len(const SyntheticDomainConfig& config,
                               const ProblemInstance& problem,
                               const std::vector<CandidateStep>& path) {
  for (std::size_t i = 0; i < path.size(); ++i) {
    auto key = canonical_key(path[i].text);
    if (!key) return i;
    if (path[i].terminal) {
      if (*key != answer_value(config, problem)) return i;
    } else {
      if (*key != op_payload(static_cast<int>(i),
                             correct_op(config, problem, static_cast<int>(i))))
        return i;
    }
  }
  return path.size();
}

bool path_on_track(const SyntheticDomainConfig& config,
                   const ProblemInstance& problem,
                   const std::vector<CandidateStep>& path) {
  return correct_prefix_len(config, problem, path) == path.size();
}

}  // namespace

void SyntheticDomainConfig::validate() const {
  if (n_ops < 1) throw ContractViolation("SyntheticDomainConfig: n_ops < 1");
  if (variants_per_op < 1)
    throw ContractViolation("SyntheticDomainConfig: variants_per_op < 1");
  if (duplication_rate < 0.0 || duplication_rate > 1.0)
    throw ContractViolation("SyntheticDomainConfig: duplication_rate outside [0,1]");
  if (depth < 1) throw ContractViolation("SyntheticDomainConfig: depth < 1");
  if (tokens_min < 0 || tokens_min > tokens_max)
    throw ContractViolation("SyntheticDomainConfig: bad tokens_per_step range");
  if (reward_noise < 0.0)
    throw ContractViolation("SyntheticDomainConfig: negative reward_noise");
}

std::optional<std::int64_t> canonical_key(std::string_view text) {
  // Trailing integer: last maximal digit run.
  std::size_t end = text.size();
  while (end > 0 && !std::isdigit(static_cast<unsigned char>(text[end - 1]))) --end;
  if (end == 0) return std::nullopt;
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(text[begin - 1])))
    --begin;
  std::int64_t value = 0;
  for (std::size_t i = begin; i < end; ++i) value = value * 10 + (text[i] - '0');
  return value;
}

std::vector<ProblemInstance> make_synthetic_problems(
    const SyntheticDomainConfig& config, int count) {
  config.validate();
  std::vector<ProblemInstance> problems;
  problems.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ProblemInstance p;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%04d", i);
    p.id = id;
    p.statement = "Synthetic reasoning problem " + std::to_string(i) + ".";
    p.reference_answer = std::to_string(answer_value(config, p));
    problems.push_back(std::move(p));
  }
  return problems;
}

// ----------------------------------------------------------------------------
// Generator
// ----------------------------------------------------------------------------

SyntheticGenerator::SyntheticGenerator(SyntheticDomainConfig config)
    : config_(config) {
  config_.validate();
}

std::vector<CandidateStep> SyntheticGenerator::expand(
    const ProblemInstance& problem, const std::vector<CandidateStep>& path,
    int n, double temperature, int max_new_tokens) {
  (void)temperature;
  (void)max_new_tokens;
  if (n < 1) throw ContractViolation("synthetic expand: n < 1");
  if (!path.empty() && path.back().terminal) return {};

  const int d = static_cast<int>(path.size());
  Rng rng(mix_seeds(problem_hash(config_, problem),
                    path_fingerprint(path) ^ 0xE0E0ULL));
  const bool prefix_ok = path_on_track(config_, problem, path);

  std::vector<CandidateStep> batch;
  batch.reserve(static_cast<std::size_t>(n));

  auto sample_tokens = [&] {
    return rng.uniform_int(config_.tokens_min, config_.tokens_max);
  };
  auto sample_score = [&](bool good) {
    return std::min(1.0, std::max(0.0, 0.45 + (good ? 0.25 : 0.0) +
                                           0.15 * rng.uniform()));
  };

  if (d >= config_.depth) {
    // Terminal level: the path determines one concluded value, so every
    // candidate past the first is a surface duplicate and appears with
    // probability duplication_rate.
    std::int64_t value = answer_value(config_, problem);
    if (!prefix_ok) {
      value = 100000 +
              static_cast<std::int64_t>(
                  splitmix64(path_fingerprint(path) ^ 0xDEC0DEULL) % 900000);
    }
    for (int i = 0; i < n; ++i) {
      if (i > 0 && !rng.bernoulli(config_.duplication_rate)) continue;
      CandidateStep step;
      step.text = render_answer(i, value);
      step.gen_tokens = sample_tokens();
      step.score = sample_score(prefix_ok);
      step.terminal = true;
      batch.push_back(std::move(step));
    }
    return batch;
  }

  // Op level: fresh operations in seeded order, with duplicate draws
  // re-rendering an earlier sibling's operation in a different variant. The
  // correct op leads the fresh order: the generator always proposes the
  // sensible continuation somewhere in the batch.
  const int lead_op = correct_op(config_, problem, d);
  std::vector<int> fresh;
  fresh.reserve(static_cast<std::size_t>(config_.n_ops));
  for (int k = 0; k < config_.n_ops; ++k)
    if (k != lead_op) fresh.push_back(k);
  rng.shuffle(fresh);
  fresh.insert(fresh.begin(), lead_op);

  std::size_t fresh_used = 0;
  std::vector<int> emitted_ops;
  std::vector<int> variant_count(static_cast<std::size_t>(config_.n_ops), 0);

  std::vector<double> emitted_scores;
  for (int i = 0; i < n; ++i) {
    bool duplicate = i > 0 && rng.bernoulli(config_.duplication_rate);
    if (!duplicate && fresh_used >= fresh.size()) duplicate = !emitted_ops.empty();

    int op;
    if (duplicate) {
      // The generator resamples attractive steps: duplicate targets are
      // distinct earlier ops weighted by their sharpened best score.
      std::vector<int> distinct;
      std::vector<double> weights;
      double total = 0.0;
      for (std::size_t k = 0; k < emitted_ops.size(); ++k) {
        bool seen = false;
        for (std::size_t m = 0; m < distinct.size(); ++m) {
          if (distinct[m] == emitted_ops[k]) {
            seen = true;
            double w = std::exp(8.0 * emitted_scores[k]);
            if (w > weights[m]) {
              total += w - weights[m];
              weights[m] = w;
            }
            break;
          }
        }
        if (!seen) {
          distinct.push_back(emitted_ops[k]);
          weights.push_back(std::exp(8.0 * emitted_scores[k]));
          total += weights.back();
        }
      }
      double draw = rng.uniform() * total;
      std::size_t chosen = 0;
      for (std::size_t k = 0; k < weights.size(); ++k) {
        draw -= weights[k];
        if (draw <= 0.0) {
          chosen = k;
          break;
        }
      }
      op = distinct[chosen];
    } else {
      op = fresh[fresh_used++];
    }
    int variant = variant_count[static_cast<std::size_t>(op)]++ %
                  config_.variants_per_op;
    emitted_ops.push_back(op);

    CandidateStep step;
    step.text = render_op(d, op, variant, op_payload(d, op));
    step.gen_tokens = sample_tokens();
    step.score = sample_score(prefix_ok && op == lead_op);
    step.terminal = false;
    emitted_scores.push_back(*step.score);
    batch.push_back(std::move(step));
  }
  return batch;
}

// ----------------------------------------------------------------------------
// Reward
// ----------------------------------------------------------------------------

SyntheticReward::SyntheticReward(SyntheticDomainConfig config)
    : config_(config) {
  config_.validate();
}

double SyntheticReward::score(const ProblemInstance& problem,
                              const std::vector<CandidateStep>& path) {
  if (path.empty()) return 0.5;
  // Process-reward shape: credit for the correct prefix, so one bad step
  // lowers the score without zeroing out the progress before it. The scale
  // sits low, like a process reward model scoring partial solutions, which
  // keeps the PUCT exploration term live across a whole run.
  double prefix = static_cast<double>(correct_prefix_len(config_, problem, path)) /
                  static_cast<double>(path.size());
  double base = 0.08 + 0.4 * prefix;
  Rng rng(mix_seeds(problem_hash(config_, problem),
                    path_fingerprint(path) ^ 0x4e015eULL));
  double noisy = base + rng.gaussian(0.0, config_.reward_noise);
  return std::min(1.0, std::max(0.0, noisy));
}

// ----------------------------------------------------------------------------
// Oracle detector and answer checker
// ----------------------------------------------------------------------------

equiv::Verdict OracleDetector::detect(std::string_view a,
                                      std::string_view b) const {
  if (a.empty() || b.empty())
    throw ContractViolation("detect: empty text");
  auto ka = canonical_key(a);
  auto kb = canonical_key(b);
  if (ka && kb && *ka == *kb)
    return equiv::Verdict{4, 1.0, equiv::VerdictSource::ORACLE};
  return equiv::Verdict{0, 0.0, equiv::VerdictSource::ORACLE};
}

AnswerChecker synthetic_answer_checker() {
  return [](const std::string& answer, const std::string& reference) {
    auto key = canonical_key(answer);
    if (!key) return false;
    return std::to_string(*key) == trim(reference);
  };
}

}  // namespace stepprune::adapters
