#include "stepprune/dataset.hpp"
#include "stepprune/synthetic.hpp"
#include "stepprune/util.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <variant>

namespace stepprune::adapters {

using nlohmann::json;

const char* split_name(Split split) {
  switch (split) {
    case Split::TRAIN: return "train";
    case Split::VALID: return "valid";
    case Split::TEST: return "test";
  }
  return "unknown";
}

Split assign_split(const std::string& problem_id, std::uint64_t seed) {
  std::uint64_t h = splitmix64(mix_seeds(seed, fnv1a64(problem_id)));
  std::uint64_t bucket = h % 10;  // 8:1:1
  if (bucket < 8) return Split::TRAIN;
  if (bucket == 8) return Split::VALID;
  return Split::TEST;
}

std::vector<SiblingPair> extract_sibling_pairs(
    const std::vector<search::SearchTrace>& traces) {
  std::vector<SiblingPair> pairs;
  for (const auto& trace : traces) {
    for (const auto& event : trace.events) {
      const auto* expand = std::get_if<search::ExpandEvent>(&event);
      if (expand == nullptr) continue;
      const auto& cands = expand->candidates;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
          pairs.push_back({cands[i].text, cands[j].text, trace.problem_id});
        }
      }
    }
  }
  return pairs;
}

// ----------------------------------------------------------------------------
// Judges
// ----------------------------------------------------------------------------

JudgeFn make_oracle_judge() {
  return [](const std::string& s1, const std::string& s2) {
    JudgeResult r;
    auto k1 = canonical_key(s1);
    auto k2 = canonical_key(s2);
    if (s1 == s2) {
      r.result = 4;
      r.reasoning_step = "The sentences are identical.";
    } else if (k1 && k2 && *k1 == *k2) {
      r.result = 3;
      r.reasoning_step = "Both sentences state the same operation and value.";
    } else if (textdist::levenshtein_ratio(s1, s2) > 0.75) {
      r.result = 1;
      r.reasoning_step =
          "The sentences look alike but state different operations.";
    } else {
      r.result = 0;
      r.reasoning_step = "The sentences state different operations.";
    }
    return r;
  };
}

namespace {

std::string pair_cache_key(const std::string& s1, const std::string& s2) {
  std::uint64_t h = fnv1a64(s1);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(s2, h);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

CachingJudge::CachingJudge(JudgeFn inner, std::string cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
  if (cache_path_.empty()) return;
  std::ifstream in(cache_path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      JudgeResult r;
      r.reasoning_step = j.at("reasoning_step").get<std::string>();
      r.result = j.at("result").get<int>();
      cache_[j.at("key").get<std::string>()] = r;
    } catch (const json::exception&) {
      // Skip corrupt cache lines; they will be re-annotated.
    }
  }
}

JudgeResult CachingJudge::annotate(const std::string& s1, const std::string& s2) {
  std::string key = pair_cache_key(s1, s2);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  JudgeResult r = inner_(s1, s2);
  cache_[key] = r;
  if (!cache_path_.empty()) {
    std::ofstream out(cache_path_, std::ios::app);
    json j;
    j["key"] = key;
    j["reasoning_step"] = r.reasoning_step;
    j["result"] = r.result;
    out << j.dump() << '\n';
  }
  return r;
}

// ----------------------------------------------------------------------------
// JSONL I/O
// ----------------------------------------------------------------------------

void write_dataset_jsonl(const std::vector<DatasetRecord>& records,
                         const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("write_dataset_jsonl: cannot open " + path);
  for (const auto& r : records) {
    json j;
    j["sentence1"] = r.sentence1;
    j["sentence2"] = r.sentence2;
    j["reasoning_step"] = r.reasoning_step;
    j["result"] = r.result;
    j["split"] = r.split;
    j["problem_id"] = r.problem_id;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write_dataset_jsonl: write failed for " + path);
}

std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_dataset_jsonl: cannot open " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      DatasetRecord r;
      r.sentence1 = j.at("sentence1").get<std::string>();
      r.sentence2 = j.at("sentence2").get<std::string>();
      r.reasoning_step = j.value("reasoning_step", "");
      r.result = j.at("result").get<int>();
      r.split = j.value("split", "");
      r.problem_id = j.value("problem_id", "");
      if (r.result < 0 || r.result > 4)
        throw FormatError("result outside [0,4]");
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

std::vector<classifier::LabeledPair> to_labeled_pairs(
    const std::vector<DatasetRecord>& records) {
  std::vector<classifier::LabeledPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) {
    classifier::LabeledPair p;
    p.sentence1 = r.sentence1;
    p.sentence2 = r.sentence2;
    p.level = r.result;
    if (!r.reasoning_step.empty()) p.reasoning = r.reasoning_step;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// ----------------------------------------------------------------------------
// Manifest
// ----------------------------------------------------------------------------

std::string DatasetManifest::to_json() const {
  json j;
  j["seed"] = seed;
  j["band"] = {{"lo", band.lo}, {"hi", band.hi}};
  j["split_ratio"] = "8:1:1";
  j["requested"] = requested;
  j["pairs_available"] = pairs_available;
  j["written"] = written;
  j["judge"] = judge_label;
  j["trace_count"] = trace_count;
  j["cache_hits"] = cache_hits;
  j["pair_harvest"] = "all expansion batches";
  return j.dump(2);
}

// ----------------------------------------------------------------------------
// Pipeline
// ----------------------------------------------------------------------------

DatasetBuildResult build_dataset(const std::vector<search::SearchTrace>& traces,
                                 const DatasetBuildConfig& config,
                                 const JudgeFn& judge) {
  config.band.validate();
  std::filesystem::create_directories(config.output_dir);

  DatasetBuildResult result;
  auto& manifest = result.manifest;
  manifest.seed = config.seed;
  manifest.band = config.band;
  manifest.judge_label = config.judge_label;
  manifest.trace_count = static_cast<std::int64_t>(traces.size());
  manifest.requested = {{"train", config.train_size},
                        {"valid", config.valid_size},
                        {"test", config.test_size}};

  // Problems are pre-assigned to splits; pairs inherit the membership.
  std::map<Split, std::vector<SiblingPair>> by_split;
  for (auto& pair : extract_sibling_pairs(traces)) {
    by_split[assign_split(pair.problem_id, config.seed)].push_back(std::move(pair));
  }

  CachingJudge caching(judge, config.cache_path);

  const std::map<Split, std::int64_t> sizes = {
      {Split::TRAIN, config.train_size},
      {Split::VALID, config.valid_size},
      {Split::TEST, config.test_size}};

  for (const auto& [split, requested] : sizes) {
    const std::string name = split_name(split);
    auto& pairs = by_split[split];

    std::vector<SiblingPair> banded;
    for (auto& p : pairs) {
      if (config.band.contains(textdist::levenshtein_ratio(p.a, p.b)))
        banded.push_back(std::move(p));
    }
    manifest.pairs_available[name] = static_cast<std::int64_t>(banded.size());

    if (static_cast<std::int64_t>(banded.size()) < requested) {
      // Record the state before failing so the manifest explains the run.
      std::ofstream mf(config.output_dir + "/manifest.json", std::ios::trunc);
      mf << manifest.to_json() << '\n';
      throw Error("build_dataset: split '" + name + "' has only " +
                  std::to_string(banded.size()) + " pairs in band, " +
                  std::to_string(requested) + " requested");
    }

    // Seeded partial shuffle, then truncate to the requested size.
    Rng rng(mix_seeds(config.seed, fnv1a64(name)));
    rng.shuffle(banded);
    banded.resize(static_cast<std::size_t>(requested));

    std::vector<DatasetRecord> records;
    records.reserve(banded.size());
    for (const auto& p : banded) {
      JudgeResult verdict = caching.annotate(p.a, p.b);
      DatasetRecord r;
      r.sentence1 = p.a;
      r.sentence2 = p.b;
      r.reasoning_step = verdict.reasoning_step;
      r.result = verdict.result;
      r.split = name;
      r.problem_id = p.problem_id;
      records.push_back(std::move(r));
    }

    std::string path = config.output_dir + "/" + name + ".jsonl";
    write_dataset_jsonl(records, path);
    result.split_files[name] = path;
    manifest.written[name] = static_cast<std::int64_t>(records.size());
  }

  manifest.cache_hits = caching.hits();
  std::ofstream mf(config.output_dir + "/manifest.json", std::ios::trunc);
  if (!mf) throw Error("build_dataset: cannot write manifest");
  mf << manifest.to_json() << '\n';
  return result;
}

}  // namespace stepprune::adapters
