#pragma once

#include "stepprune/classifier.hpp"
#include "stepprune/http_clients.hpp"
#include "stepprune/search.hpp"
#include "stepprune/textdist.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

/**
 * Dataset pipeline: harvest sibling step pairs from search traces, filter
 * them to the ratio band, sample per split, annotate with a judge, and
 * write one JSONL file per split plus a build manifest. Problems are
 * assigned to splits before pair extraction, so no problem's pairs ever
 * cross splits.
 */

namespace stepprune::adapters {

struct DatasetRecord {
  std::string sentence1;
  std::string sentence2;
  std::string reasoning_step;
  int result = 0;  // 0..4
  std::string split;
  std::string problem_id;
};

enum class Split { TRAIN, VALID, TEST };
const char* split_name(Split split);

/// Problem-level 8:1:1 split by seeded hash of the problem id.
Split assign_split(const std::string& problem_id, std::uint64_t seed);

struct SiblingPair {
  std::string a;
  std::string b;
  std::string problem_id;
};

/// All unordered pairs of sibling candidate texts per expansion batch.
std::vector<SiblingPair> extract_sibling_pairs(
    const std::vector<search::SearchTrace>& traces);

using JudgeFn =
    std::function<JudgeResult(const std::string&, const std::string&)>;

struct DatasetBuildConfig {
  textdist::RatioBand band{0.75, 0.99};
  std::int64_t train_size = 0;
  std::int64_t valid_size = 0;
  std::int64_t test_size = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string cache_path;   // judge response cache (JSONL); empty disables
  std::string judge_label;  // endpoint fingerprint recorded in the manifest
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  textdist::RatioBand band;
  std::map<std::string, std::int64_t> requested;
  std::map<std::string, std::int64_t> pairs_available;
  std::map<std::string, std::int64_t> written;
  std::string judge_label;
  std::int64_t trace_count = 0;
  std::int64_t cache_hits = 0;

  std::string to_json() const;
};

struct DatasetBuildResult {
  DatasetManifest manifest;
  std::map<std::string, std::string> split_files;  // split name -> path
};

/// Runs the full pipeline and writes {train,valid,test}.jsonl plus
/// manifest.json under output_dir. Throws when a split cannot supply the
/// requested sample size.
DatasetBuildResult build_dataset(const std::vector<search::SearchTrace>& traces,
                                 const DatasetBuildConfig& config,
                                 const JudgeFn& judge);

// JSONL I/O.
void write_dataset_jsonl(const std::vector<DatasetRecord>& records,
                         const std::string& path);
std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path);

/// Dataset records as labeled pairs for classifier training.
std::vector<classifier::LabeledPair> to_labeled_pairs(
    const std::vector<DatasetRecord>& records);

/// Deterministic rule-based judge for desk-scale runs: identical text is
/// level 4, same canonical key level 3, high surface ratio level 1, else 0.
JudgeFn make_oracle_judge();

/// Judge wrapper with a persistent response cache keyed on the pair
/// content; makes dataset builds resumable and idempotent.
class CachingJudge {
public:
  CachingJudge(JudgeFn inner, std::string cache_path);

  JudgeResult annotate(const std::string& s1, const std::string& s2);
  std::int64_t hits() const { return hits_; }

private:
  JudgeFn inner_;
  std::string cache_path_;
  std::map<std::string, JudgeResult> cache_;
  std::int64_t hits_ = 0;
};

}  // namespace stepprune::adapters
