#include "stepprune/config.hpp"
#include "stepprune/util.hpp"

#include <fstream>
#include <sstream>

namespace stepprune::cli {

const std::map<std::string, std::string>& config_schema() {
  static const std::map<std::string, std::string> schema = {
      {"seed", "0"},
      {"workers", "1"},
      {"output", "out"},

      {"problems.source", "synthetic"},  // synthetic | file
      {"problems.count", "20"},
      {"problems.file", ""},

      {"synthetic.n_ops", "10"},
      {"synthetic.variants_per_op", "4"},
      {"synthetic.duplication_rate", "0.5"},
      {"synthetic.depth", "6"},
      {"synthetic.tokens_min", "40"},
      {"synthetic.tokens_max", "120"},
      {"synthetic.reward_noise", "0.02"},

      {"search.algorithm", "mcts"},  // mcts | sbs
      {"search.simulations", "20"},
      {"search.c_puct", "1.25"},
      {"search.tree_max_width", "10"},
      {"search.tree_max_depth", "50"},
      {"search.temperature", "0.7"},
      {"search.max_new_tokens", "1024"},
      {"search.beam_size", "3"},
      {"search.pruning", "none"},  // none | oracle | ratio | cascade | external
      {"search.ratio_threshold", "0.75"},

      {"detector.model_path", ""},
      {"detector.decision_threshold", "0.5"},
      {"detector.url", ""},

      {"generator.base_url", ""},
      {"generator.model_name", ""},
      {"generator.api_key_env", ""},
      {"generator.timeout_sec", "60"},
      {"generator.max_retries", "3"},
      {"generator.backoff_ms", "250"},
      {"generator.max_concurrency", "4"},
      {"generator.answer_pattern", "final answer"},

      {"answer.pattern", ""},

      {"prm.base_url", ""},
      {"prm.model_name", ""},
      {"prm.api_key_env", ""},
      {"prm.timeout_sec", "60"},
      {"prm.max_retries", "3"},
      {"prm.backoff_ms", "250"},
      {"prm.max_concurrency", "4"},

      {"judge.kind", "oracle"},  // oracle | http
      {"judge.base_url", ""},
      {"judge.model_name", ""},
      {"judge.api_key_env", ""},
      {"judge.timeout_sec", "60"},
      {"judge.max_retries", "3"},
      {"judge.backoff_ms", "250"},
      {"judge.max_concurrency", "4"},

      {"bench.strategies", ""},

      {"dataset.traces", ""},
      {"dataset.band_lo", "0.75"},
      {"dataset.band_hi", "0.99"},
      {"dataset.train_size", "0"},
      {"dataset.valid_size", "0"},
      {"dataset.test_size", "0"},
      {"dataset.cache", ""},

      {"train.data", ""},
      {"train.val", ""},
      {"train.tau", "0.95"},
      {"train.max_iterations", "5"},
      {"train.min_f1_gain", "0.002"},
      {"train.epochs", "3"},
      {"train.learning_rate", "0.1"},
      {"train.l2", "1e-6"},
      {"train.hash_dim", "262144"},
      {"train.decision_threshold", "0.5"},
      {"train.model_out", "pruner.bin"},
      {"train.history_out", "em_history.json"},

      {"eval.model", ""},
      {"eval.data", ""},
      {"eval.out", "metrics.json"},
  };
  return schema;
}

bool RunConfigFile::has(const std::string& key) const {
  return values.count(key) > 0;
}

std::string RunConfigFile::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it != values.end()) return it->second;
  auto def = config_schema().find(key);
  if (def == config_schema().end())
    throw ConfigError("unknown config key '" + key + "'");
  return def->second;
}

std::int64_t RunConfigFile::get_int(const std::string& key) const {
  std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

double RunConfigFile::get_double(const std::string& key) const {
  std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

bool RunConfigFile::get_bool(const std::string& key) const {
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::map<std::string, std::string> RunConfigFile::resolved() const {
  std::map<std::string, std::string> out = config_schema();
  for (const auto& [k, v] : values) out[k] = v;
  return out;
}

RunConfigFile parse_config(const std::string& text, const std::string& name) {
  RunConfigFile config;
  config.source_path = name;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key = trim(trimmed.substr(0, eq));
    std::string value = trim(trimmed.substr(eq + 1));
    if (config_schema().count(key) == 0)
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    config.values[key] = value;
  }
  return config;
}

RunConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text, path);
}

void apply_override(RunConfigFile& config, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key=value");
  std::string key = trim(assignment.substr(0, eq));
  if (config_schema().count(key) == 0)
    throw ConfigError("override references unknown key '" + key + "'");
  config.values[key] = trim(assignment.substr(eq + 1));
}

}  // namespace stepprune::cli
