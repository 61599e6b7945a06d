// Command-line entry point: run searches, compare pruning strategies, build
// annotation datasets from traces, and train/evaluate the pair classifier.

#include "stepprune/classifier.hpp"
#include "stepprune/config.hpp"
#include "stepprune/dataset.hpp"
#include "stepprune/harness.hpp"
#include "stepprune/http_clients.hpp"
#include "stepprune/search.hpp"
#include "stepprune/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <regex>

namespace {

using namespace stepprune;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  int workers = 0;
  std::int64_t seed = -1;
  bool resume = false;
};

cli::RunConfigFile resolve_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  auto config = cli::load_config(args.config_path);
  for (const auto& o : args.overrides) cli::apply_override(config, o);
  if (!args.output.empty()) config.values["output"] = args.output;
  if (args.workers > 0) config.values["workers"] = std::to_string(args.workers);
  if (args.seed >= 0) config.values["seed"] = std::to_string(args.seed);
  return config;
}

adapters::SyntheticDomainConfig synthetic_config(const cli::RunConfigFile& cfg) {
  adapters::SyntheticDomainConfig dom;
  dom.n_ops = static_cast<int>(cfg.get_int("synthetic.n_ops"));
  dom.variants_per_op = static_cast<int>(cfg.get_int("synthetic.variants_per_op"));
  dom.duplication_rate = cfg.get_double("synthetic.duplication_rate");
  dom.depth = static_cast<int>(cfg.get_int("synthetic.depth"));
  dom.tokens_min = static_cast<int>(cfg.get_int("synthetic.tokens_min"));
  dom.tokens_max = static_cast<int>(cfg.get_int("synthetic.tokens_max"));
  dom.reward_noise = cfg.get_double("synthetic.reward_noise");
  dom.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  dom.validate();
  return dom;
}

SearchConfig search_config(const cli::RunConfigFile& cfg) {
  SearchConfig sc;
  std::string algo = cfg.get_string("search.algorithm");
  if (algo == "mcts") sc.algorithm = Algorithm::MCTS;
  else if (algo == "sbs") sc.algorithm = Algorithm::SBS;
  else throw ConfigError("search.algorithm must be mcts or sbs, got '" + algo + "'");
  sc.simulations = static_cast<int>(cfg.get_int("search.simulations"));
  sc.c_puct = cfg.get_double("search.c_puct");
  sc.tree_max_width = static_cast<int>(cfg.get_int("search.tree_max_width"));
  sc.tree_max_depth = static_cast<int>(cfg.get_int("search.tree_max_depth"));
  sc.temperature = cfg.get_double("search.temperature");
  sc.max_new_tokens = static_cast<int>(cfg.get_int("search.max_new_tokens"));
  sc.beam_size = static_cast<int>(cfg.get_int("search.beam_size"));
  sc.ratio_threshold = cfg.get_double("search.ratio_threshold");
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  try {
    sc.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid search configuration: ") + e.what());
  }
  return sc;
}

adapters::EndpointConfig endpoint_config(const cli::RunConfigFile& cfg,
                                         const std::string& prefix) {
  adapters::EndpointConfig ep;
  ep.base_url = cfg.get_string(prefix + ".base_url");
  ep.model_name = cfg.get_string(prefix + ".model_name");
  ep.api_key_env = cfg.get_string(prefix + ".api_key_env");
  ep.timeout_sec = static_cast<int>(cfg.get_int(prefix + ".timeout_sec"));
  ep.max_retries = static_cast<int>(cfg.get_int(prefix + ".max_retries"));
  ep.backoff_ms = static_cast<int>(cfg.get_int(prefix + ".backoff_ms"));
  ep.max_concurrency = static_cast<int>(cfg.get_int(prefix + ".max_concurrency"));
  return ep;
}

std::vector<ProblemInstance> problems_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problems.file: " + path);
  std::vector<ProblemInstance> problems;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ProblemInstance p;
    p.id = j.at("id").get<std::string>();
    p.statement = j.at("statement").get<std::string>();
    if (j.contains("reference_answer") && !j["reference_answer"].is_null())
      p.reference_answer = j["reference_answer"].get<std::string>();
    p.validate();
    problems.push_back(std::move(p));
  }
  return problems;
}

struct Domain {
  std::vector<ProblemInstance> problems;
  std::unique_ptr<search::GeneratorContract> generator;
  std::unique_ptr<search::RewardContract> reward;
  AnswerChecker checker;
};

Domain make_domain(const cli::RunConfigFile& cfg) {
  Domain domain;
  std::string source = cfg.get_string("problems.source");
  if (source == "synthetic") {
    auto dom = synthetic_config(cfg);
    domain.problems = adapters::make_synthetic_problems(
        dom, static_cast<int>(cfg.get_int("problems.count")));
    domain.generator = std::make_unique<adapters::SyntheticGenerator>(dom);
    domain.reward = std::make_unique<adapters::SyntheticReward>(dom);
    domain.checker = adapters::synthetic_answer_checker();
  } else if (source == "file") {
    domain.problems = problems_from_file(cfg.get_string("problems.file"));
    domain.generator = std::make_unique<adapters::LlmGenerator>(
        endpoint_config(cfg, "generator"), cfg.get_string("generator.answer_pattern"));
    domain.reward =
        std::make_unique<adapters::PrmClient>(endpoint_config(cfg, "prm"));
    std::string pattern = cfg.get_string("answer.pattern");
    if (pattern.empty()) {
      domain.checker = normalized_equals;
    } else {
      domain.checker = [pattern](const std::string& answer,
                                 const std::string& reference) {
        std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
        std::smatch match;
        if (std::regex_search(answer, match, re) && match.size() > 1)
          return normalized_equals(match[1].str(), reference);
        return normalized_equals(answer, reference);
      };
    }
  } else {
    throw ConfigError("problems.source must be synthetic or file, got '" +
                      source + "'");
  }
  if (domain.problems.empty()) throw ConfigError("no problems configured");
  return domain;
}

harness::RunConfig run_config(const cli::RunConfigFile& cfg, const Domain& domain,
                              bool resume) {
  harness::RunConfig rc;
  rc.search = search_config(cfg);
  rc.workers = static_cast<int>(cfg.get_int("workers"));
  rc.output_dir = cfg.get_string("output");
  rc.resume = resume;
  rc.checker = domain.checker;
  std::filesystem::create_directories(rc.output_dir);
  return rc;
}

harness::StrategySpec strategy_from_config(const cli::RunConfigFile& cfg) {
  std::string kind = cfg.get_string("search.pruning");
  std::string text = "search:" + kind;
  if (kind == "cascade") text += "@" + cfg.get_string("detector.model_path");
  if (kind == "external") text += "@" + cfg.get_string("detector.url");
  auto spec = harness::parse_strategy(text);
  spec.decision_threshold = cfg.get_double("detector.decision_threshold");
  return spec;
}

json config_echo(const cli::RunConfigFile& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.resolved()) j[k] = v;
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

// ----------------------------------------------------------------------------
// Commands
// ----------------------------------------------------------------------------

int cmd_search(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  auto domain = make_domain(cfg);
  auto rc = run_config(cfg, domain, args.resume);
  auto strategy = strategy_from_config(cfg);

  auto outcome = harness::run_strategy(domain.problems, *domain.generator,
                                       *domain.reward, strategy, rc);
  outcome.report.baseline_name = strategy.label;
  outcome.report.ratio = 100.0;

  json doc;
  doc["report"] = json::parse(outcome.report.to_json());
  doc["config"] = config_echo(cfg);
  doc["seed"] = cfg.get_int("seed");
  doc["detector_failures"] = outcome.detector_failures;
  write_text(rc.output_dir + "/report.json", doc.dump(2) + "\n");

  std::string table = render_report_table({outcome.report});
  write_text(rc.output_dir + "/report.txt", table);
  std::cout << table;
  return 0;
}

int cmd_bench(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  auto domain = make_domain(cfg);
  auto rc = run_config(cfg, domain, args.resume);

  std::vector<harness::StrategySpec> strategies;
  std::istringstream is(cfg.get_string("bench.strategies"));
  std::string token;
  while (is >> token) {
    auto spec = harness::parse_strategy(token);
    spec.decision_threshold = cfg.get_double("detector.decision_threshold");
    strategies.push_back(std::move(spec));
  }
  if (strategies.size() < 2)
    throw ConfigError("bench.strategies must list at least 2 strategies");

  auto reports = harness::run_bench(domain.problems, *domain.generator,
                                    *domain.reward, strategies, rc);

  json doc;
  doc["reports"] = json::array();
  for (const auto& r : reports) doc["reports"].push_back(json::parse(r.to_json()));
  doc["config"] = config_echo(cfg);
  doc["seed"] = cfg.get_int("seed");
  write_text(rc.output_dir + "/bench.json", doc.dump(2) + "\n");

  std::string table = render_report_table(reports);
  write_text(rc.output_dir + "/bench.txt", table);
  std::cout << table;
  return 0;
}

int cmd_dataset_build(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  std::string trace_dir = cfg.get_string("dataset.traces");
  if (trace_dir.empty()) throw ConfigError("dataset.traces is required");

  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(trace_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .jsonl traces under " + trace_dir);

  std::vector<search::SearchTrace> traces;
  traces.reserve(files.size());
  for (const auto& f : files) traces.push_back(search::load_trace(f));

  adapters::DatasetBuildConfig build;
  build.band = {cfg.get_double("dataset.band_lo"), cfg.get_double("dataset.band_hi")};
  build.train_size = cfg.get_int("dataset.train_size");
  build.valid_size = cfg.get_int("dataset.valid_size");
  build.test_size = cfg.get_int("dataset.test_size");
  build.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  build.output_dir = cfg.get_string("output");
  build.cache_path = cfg.get_string("dataset.cache");

  adapters::JudgeFn judge;
  std::string judge_kind = cfg.get_string("judge.kind");
  if (judge_kind == "oracle") {
    judge = adapters::make_oracle_judge();
    build.judge_label = "oracle";
  } else if (judge_kind == "http") {
    auto client =
        std::make_shared<adapters::JudgeClient>(endpoint_config(cfg, "judge"));
    judge = [client](const std::string& a, const std::string& b) {
      return client->annotate(a, b);
    };
    build.judge_label = cfg.get_string("judge.base_url") + "/" +
                        cfg.get_string("judge.model_name");
  } else {
    throw ConfigError("judge.kind must be oracle or http");
  }

  auto result = adapters::build_dataset(traces, build, judge);
  std::cout << "dataset written under " << build.output_dir << "\n"
            << result.manifest.to_json() << "\n";
  return 0;
}

int cmd_pruner_train(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  std::string data_path = cfg.get_string("train.data");
  std::string val_path = cfg.get_string("train.val");
  if (data_path.empty() || val_path.empty())
    throw ConfigError("train.data and train.val are required");

  auto data = adapters::to_labeled_pairs(adapters::read_dataset_jsonl(data_path));
  auto val = adapters::to_labeled_pairs(adapters::read_dataset_jsonl(val_path));

  classifier::EMConfig em;
  em.tau = cfg.get_double("train.tau");
  em.max_iterations = static_cast<int>(cfg.get_int("train.max_iterations"));
  em.min_f1_gain = cfg.get_double("train.min_f1_gain");
  em.train_config.epochs = static_cast<int>(cfg.get_int("train.epochs"));
  em.train_config.learning_rate = cfg.get_double("train.learning_rate");
  em.train_config.l2 = cfg.get_double("train.l2");
  em.train_config.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  em.train_config.decision_threshold = cfg.get_double("train.decision_threshold");
  auto dim = cfg.get_int("train.hash_dim");
  em.train_config.features.hash_dim = static_cast<std::uint32_t>(dim);
  try {
    em.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid training configuration: ") + e.what());
  }

  std::string out_dir = cfg.get_string("output");
  std::filesystem::create_directories(out_dir);

  auto result = classifier::em_train(data, val, em);
  std::string model_path = out_dir + "/" + cfg.get_string("train.model_out");
  classifier::save_model(result.model, model_path);

  json history = json::array();
  for (const auto& row : result.history) {
    history.push_back({{"iteration", row.iteration},
                       {"train_size", row.train_size},
                       {"dropped_samples", row.dropped_samples},
                       {"removed_sentences", row.removed_sentences},
                       {"val_precision", row.val_precision},
                       {"val_recall", row.val_recall},
                       {"val_f1", row.val_f1},
                       {"best", row.iteration == result.best_iteration}});
  }
  json doc;
  doc["history"] = history;
  doc["best_iteration"] = result.best_iteration;
  doc["model"] = model_path;
  doc["config"] = config_echo(cfg);
  write_text(out_dir + "/" + cfg.get_string("train.history_out"),
             doc.dump(2) + "\n");

  std::cout << "model written to " << model_path << " (best iteration "
            << result.best_iteration << ", val F1 "
            << result.history[static_cast<std::size_t>(result.best_iteration)].val_f1
            << ")\n";
  return 0;
}

int cmd_pruner_eval(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  std::string model_path = cfg.get_string("eval.model");
  std::string data_path = cfg.get_string("eval.data");
  if (model_path.empty() || data_path.empty())
    throw ConfigError("eval.model and eval.data are required");

  auto model = classifier::load_model(model_path);
  auto data = adapters::to_labeled_pairs(adapters::read_dataset_jsonl(data_path));
  auto metrics = classifier::evaluate(model, data);

  json doc;
  doc["precision"] = metrics.precision;
  doc["recall"] = metrics.recall;
  doc["f1"] = metrics.f1;
  doc["confusion"] = {{"tp", metrics.tp}, {"fp", metrics.fp},
                      {"tn", metrics.tn}, {"fn", metrics.fn}};
  doc["decision_threshold"] = model.decision_threshold;
  doc["model"] = model_path;
  doc["data"] = data_path;

  std::string out_dir = cfg.get_string("output");
  std::filesystem::create_directories(out_dir);
  write_text(out_dir + "/" + cfg.get_string("eval.out"), doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return 0;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "Run configuration file");
  sub->add_option("--set", args.overrides, "Override a config key (key=value)");
  sub->add_option("--output", args.output, "Output directory");
  sub->add_option("--workers", args.workers, "Worker pool size");
  sub->add_option("--seed", args.seed, "Base seed");
  sub->add_flag("--resume", args.resume, "Skip problems already in results");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reasoning-search engine with equivalence pruning"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* search = app.add_subcommand("search", "Run one search strategy");
  auto* bench = app.add_subcommand("bench", "Compare pruning strategies");
  auto* dataset = app.add_subcommand("dataset-build", "Build a labeled pair dataset");
  auto* train = app.add_subcommand("pruner-train", "Train the pair classifier");
  auto* eval = app.add_subcommand("pruner-eval", "Evaluate a classifier model");
  for (auto* sub : {search, bench, dataset, train, eval}) add_common(sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (search->parsed()) return cmd_search(args);
    if (bench->parsed()) return cmd_bench(args);
    if (dataset->parsed()) return cmd_dataset_build(args);
    if (train->parsed()) return cmd_pruner_train(args);
    if (eval->parsed()) return cmd_pruner_eval(args);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
