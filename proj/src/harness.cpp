#include "stepprune/harness.hpp"
#include "stepprune/classifier.hpp"
#include "stepprune/http_clients.hpp"
#include "stepprune/synthetic.hpp"
#include "stepprune/util.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace stepprune::harness {

using nlohmann::json;

StrategySpec parse_strategy(const std::string& text) {
  StrategySpec spec;
  std::size_t colon = text.find(':');
  if (colon == std::string::npos || colon == 0)
    throw ConfigError("strategy '" + text + "' must look like label:kind[@arg]");
  spec.label = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  std::string arg;
  std::size_t at = rest.find('@');
  if (at != std::string::npos) {
    arg = rest.substr(at + 1);
    rest = rest.substr(0, at);
  }
  if (rest == "none") spec.kind = PruningKind::NONE;
  else if (rest == "oracle") spec.kind = PruningKind::ORACLE;
  else if (rest == "ratio") spec.kind = PruningKind::RATIO;
  else if (rest == "cascade") spec.kind = PruningKind::CASCADE;
  else if (rest == "external") spec.kind = PruningKind::EXTERNAL;
  else throw ConfigError("strategy '" + text + "': unknown kind '" + rest + "'");

  if (spec.kind == PruningKind::CASCADE) {
    if (arg.empty())
      throw ConfigError("strategy '" + text + "': cascade needs @model-path");
    spec.model_path = arg;
  }
  if (spec.kind == PruningKind::EXTERNAL) {
    if (arg.empty())
      throw ConfigError("strategy '" + text + "': external needs @url");
    spec.external_url = arg;
  }
  return spec;
}

std::shared_ptr<const equiv::EquivalenceDetector> make_detector(
    const StrategySpec& spec, const SearchConfig& config) {
  std::shared_ptr<const equiv::EquivalenceDetector> inner;
  switch (spec.kind) {
    case PruningKind::NONE:
      return nullptr;
    case PruningKind::ORACLE:
      inner = std::make_shared<adapters::OracleDetector>();
      break;
    case PruningKind::RATIO:
      inner = std::make_shared<equiv::RatioDetector>(config.ratio_threshold);
      break;
    case PruningKind::CASCADE: {
      auto model = std::make_shared<classifier::ClassifierModel>(
          classifier::load_model(spec.model_path));
      double threshold = spec.decision_threshold > 0 ? spec.decision_threshold
                                                     : model->decision_threshold;
      inner = std::make_shared<equiv::CascadeDetector>(
          config.ratio_threshold,
          [model](std::string_view a, std::string_view b) {
            return model->predict_proba(a, b);
          },
          threshold);
      break;
    }
    case PruningKind::EXTERNAL: {
      adapters::EndpointConfig endpoint;
      endpoint.base_url = spec.external_url;
      endpoint.model_name = "classifier";
      inner = std::make_shared<adapters::RemoteDetector>(endpoint,
                                                         spec.decision_threshold);
      break;
    }
  }
  return std::make_shared<equiv::FailSoftDetector>(std::move(inner));
}

namespace {

struct ProblemOutcome {
  std::string problem_id;
  bool solved = false;
  std::int64_t tokens = 0;
  std::int64_t pruned_candidates = 0;
  std::string answer;
  bool from_resume = false;
};

std::string results_path(const std::string& dir, const std::string& label) {
  return dir + "/" + label + ".results.jsonl";
}

std::map<std::string, ProblemOutcome> load_resume(const std::string& path) {
  std::map<std::string, ProblemOutcome> done;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      ProblemOutcome o;
      o.problem_id = j.at("problem_id").get<std::string>();
      o.solved = j.at("solved").get<bool>();
      o.tokens = j.at("tokens").get<std::int64_t>();
      o.pruned_candidates = j.value("pruned_candidates", 0);
      o.answer = j.value("answer", "");
      o.from_resume = true;
      done[o.problem_id] = std::move(o);
    } catch (const json::exception&) {
      // Half-written line from an interrupted run; it will be redone.
    }
  }
  return done;
}

json outcome_to_json(const ProblemOutcome& o) {
  json j;
  j["problem_id"] = o.problem_id;
  j["solved"] = o.solved;
  j["tokens"] = o.tokens;
  j["pruned_candidates"] = o.pruned_candidates;
  j["answer"] = o.answer;
  return j;
}

}  // namespace

StrategyOutcome run_strategy(const std::vector<ProblemInstance>& problems,
                             search::GeneratorContract& generator,
                             search::RewardContract& reward,
                             const StrategySpec& strategy,
                             const RunConfig& config) {
  config.search.validate();
  if (!config.checker)
    throw ContractViolation("run_strategy: missing answer checker");

  auto detector = make_detector(strategy, config.search);
  const auto* failsoft =
      dynamic_cast<const equiv::FailSoftDetector*>(detector.get());

  std::string trace_dir;
  std::map<std::string, ProblemOutcome> resumed;
  std::ofstream results_out;
  std::mutex io_mutex;
  if (!config.output_dir.empty()) {
    trace_dir = config.output_dir + "/traces/" + strategy.label;
    std::filesystem::create_directories(trace_dir);
    std::string rpath = results_path(config.output_dir, strategy.label);
    if (config.resume) resumed = load_resume(rpath);
    results_out.open(rpath, config.resume ? std::ios::app : std::ios::trunc);
  }

  std::vector<ProblemOutcome> outcomes(problems.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    while (true) {
      std::size_t index = next.fetch_add(1);
      if (index >= problems.size()) return;
      const auto& problem = problems[index];

      auto it = resumed.find(problem.id);
      if (it != resumed.end()) {
        outcomes[index] = it->second;
        continue;
      }

      SearchConfig search_config = config.search;
      search_config.pruning_enabled = strategy.kind != PruningKind::NONE;
      search_config.seed = mix_seeds(config.search.seed, fnv1a64(problem.id));

      auto result = search::run_search(problem, generator, reward,
                                       detector.get(), search_config);
      ProblemOutcome outcome;
      outcome.problem_id = problem.id;
      outcome.tokens = result.ledger.generated_total;
      outcome.pruned_candidates = result.ledger.pruned_candidates;
      outcome.answer = result.answer;
      outcome.solved = !result.answer.empty() &&
                       problem.reference_answer.has_value() &&
                       config.checker(result.answer, *problem.reference_answer);
      result.trace.solved = outcome.solved;

      if (!trace_dir.empty()) {
        std::lock_guard<std::mutex> lock(io_mutex);
        search::emit_trace(result.trace, trace_dir + "/" + problem.id + ".jsonl");
        if (results_out.is_open()) {
          results_out << outcome_to_json(outcome).dump() << '\n';
          results_out.flush();  // partial results survive interruption
        }
      }
      outcomes[index] = std::move(outcome);
    }
  };

  int workers = std::max(1, config.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  StrategyOutcome out;
  out.report.method_name = strategy.label;
  std::int64_t solved = 0;
  for (const auto& o : outcomes) {
    out.report.per_problem.push_back({o.problem_id, o.solved, o.tokens});
    out.report.tokens += o.tokens;
    out.ledger.generated_total += o.tokens;
    out.ledger.pruned_candidates += o.pruned_candidates;
    if (o.solved) ++solved;
  }
  out.report.accuracy =
      problems.empty() ? 0.0
                       : 100.0 * static_cast<double>(solved) /
                             static_cast<double>(problems.size());
  if (failsoft != nullptr) out.detector_failures = failsoft->failures();

  // Rewrite results in problem order so finished runs are byte-stable.
  if (!config.output_dir.empty() && results_out.is_open()) {
    results_out.close();
    std::ofstream sorted(results_path(config.output_dir, strategy.label),
                         std::ios::trunc);
    for (const auto& o : outcomes) sorted << outcome_to_json(o).dump() << '\n';
  }
  return out;
}

std::vector<BenchReport> run_bench(const std::vector<ProblemInstance>& problems,
                                   search::GeneratorContract& generator,
                                   search::RewardContract& reward,
                                   const std::vector<StrategySpec>& strategies,
                                   const RunConfig& config) {
  if (strategies.size() < 2)
    throw ConfigError("bench needs at least 2 strategies");
  std::set<std::string> labels;
  for (const auto& s : strategies) {
    if (!labels.insert(s.label).second)
      throw ConfigError("bench: duplicate strategy label '" + s.label + "'");
  }

  std::vector<BenchReport> reports;
  std::int64_t baseline_tokens = 0;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    auto outcome = run_strategy(problems, generator, reward, strategies[i], config);
    if (i == 0) baseline_tokens = outcome.report.tokens;
    outcome.report.baseline_name = strategies[0].label;
    outcome.report.ratio =
        baseline_tokens > 0 ? compute_ratio(outcome.report.tokens, baseline_tokens)
                            : 100.0;
    reports.push_back(std::move(outcome.report));
  }
  return reports;
}

}  // namespace stepprune::harness
