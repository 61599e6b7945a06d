#include "stepprune/core.hpp"
#include "stepprune/util.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace stepprune {

double compute_ratio(std::int64_t tokens, std::int64_t baseline_tokens) {
  if (baseline_tokens <= 0)
    throw ContractViolation("compute_ratio: baseline_tokens must be > 0");
  return 100.0 * static_cast<double>(tokens) /
         static_cast<double>(baseline_tokens);
}

std::string format_percent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

bool normalized_equals(const std::string& answer, const std::string& reference) {
  auto normalize = [](const std::string& s) {
    std::string t = trim(s);
    while (!t.empty()) {
      char c = t.back();
      if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?')
        t.pop_back();
      else
        break;
    }
    return trim(t);
  };
  return normalize(answer) == normalize(reference);
}

AccuracyResult score_accuracy(const std::vector<ProblemResult>& results,
                              const AnswerChecker& checker, bool strict) {
  AccuracyResult out;
  for (const auto& r : results) {
    if (!r.problem.reference_answer.has_value()) {
      out.item_errors.push_back("missing reference answer for problem '" +
                                r.problem.id + "'");
      out.per_item_solved.push_back(false);
      if (strict) out.total += 1;  // stays in the denominator, unsolved
      continue;
    }
    bool ok = checker(r.final_answer, *r.problem.reference_answer);
    out.per_item_solved.push_back(ok);
    out.total += 1;
    if (ok) out.solved += 1;
  }
  out.accuracy = out.total > 0
                     ? 100.0 * static_cast<double>(out.solved) /
                           static_cast<double>(out.total)
                     : 0.0;
  return out;
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["method"] = method_name;
  j["acc"] = accuracy;
  j["tokens"] = tokens;
  j["ratio"] = ratio;
  j["baseline"] = baseline_name;
  j["token_accounting"] = "generated_only";
  j["per_problem"] = nlohmann::json::array();
  for (const auto& p : per_problem) {
    j["per_problem"].push_back(
        {{"problem_id", p.problem_id}, {"solved", p.solved}, {"tokens", p.tokens}});
  }
  return j.dump(2);
}

std::string render_report_table(const std::vector<BenchReport>& reports) {
  std::size_t name_w = 6;
  for (const auto& r : reports) name_w = std::max(name_w, r.method_name.size());

  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %8s  %12s  %9s\n",
                static_cast<int>(name_w), "Method", "Acc", "Tokens", "Ratio");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-*s  %8s  %12lld  %8s%%\n",
                  static_cast<int>(name_w), r.method_name.c_str(),
                  format_percent(r.accuracy).c_str(),
                  static_cast<long long>(r.tokens),
                  format_percent(r.ratio).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace stepprune
