#include "stepprune/search.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace stepprune::search {

namespace {

using nlohmann::json;

json event_to_json(const TraceEvent& event) {
  json j;
  if (const auto* e = std::get_if<ExpandEvent>(&event)) {
    j["event"] = "EXPAND";
    j["node_id"] = e->parent;
    json cands = json::array();
    for (const auto& c : e->candidates) {
      json jc;
      jc["node_id"] = c.node_id;
      jc["text"] = c.text;
      jc["gen_tokens"] = c.gen_tokens;
      if (c.score) jc["score"] = *c.score;
      else jc["score"] = nullptr;
      jc["terminal"] = c.terminal;
      cands.push_back(jc);
    }
    j["payload"] = {{"round", e->round}, {"depth", e->depth}, {"candidates", cands}};
  } else if (const auto* p = std::get_if<PruneEvent>(&event)) {
    j["event"] = "PRUNE";
    j["node_id"] = p->node_id;
    j["payload"] = {{"representative", p->representative}};
  } else if (const auto* s = std::get_if<SelectEvent>(&event)) {
    j["event"] = "SELECT";
    j["node_id"] = s->nodes.empty() ? kNoNode : s->nodes.back();
    j["payload"] = {{"round", s->round}, {"nodes", s->nodes}};
  } else if (const auto* b = std::get_if<BackupEvent>(&event)) {
    j["event"] = "BACKUP";
    j["node_id"] = b->node_id;
    j["payload"] = {{"value", b->value}};
  } else if (const auto* t = std::get_if<TerminalEvent>(&event)) {
    j["event"] = "TERMINAL";
    j["node_id"] = t->node_id;
    j["payload"] = {{"answer", t->answer}};
  }
  return j;
}

TraceEvent event_from_json(const json& j) {
  const std::string kind = j.at("event").get<std::string>();
  const json& payload = j.at("payload");
  if (kind == "EXPAND") {
    ExpandEvent e;
    e.parent = j.at("node_id").get<NodeId>();
    e.round = payload.at("round").get<int>();
    e.depth = payload.at("depth").get<int>();
    for (const auto& jc : payload.at("candidates")) {
      ExpandCandidate c;
      c.node_id = jc.at("node_id").get<NodeId>();
      c.text = jc.at("text").get<std::string>();
      c.gen_tokens = jc.at("gen_tokens").get<std::int64_t>();
      if (!jc.at("score").is_null()) c.score = jc.at("score").get<double>();
      c.terminal = jc.at("terminal").get<bool>();
      e.candidates.push_back(std::move(c));
    }
    return e;
  }
  if (kind == "PRUNE") {
    return PruneEvent{j.at("node_id").get<NodeId>(),
                      payload.at("representative").get<NodeId>()};
  }
  if (kind == "SELECT") {
    SelectEvent s;
    s.round = payload.at("round").get<int>();
    s.nodes = payload.at("nodes").get<std::vector<NodeId>>();
    return s;
  }
  if (kind == "BACKUP") {
    return BackupEvent{j.at("node_id").get<NodeId>(),
                       payload.at("value").get<double>()};
  }
  if (kind == "TERMINAL") {
    return TerminalEvent{j.at("node_id").get<NodeId>(),
                         payload.at("answer").get<std::string>()};
  }
  throw FormatError("trace: unknown event kind '" + kind + "'");
}

}  // namespace

std::string trace_to_jsonl(const SearchTrace& trace) {
  std::ostringstream os;
  for (const auto& event : trace.events) {
    os << event_to_json(event).dump() << '\n';
  }
  json fin;
  fin["final"] = {{"problem_id", trace.problem_id},
                  {"answer", trace.final_answer},
                  {"tokens", trace.final_tokens},
                  {"pruned_candidates", trace.pruned_candidates},
                  {"solved", trace.solved ? json(*trace.solved) : json(nullptr)}};
  os << fin.dump() << '\n';
  return os.str();
}

SearchTrace trace_from_jsonl(const std::string& jsonl) {
  SearchTrace trace;
  std::istringstream is(jsonl);
  std::string line;
  bool saw_final = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("final")) {
      const json& fin = j["final"];
      trace.problem_id = fin.at("problem_id").get<std::string>();
      trace.final_answer = fin.at("answer").get<std::string>();
      trace.final_tokens = fin.at("tokens").get<std::int64_t>();
      trace.pruned_candidates = fin.at("pruned_candidates").get<std::int64_t>();
      if (!fin.at("solved").is_null()) trace.solved = fin.at("solved").get<bool>();
      saw_final = true;
      continue;
    }
    trace.events.push_back(event_from_json(j));
  }
  if (!saw_final) throw FormatError("trace: missing final summary line");
  return trace;
}

void emit_trace(const SearchTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("emit_trace: cannot open " + path);
  out << trace_to_jsonl(trace);
  if (!out) throw Error("emit_trace: write failed for " + path);
}

SearchTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_trace: cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return trace_from_jsonl(content);
}

std::int64_t fold_expand_tokens(const SearchTrace& trace) {
  std::int64_t total = 0;
  for (const auto& event : trace.events) {
    if (const auto* e = std::get_if<ExpandEvent>(&event)) {
      for (const auto& c : e->candidates) total += c.gen_tokens;
    }
  }
  return total;
}

std::int64_t count_prune_events(const SearchTrace& trace) {
  std::int64_t count = 0;
  for (const auto& event : trace.events) {
    if (std::holds_alternative<PruneEvent>(event)) ++count;
  }
  return count;
}

}  // namespace stepprune::search
