#include "agentflow/evolve.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <regex>
#include <set>

#include "agentflow/graph_json.hpp"
#include "agentflow/mermaid.hpp"
#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::ImageUnderstanding: return "ImageUnderstanding";
    case ErrorCategory::Diagnostic: return "Diagnostic";
    case ErrorCategory::None: return "None";
  }
  return "?";
}

std::string_view to_string(SuggestionKind k) {
  switch (k) {
    case SuggestionKind::Structural: return "Structural";
    case SuggestionKind::Prompt: return "Prompt";
    case SuggestionKind::Infeasible: return "Infeasible";
  }
  return "?";
}

namespace {

std::string in_quotes(std::string_view s) { return "\"" + std::string(s) + "\""; }

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

}  // namespace

std::string structure_to_prose(const WorkflowGraph& g) {
  std::string out = "Mermaid diagram:\n" + to_mermaid(g).code + "\nExecution order:\n";

  // Arm nodes are listed under their fan-out source instead of on their own.
  std::set<std::string> arm_nodes;
  std::map<std::string, std::vector<std::vector<std::string>>> arms_of;
  std::map<std::string, std::string> fusion_of;
  for (const auto& n : g.nodes) {
    for (const auto* e : g.outgoing(n.node_id)) {
      if (e->kind != EdgeKind::ParallelFanOut) continue;
      std::vector<std::string> chain{e->target};
      for (int guard = 0; guard < static_cast<int>(g.nodes.size()); ++guard) {
        auto outs = g.outgoing(chain.back());
        if (outs.size() != 1) break;
        if (outs.front()->kind == EdgeKind::ParallelFanIn) {
          fusion_of[n.node_id] = outs.front()->target;
          break;
        }
        chain.push_back(outs.front()->target);
      }
      arm_nodes.insert(chain.begin(), chain.end());
      arms_of[n.node_id].push_back(std::move(chain));
    }
  }

  // Kahn's order over forward edges, ties by insertion order.
  std::map<std::string, int> indegree;
  for (const auto& n : g.nodes) indegree[n.node_id] = 0;
  for (const auto& e : g.edges)
    if (e.is_forward() && indegree.count(e.target)) ++indegree[e.target];
  auto index = [&](const std::string& id) { return *g.node_index(id); };
  auto cmp = [&](const std::string& a, const std::string& b) { return index(a) > index(b); };
  std::priority_queue<std::string, std::vector<std::string>, decltype(cmp)> ready(cmp);
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.push(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto* e : g.outgoing(id))
      if (e->is_forward() && --indegree[e->target] == 0) ready.push(e->target);
  }

  int number = 0;
  for (const auto& id : order) {
    if (arm_nodes.count(id)) continue;
    const NodeSpec& n = *g.find_node(id);
    out += std::to_string(++number) + ". " + id + " " + in_quotes(n.node_name);
    if (n.kind == NodeKind::Tool) out += " [tool " + n.tool_name + "]";
    if (id == g.entry_node) out += " (entry)";
    if (id == g.output_node) out += " (output)";
    out += "\n";
    std::vector<std::string> branches;
    for (const auto* e : g.outgoing(id)) {
      if (e->kind == EdgeKind::ConditionalBranch)
        branches.push_back(e->branch_label + " -> " + e->target);
      if (e->kind == EdgeKind::LoopBack)
        out += "   loop ≤" + std::to_string(e->max_iterations.value_or(kDefaultMaxIterations)) +
               ": back to " + e->target + " until " + in_quotes(one_line(e->condition)) + "\n";
    }
    if (!branches.empty()) {
      const auto* first = g.outgoing(id).front();
      for (const auto* e : g.outgoing(id))
        if (e->kind == EdgeKind::ConditionalBranch) {
          first = e;
          break;
        }
      out += "   branches on " + in_quotes(one_line(first->condition)) + ": " +
             text::join(branches, "; ") + "\n";
    }
    if (auto it = arms_of.find(id); it != arms_of.end()) {
      out += "   parallel arms:\n";
      auto chains = it->second;
      std::sort(chains.begin(), chains.end(),
                [&](const auto& a, const auto& b) { return index(a.front()) < index(b.front()); });
      for (const auto& chain : chains) {
        std::vector<std::string> names;
        for (const auto& a : chain) names.push_back(a + " " + in_quotes(g.find_node(a)->node_name));
        out += "   - " + text::join(names, " -> ") + "\n";
      }
      out += "   fused at " + fusion_of[id] + "\n";
    }
  }
  return out;
}

namespace {

std::string value_after_colon(const std::string& line) {
  return text::trim(line.substr(line.find(':') + 1));
}

std::string ranking_text(const ExecutionTrace& t) {
  return t.final_ranking.empty() ? "(none)" : text::join(t.final_ranking, ", ");
}

std::string node_outputs(const ExecutionTrace& t) {
  std::string out;
  for (const auto& s : t.steps) out += "[" + s.node_id + "]\n" + s.parsed_output + "\n\n";
  if (!t.error.empty()) out += "[run error]\n" + t.error + "\n";
  return out.empty() ? "(no output)" : out;
}

LlmResponse ask(const LlmClient& llm, const PromptLibrary& prompts, std::string_view name,
                const std::map<std::string, std::string>& values, const ExecLimits& limits) {
  auto [system, human] = prompts.render(name, values);
  LlmRequest req;
  req.system_prompt = std::move(system);
  req.human_prompt = std::move(human);
  req.temperature = limits.temperature;
  req.seed = limits.seed;
  return complete_with_retry(llm, req, limits);
}

std::string tool_list(const ToolRegistry& tools) {
  auto names = tools.names();
  return names.empty() ? "(none)" : text::join(names, ", ");
}

}  // namespace

ErrorReport parse_error_analysis(std::string_view reply, const std::string& case_id,
                                 const WorkflowGraph& graph) {
  ErrorReport r;
  r.case_id = case_id;
  std::optional<ErrorCategory> category;
  for (const auto& raw : text::split(reply, '\n')) {
    std::string line = text::trim(text::replace_all(raw, "**", ""));
    if (line.rfind("- ", 0) == 0) line = line.substr(2);
    const std::string lower = text::to_lower(line);
    if (lower.rfind("category", 0) == 0 && line.find(':') != std::string::npos) {
      auto v = text::normalize(value_after_colon(line));
      std::erase(v, ' ');
      std::erase(v, '_');
      if (v.rfind("imageunderstanding", 0) == 0 || v.rfind("image", 0) == 0)
        category = ErrorCategory::ImageUnderstanding;
      else if (v.rfind("diagnos", 0) == 0)
        category = ErrorCategory::Diagnostic;
    } else if ((lower.rfind("root_cause", 0) == 0 || lower.rfind("root cause", 0) == 0) &&
               line.find(':') != std::string::npos) {
      r.root_cause = value_after_colon(line);
    } else if ((lower.rfind("implicated_nodes", 0) == 0 || lower.rfind("implicated nodes", 0) == 0) &&
               line.find(':') != std::string::npos) {
      for (auto id : text::split(value_after_colon(line), ',')) {
        id = text::trim(id);
        if (!id.empty() && id.front() == '@') id.erase(0, 1);
        if (graph.has_node(id) &&
            std::find(r.implicated_nodes.begin(), r.implicated_nodes.end(), id) ==
                r.implicated_nodes.end())
          r.implicated_nodes.push_back(id);
      }
    }
  }
  if (!category) {
    r.category = ErrorCategory::Diagnostic;
    r.root_cause = std::string(kUnparsedAnalysis);
    r.implicated_nodes.clear();
    return r;
  }
  r.category = *category;
  if (r.root_cause.empty()) r.root_cause = std::string(kUnparsedAnalysis);
  return r;
}

std::vector<ErrorReport> classify_errors(const std::vector<ExecutionTrace>& traces,
                                         const std::vector<CaseRecord>& cases,
                                         const WorkflowGraph& graph, const LlmClient& analyzer,
                                         const PromptLibrary& prompts, const ExecLimits& limits) {
  std::map<std::string, const CaseRecord*> by_id;
  for (const auto& c : cases) by_id[c.case_id] = &c;
  const std::string workflow = structure_to_prose(graph);
  std::vector<ErrorReport> out;
  for (const auto& t : traces) {
    auto it = by_id.find(t.case_id);
    if (it == by_id.end())
      throw Error(ErrorCode::UnknownCase, "trace for unknown case " + t.case_id);
    const CaseRecord& c = *it->second;
    ErrorReport r;
    r.case_id = t.case_id;
    const bool correct = !t.final_ranking.empty() && t.final_ranking.front() == c.label;
    if (correct || t.refused) {
      out.push_back(std::move(r));
      continue;
    }
    try {
      auto reply = ask(analyzer, prompts, "error_analysis",
                       {{"workflow", workflow},
                        {"case_id", c.case_id},
                        {"label", c.label},
                        {"ranking", ranking_text(t)},
                        {"node_outputs", node_outputs(t)}},
                       limits);
      r = reply.refused ? parse_error_analysis("", c.case_id, graph)
                        : parse_error_analysis(reply.text, c.case_id, graph);
    } catch (const Error&) {
      r = parse_error_analysis("", c.case_id, graph);
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool mentions_structure(std::string_view s) {
  static const std::regex structural(
      R"(\b(loop|loops|iterat\w*|branch\w*|conditional\w*|parallel\w*|round[ -]?table|reflexion|cmd|)"
      R"(new (node|agent|step)|add(ing)? (a |an )?(new )?(node|agent|step|expert|critic|verifier)|)"
      R"(insert\w* (a |an )?(new )?(node|agent|step)|remov\w* (the )?(node|agent|step)|)"
      R"(delet\w* (the )?(node|agent|step)|framework)\b)",
      std::regex::icase);
  return std::regex_search(s.begin(), s.end(), structural);
}

std::vector<Suggestion> parse_suggestions(std::string_view reply, int max_suggestions, int iteration) {
  static const std::regex item(R"(^\s*(?:[-*]\s*)?\(?(\d+)[.):]\s*(?:\[\s*(\w+)\s*\]\s*:?\s*)?(.+)$)");
  std::vector<Suggestion> out;
  for (const auto& raw : text::split(reply, '\n')) {
    if (static_cast<int>(out.size()) >= max_suggestions) break;
    std::smatch m;
    std::string line = text::replace_all(raw, "**", "");
    if (!std::regex_match(line, m, item)) continue;
    Suggestion s;
    s.text = text::trim(m[3].str());
    if (s.text.empty()) continue;
    const std::string tag = text::to_lower(m[2].str());
    const bool structural_words = mentions_structure(s.text);
    if (tag == "structural")
      s.kind = SuggestionKind::Structural;
    else if (tag == "prompt")
      s.kind = structural_words ? SuggestionKind::Structural : SuggestionKind::Prompt;
    else
      s.kind = structural_words ? SuggestionKind::Structural : SuggestionKind::Prompt;
    s.suggestion_id = "s" + std::to_string(iteration) + "_" + std::to_string(out.size() + 1);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Suggestion> generate_suggestions(const std::vector<ErrorReport>& reports,
                                             const WorkflowGraph& graph, const LlmClient& analyzer,
                                             const PromptLibrary& prompts, const ToolRegistry& tools,
                                             int max_suggestions, int iteration,
                                             const ExecLimits& limits, std::vector<std::string>* notes) {
  std::vector<std::string> failing;
  std::map<std::pair<std::string, std::string>, std::vector<const ErrorReport*>> grouped;
  std::vector<std::pair<std::string, std::string>> group_order;
  for (const auto& r : reports) {
    if (r.category == ErrorCategory::None) continue;
    failing.push_back(r.case_id);
    auto key = std::make_pair(std::string(to_string(r.category)), r.root_cause);
    if (!grouped.count(key)) group_order.push_back(key);
    grouped[key].push_back(&r);
  }
  if (failing.empty() || max_suggestions < 1) return {};

  std::string causes;
  for (const auto& key : group_order) {
    std::vector<std::string> cases;
    std::set<std::string> nodes;
    for (const auto* r : grouped[key]) {
      cases.push_back(r->case_id);
      nodes.insert(r->implicated_nodes.begin(), r->implicated_nodes.end());
    }
    causes += "- [" + key.first + "] " + key.second + " (cases: " + text::join(cases, ", ");
    if (!nodes.empty()) causes += "; nodes: " + text::join({nodes.begin(), nodes.end()}, ", ");
    causes += ")\n";
  }

  std::vector<Suggestion> out;
  try {
    auto reply = ask(analyzer, prompts, "suggestions",
                     {{"workflow", structure_to_prose(graph)},
                      {"root_causes", causes},
                      {"tools", tool_list(tools)},
                      {"max_suggestions", std::to_string(max_suggestions)}},
                     limits);
    if (reply.refused) {
      if (notes) notes->push_back("suggestion request refused: " + reply.text);
      return {};
    }
    out = parse_suggestions(reply.text, max_suggestions, iteration);
  } catch (const Error& e) {
    if (notes) notes->push_back("suggestion request failed: " + std::string(e.what()));
    return {};
  }
  for (auto& s : out) s.source_errors = failing;
  return out;
}

namespace {

std::vector<std::string> all_matches(std::string_view s, const std::regex& re) {
  std::vector<std::string> out;
  std::string str(s);
  for (auto it = std::sregex_iterator(str.begin(), str.end(), re); it != std::sregex_iterator(); ++it) {
    std::string v = (*it)[1].str();
    while (!v.empty() && (v.back() == '-' || v.back() == '.')) v.pop_back();
    if (!v.empty() && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<std::string> referenced_nodes(std::string_view text) {
  static const std::regex re(R"((?:^|[^\w@])@([A-Za-z0-9_][\w\-.]*))");
  return all_matches(text, re);
}

std::vector<std::string> referenced_tools(std::string_view text) {
  static const std::regex hash(R"((?:^|[^\w#&])#([A-Za-z_][\w\-]*))");
  static const std::regex backtick(R"(\btool\s+`([^`]+)`)", std::regex::icase);
  static const std::regex quoted_name(R"rx("([^"]+)"\s+tool\b)rx", std::regex::icase);
  auto out = all_matches(text, hash);
  for (const auto* re : {&backtick, &quoted_name})
    for (auto& v : all_matches(text, *re))
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

std::vector<Suggestion> filter_suggestions(std::vector<Suggestion> suggestions,
                                           const WorkflowGraph& graph, const ToolRegistry& tools,
                                           const LlmClient& analyzer, const PromptLibrary& prompts,
                                           const ExecLimits& limits, std::vector<std::string>* notes) {
  std::string workflow;
  for (auto& s : suggestions) {
    if (s.kind == SuggestionKind::Infeasible) continue;
    for (const auto& t : referenced_tools(s.text))
      if (!tools.contains(t)) {
        s.kind = SuggestionKind::Infeasible;
        s.infeasible_reason = "unknown tool " + t;
        break;
      }
    if (s.kind == SuggestionKind::Infeasible) continue;
    for (const auto& n : referenced_nodes(s.text))
      if (!graph.has_node(n)) {
        s.kind = SuggestionKind::Infeasible;
        s.infeasible_reason = "unknown node " + n;
        break;
      }
    if (s.kind == SuggestionKind::Infeasible) continue;
    if (workflow.empty()) workflow = structure_to_prose(graph);
    try {
      auto reply = ask(analyzer, prompts, "feasibility",
                       {{"workflow", workflow}, {"tools", tool_list(tools)}, {"suggestion", s.text}},
                       limits);
      std::string words;
      for (char ch : reply.text) words += std::isalpha(static_cast<unsigned char>(ch)) ? ch : ' ';
      auto parts = text::split(text::normalize(words), ' ');
      if (!reply.refused && !parts.empty() && parts.front() == "no") {
        s.kind = SuggestionKind::Infeasible;
        s.infeasible_reason = "feasibility check answered no";
      }
    } catch (const Error& e) {
      if (notes) notes->push_back("feasibility check failed for " + s.suggestion_id + ", kept: " + e.what());
    }
  }
  return suggestions;
}

OpKind infer_op_kind(const Suggestion& s) {
  if (s.kind == SuggestionKind::Prompt) return OpKind::ModifyPrompts;
  auto has = [&](const char* pattern) {
    return std::regex_search(s.text, std::regex(pattern, std::regex::icase));
  };
  if (has(R"(\b(round[ -]?table|reflexion|cmd|chain[ -]of[ -]thought|framework)\b)"))
    return OpKind::ExpandFramework;
  if (has(R"(\bparallel\w*)")) return OpKind::AddParallel;
  if (has(R"(\b(loop\w*|iterat\w*|repeat\w*)\b)")) return OpKind::AddLoop;
  if (has(R"(\b(branch\w*|conditional\w*|route|routing)\b)")) return OpKind::AddConditional;
  if (has(R"(\b(remov\w*|delet\w*|drop)\b)")) return OpKind::RemoveNode;
  return OpKind::AddNode;
}

namespace {

std::string node_prompt_listing(const WorkflowGraph& g) {
  std::string out;
  for (const auto& n : g.nodes) {
    if (n.kind != NodeKind::Basic) continue;
    out += "[" + n.node_id + "]\nsystem_prompt: " + n.system_prompt + "\nhuman_prompt: " +
           n.human_prompt + "\n\n";
  }
  return out;
}

json extract_json_object(std::string_view reply) {
  size_t open = reply.find('{');
  size_t close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw Error(ErrorCode::ReformulationError, "reply contains no JSON object");
  try {
    return json::parse(reply.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ReformulationError, std::string("reply is not valid JSON: ") + e.what());
  }
}

}  // namespace

WorkflowOperation reformulate(const Suggestion& suggestion, const WorkflowGraph& graph,
                              const LlmClient& analyzer, const PromptLibrary& prompts,
                              const ExecLimits& limits) {
  if (suggestion.kind == SuggestionKind::Infeasible)
    throw Error(ErrorCode::ReformulationError, "infeasible suggestions are not reformulated");
  const OpKind kind = infer_op_kind(suggestion);
  LlmResponse reply;
  try {
    if (kind == OpKind::ModifyPrompts) {
      reply = ask(analyzer, prompts, "reformulate_prompt",
                  {{"workflow", structure_to_prose(graph)},
                   {"node_prompts", node_prompt_listing(graph)},
                   {"suggestion", suggestion.text},
                   {"schema", payload_schema(kind)}},
                  limits);
    } else {
      reply = ask(analyzer, prompts, "reformulate_structural",
                  {{"workflow", structure_to_prose(graph)},
                   {"suggestion", suggestion.text},
                   {"op_kind", std::string(to_string(kind))},
                   {"schema", payload_schema(kind)}},
                  limits);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ReformulationError, std::string("backend: ") + e.what());
  }
  if (reply.refused) throw Error(ErrorCode::ReformulationError, "reformulation refused: " + reply.text);

  json j = extract_json_object(reply.text);
  if (j.is_object()) j["origin"] = "Suggestion";
  WorkflowOperation op;
  try {
    op = operation_from_json(j);
    check_payload(op);
  } catch (const Error& e) {
    throw Error(ErrorCode::ReformulationError,
                std::string(to_string(e.code())) + ": " + e.what());
  }
  const bool prompt_op = op.op_kind == OpKind::ModifyPrompts;
  if (prompt_op != (suggestion.kind == SuggestionKind::Prompt))
    throw Error(ErrorCode::ReformulationError,
                std::string(to_string(suggestion.kind)) + " suggestion produced a " +
                    std::string(to_string(op.op_kind)) + " operation");
  op.origin = OpOrigin::Suggestion;
  return op;
}

std::string checkpoint_name(int iteration, std::int64_t version) {
  return "checkpoints/iter_" + std::to_string(iteration) + "_v" + std::to_string(version) + ".json";
}

namespace {

Accuracy accuracy_of(const EvaluationReport& r) { return {r.top(1), r.top(3), r.top(5)}; }

Accuracy validate_on(const WorkflowGraph& g, const std::vector<CaseRecord>& val,
                     const EvolveBackends& b, const EvolveConfig& cfg) {
  EvalConfig ec = cfg.eval;
  for (int k : {1, 3, 5})
    if (std::find(ec.ks.begin(), ec.ks.end(), k) == ec.ks.end()) ec.ks.push_back(k);
  ec.cons_n = 0;
  return accuracy_of(evaluate(g, val, b.workflow, b.tools, ec));
}

void write_checkpoint(const WorkflowGraph& g, IterationRecord& rec, const EvolveConfig& cfg) {
  rec.checkpoint = checkpoint_name(rec.iteration, g.version);
  if (!cfg.output_dir.empty()) save_graph(g, cfg.output_dir / rec.checkpoint);
}

}  // namespace

StepResult evolve_step(const WorkflowGraph& graph, int iteration,
                       const std::vector<CaseRecord>& batch, const std::vector<CaseRecord>& val,
                       const EvolveBackends& b, const EvolveConfig& cfg) {
  const ExecLimits& limits = cfg.eval.limits;
  IterationRecord rec;
  rec.iteration = iteration;
  rec.graph_version_before = graph.version;
  for (const auto& c : batch) rec.batch_case_ids.push_back(c.case_id);

  auto traces = execute_all(graph, batch, b.workflow, b.tools, limits, cfg.eval.concurrency);
  if (!cfg.output_dir.empty())
    text::write_file(cfg.output_dir / ("traces/iter_" + std::to_string(iteration) + ".jsonl"),
                     traces_to_jsonl(traces, false));

  rec.error_reports = classify_errors(traces, batch, graph, b.analyzer, b.prompts, limits);
  auto suggestions = generate_suggestions(rec.error_reports, graph, b.analyzer, b.prompts, b.tools,
                                          cfg.max_suggestions, iteration, limits, &rec.notes);
  rec.suggestions = filter_suggestions(std::move(suggestions), graph, b.tools, b.analyzer, b.prompts,
                                       limits, &rec.notes);

  std::vector<std::pair<const Suggestion*, WorkflowOperation>> ops;
  for (const auto& s : rec.suggestions) {
    if (s.kind == SuggestionKind::Infeasible) continue;
    try {
      ops.emplace_back(&s, reformulate(s, graph, b.analyzer, b.prompts, limits));
    } catch (const Error& e) {
      rec.dropped_suggestions.push_back({s.suggestion_id, e.what()});
    }
  }
  std::stable_partition(ops.begin(), ops.end(), [](const auto& p) {
    return p.second.op_kind == OpKind::ModifyPrompts;
  });

  WorkflowGraph current = graph;
  for (const auto& [s, op] : ops) {
    try {
      current = apply_operation(current, op);
      rec.applied_operations.push_back({s->suggestion_id, op, current.version});
    } catch (const GraphError& e) {
      rec.rejected_operations.push_back(
          {s->suggestion_id, op, std::string(to_string(e.code())), e.what(), e.report().rule_ids()});
    } catch (const Error& e) {
      rec.rejected_operations.push_back(
          {s->suggestion_id, op, std::string(to_string(e.code())), e.what(), {}});
    }
  }
  rec.graph_version_after = current.version;
  rec.validation_accuracy = validate_on(current, val, b, cfg);
  write_checkpoint(current, rec, cfg);
  return {std::move(current), std::move(rec)};
}

EvolutionResult run_evolution(const WorkflowGraph& initial, const std::vector<CaseRecord>& train,
                              const std::vector<CaseRecord>& val, const EvolveBackends& b,
                              const EvolveConfig& cfg) {
  const auto& conv = cfg.convergence;
  if (conv.epsilon <= 0 || conv.window < 1 || conv.max_iterations < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid convergence settings");
  EvolutionResult result{initial, 0, {}};
  if (conv.max_iterations == 0) return result;
  if (val.empty()) throw Error(ErrorCode::InvalidArgument, "validation split is empty");
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "training split is empty");
  if (auto report = validate_graph(initial); !report.ok())
    throw GraphError(ErrorCode::ValidationRejected, "initial graph is invalid", report);

  auto flush = [&] {
    if (cfg.output_dir.empty()) return;
    std::string log;
    for (const auto& r : result.records) log += to_json(r).dump() + "\n";
    text::write_file(cfg.output_dir / "evolution_log.jsonl", log);
    text::write_file(cfg.output_dir / "accuracy.csv", accuracy_csv(result.records));
  };

  IterationRecord base;
  base.iteration = 0;
  base.graph_version_before = base.graph_version_after = initial.version;
  base.validation_accuracy = validate_on(initial, val, b, cfg);
  write_checkpoint(initial, base, cfg);
  result.records.push_back(std::move(base));
  flush();

  WorkflowGraph current = initial;
  double best = result.records.front().validation_accuracy.top1;
  double previous = best;
  int flat = 0;
  const size_t n = train.size();
  const size_t batch_size = cfg.batch_size > 0 ? std::min(static_cast<size_t>(cfg.batch_size), n) : n;
  for (int it = 1; it <= conv.max_iterations; ++it) {
    std::vector<CaseRecord> batch;
    const size_t start = (static_cast<size_t>(it - 1) * batch_size) % n;
    for (size_t i = 0; i < batch_size; ++i) batch.push_back(train[(start + i) % n]);

    auto step = evolve_step(current, it, batch, val, b, cfg);
    current = std::move(step.graph);
    const double top1 = step.record.validation_accuracy.top1;
    result.records.push_back(std::move(step.record));
    flush();
    if (top1 > best) {
      best = top1;
      result.best_iteration = it;
      result.final_graph = current;
    }
    flat = top1 - previous < conv.epsilon ? flat + 1 : 0;
    previous = top1;
    if (flat >= conv.window) break;
  }
  if (!cfg.output_dir.empty()) save_graph(result.final_graph, cfg.output_dir / "best.json");
  return result;
}

json to_json(const ErrorReport& r) {
  return {{"case_id", r.case_id},
          {"category", to_string(r.category)},
          {"root_cause", r.root_cause},
          {"implicated_nodes", r.implicated_nodes}};
}

json to_json(const Suggestion& s) {
  json j{{"suggestion_id", s.suggestion_id},
         {"text", s.text},
         {"kind", to_string(s.kind)},
         {"source_errors", s.source_errors}};
  if (!s.infeasible_reason.empty()) j["infeasible_reason"] = s.infeasible_reason;
  return j;
}

json to_json(const IterationRecord& r) {
  json reports = json::array(), suggestions = json::array(), applied = json::array(),
       rejected = json::array(), dropped = json::array();
  for (const auto& e : r.error_reports) reports.push_back(to_json(e));
  for (const auto& s : r.suggestions) suggestions.push_back(to_json(s));
  for (const auto& a : r.applied_operations)
    applied.push_back({{"suggestion_id", a.suggestion_id},
                       {"operation", to_json(a.op)},
                       {"version_after", a.version_after}});
  for (const auto& x : r.rejected_operations)
    rejected.push_back({{"suggestion_id", x.suggestion_id},
                        {"operation", to_json(x.op)},
                        {"error_code", x.error_code},
                        {"reason", x.reason},
                        {"rule_ids", x.rule_ids}});
  for (const auto& d : r.dropped_suggestions)
    dropped.push_back({{"suggestion_id", d.suggestion_id}, {"reason", d.reason}});
  return {{"iteration", r.iteration},
          {"graph_version_before", r.graph_version_before},
          {"graph_version_after", r.graph_version_after},
          {"batch_case_ids", r.batch_case_ids},
          {"error_reports", reports},
          {"suggestions", suggestions},
          {"applied_operations", applied},
          {"rejected_operations", rejected},
          {"dropped_suggestions", dropped},
          {"validation_accuracy",
           {{"top1", r.validation_accuracy.top1},
            {"top3", r.validation_accuracy.top3},
            {"top5", r.validation_accuracy.top5}}},
          {"checkpoint", r.checkpoint},
          {"notes", r.notes}};
}

std::string accuracy_csv(const std::vector<IterationRecord>& records) {
  std::string out = "iteration,top1,top3,top5\n";
  for (const auto& r : records)
    out += std::to_string(r.iteration) + "," + text::fixed(r.validation_accuracy.top1, 4) + "," +
           text::fixed(r.validation_accuracy.top3, 4) + "," +
           text::fixed(r.validation_accuracy.top5, 4) + "\n";
  return out;
}

}  // namespace agentflow
