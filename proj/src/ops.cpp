#include "agentflow/ops.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "agentflow/graph_json.hpp"
#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::AddNode: return "AddNode";
    case OpKind::RemoveNode: return "RemoveNode";
    case OpKind::ModifyPrompts: return "ModifyPrompts";
    case OpKind::AddConditional: return "AddConditional";
    case OpKind::AddLoop: return "AddLoop";
    case OpKind::AddParallel: return "AddParallel";
    case OpKind::ExpandFramework: return "ExpandFramework";
  }
  return "?";
}

std::string_view to_string(OpOrigin origin) {
  switch (origin) {
    case OpOrigin::Seed: return "Seed";
    case OpOrigin::Suggestion: return "Suggestion";
    case OpOrigin::Manual: return "Manual";
  }
  return "?";
}

std::optional<OpKind> parse_op_kind(std::string_view s) {
  for (auto k : {OpKind::AddNode, OpKind::RemoveNode, OpKind::ModifyPrompts, OpKind::AddConditional,
                 OpKind::AddLoop, OpKind::AddParallel, OpKind::ExpandFramework})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<OpOrigin> parse_op_origin(std::string_view s) {
  for (auto o : {OpOrigin::Seed, OpOrigin::Suggestion, OpOrigin::Manual})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::ChainOfThought: return "ChainOfThought";
    case TemplateId::Reflexion: return "Reflexion";
    case TemplateId::RoundTable: return "RoundTable";
    case TemplateId::CMD: return "CMD";
  }
  return "?";
}

std::optional<TemplateId> parse_template_id(std::string_view s) {
  for (auto t : {TemplateId::ChainOfThought, TemplateId::Reflexion, TemplateId::RoundTable,
                 TemplateId::CMD})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

json to_json(const WorkflowOperation& op) {
  return json{{"op_kind", to_string(op.op_kind)},
              {"payload", op.payload},
              {"origin", to_string(op.origin)}};
}

WorkflowOperation operation_from_json(const json& j) {
  reject_unknown_fields(j, {"op_kind", "payload", "origin"}, "operation");
  WorkflowOperation op;
  auto kind = j.find("op_kind");
  if (kind == j.end() || !kind->is_string() || !parse_op_kind(kind->get<std::string>()))
    throw Error(ErrorCode::ParseError, "operation: missing or unknown op_kind");
  op.op_kind = *parse_op_kind(kind->get<std::string>());
  auto payload = j.find("payload");
  if (payload == j.end() || !payload->is_object())
    throw Error(ErrorCode::ParseError, "operation: payload must be an object");
  op.payload = *payload;
  if (auto origin = j.find("origin"); origin != j.end()) {
    if (!origin->is_string() || !parse_op_origin(origin->get<std::string>()))
      throw Error(ErrorCode::ParseError, "operation: origin must be Seed, Suggestion or Manual");
    op.origin = *parse_op_origin(origin->get<std::string>());
  }
  return op;
}

namespace {

[[noreturn]] void incomplete(OpKind kind, const std::string& what) {
  throw Error(ErrorCode::IncompletePayload, std::string(to_string(kind)) + " payload: " + what);
}

const json& field(const json& p, OpKind kind, const char* key) {
  auto it = p.find(key);
  if (it == p.end() || it->is_null()) incomplete(kind, std::string("missing '") + key + "'");
  return *it;
}

std::string str_field(const json& p, OpKind kind, const char* key) {
  const json& v = field(p, kind, key);
  if (!v.is_string()) incomplete(kind, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> opt_str(const json& p, OpKind kind, const char* key) {
  auto it = p.find(key);
  if (it == p.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) incomplete(kind, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

void only_fields(const json& p, OpKind kind, std::initializer_list<std::string_view> allowed) {
  try {
    reject_unknown_fields(p, allowed, "payload");
  } catch (const Error& e) {
    incomplete(kind, e.what());
  }
}

NodeSpec node_field(const json& p, OpKind kind, const char* key) {
  const json& v = field(p, kind, key);
  if (!v.is_object()) incomplete(kind, std::string("'") + key + "' must be a node object");
  for (const char* k : {"node_id", "kind", "node_name", "description"})
    if (!v.contains(k)) incomplete(kind, std::string("'") + key + "' is missing '" + k + "'");
  try {
    return node_from_json(v);
  } catch (const Error& e) {
    incomplete(kind, e.what());
  }
}

std::vector<Branch> branches_field(const json& p) {
  const json& v = field(p, OpKind::AddConditional, "branches");
  if (!v.is_array()) incomplete(OpKind::AddConditional, "'branches' must be an array");
  std::vector<Branch> out;
  for (const auto& b : v) {
    if (!b.is_object()) incomplete(OpKind::AddConditional, "each branch must be an object");
    out.push_back(Branch{str_field(b, OpKind::AddConditional, "branch_label"),
                         str_field(b, OpKind::AddConditional, "target")});
  }
  return out;
}

int int_field(const json& p, OpKind kind, const char* key, int fallback) {
  auto it = p.find(key);
  if (it == p.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) incomplete(kind, std::string("'") + key + "' must be an integer");
  return it->get<int>();
}

FrameworkTemplate template_field(const json& p) {
  constexpr auto kind = OpKind::ExpandFramework;
  const json& t = field(p, kind, "template");
  if (!t.is_object()) incomplete(kind, "'template' must be an object");
  only_fields(t, kind, {"template_id", "expert_roles", "rounds", "max_reflections"});
  auto id = parse_template_id(str_field(t, kind, "template_id"));
  if (!id)
    throw Error(ErrorCode::UnsupportedTemplate,
                "unsupported framework template '" + t.at("template_id").get<std::string>() + "'");
  FrameworkTemplate tpl;
  tpl.template_id = *id;
  if (*id == TemplateId::RoundTable || *id == TemplateId::CMD) {
    const json& roles = field(t, kind, "expert_roles");
    if (!roles.is_array()) incomplete(kind, "'expert_roles' must be an array of strings");
    for (const auto& r : roles) {
      if (!r.is_string()) incomplete(kind, "'expert_roles' must be an array of strings");
      tpl.expert_roles.push_back(r.get<std::string>());
    }
    tpl.rounds = int_field(t, kind, "rounds", 2);
  }
  tpl.max_reflections = int_field(t, kind, "max_reflections", kDefaultMaxIterations);
  return tpl;
}

Placement placement_field(const json& p) {
  constexpr auto kind = OpKind::AddNode;
  Placement pl;
  pl.anchor = str_field(p, kind, "anchor");
  auto pos = opt_str(p, kind, "position").value_or("after");
  if (pos == "after")
    pl.side = Placement::Side::After;
  else if (pos == "before")
    pl.side = Placement::Side::Before;
  else
    incomplete(kind, "'position' must be \"after\" or \"before\"");
  return pl;
}

// Structural failures from the editor become ValidationRejected carrying the
// report; precondition failures pass through untouched.
template <typename Fn>
WorkflowGraph rejecting(Fn&& fn) {
  try {
    return fn();
  } catch (const GraphError& e) {
    if (e.report().ok()) throw;
    throw GraphError(ErrorCode::ValidationRejected, e.what(), e.report());
  }
}

void require_node(const WorkflowGraph& g, std::string_view id) {
  if (!g.has_node(id))
    throw GraphError(ErrorCode::NodeNotFound, "node '" + std::string(id) + "' not found");
}

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else if (!out.empty() && out.back() != '_')
      out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "expert" : out;
}

std::string placeholder(std::string_view id) { return "{{" + std::string(id) + "}}"; }

std::string opinion_list(const GraphEditor& ed, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids)
    out += "- " + ed.view().find_node(id)->node_name + ": " + placeholder(id) + "\n";
  return out;
}

constexpr std::string_view kCotMarker = "Think step by step";
constexpr std::string_view kRankingInstruction =
    "Return the five most likely diagnoses from the candidate list as a numbered list, most "
    "likely first.";

// Builds one sequential discussion chain (used by CMD groups and by the
// later RoundTable rounds). Returns the ids in order.
std::vector<std::string> discussion_chain(GraphEditor& ed, const std::string& base,
                                          const std::vector<std::string>& roles, int first_round,
                                          int last_round, std::vector<std::string> prior) {
  std::vector<std::string> ids;
  for (int r = first_round; r <= last_round; ++r) {
    for (const auto& role : roles) {
      std::string id = ed.fresh_id(base + "_r" + std::to_string(r) + "_" + slug(role));
      std::string human = "Image: {{image_ref}}\nCandidate diagnoses: {{labels}}\n";
      if (prior.empty()) {
        human += "\nGive your assessment of the case from the perspective of a " + role +
                 ". End with a numbered list of the most likely diagnoses.";
      } else {
        human += "Discussion so far:\n" + opinion_list(ed, prior) +
                 "\nRefine your opinion as the " + role +
                 ", using the reasoning of the other experts as context. End with a numbered "
                 "list of the most likely diagnoses.";
      }
      ed.insert_node(NodeSpec::basic(
          id, role + " (round " + std::to_string(r) + ")",
          "Round " + std::to_string(r) + " opinion of the " + role + ".",
          "You are a " + role + " taking part in a case discussion with other specialists.",
          human));
      if (!ids.empty()) ed.connect(EdgeSpec::sequential(ids.back(), id));
      ids.push_back(id);
      prior.push_back(id);
    }
  }
  return ids;
}

NodeSpec summary_node(const GraphEditor& ed, std::string id, std::string name,
                      std::string description, const std::vector<std::string>& inputs) {
  return NodeSpec::basic(std::move(id), std::move(name), std::move(description),
                         "You moderate a panel of medical experts and state their joint conclusion.",
                         "Candidate diagnoses: {{labels}}\nExpert opinions:\n" +
                             opinion_list(ed, inputs) +
                             "\nCombine these opinions into one final answer. " +
                             std::string(kRankingInstruction));
}

WorkflowGraph expand_round_table(const WorkflowGraph& g, std::string_view anchor,
                                 const FrameworkTemplate& tpl) {
  if (tpl.expert_roles.size() < 2 || tpl.rounds < 1)
    throw Error(ErrorCode::PreconditionFailed,
                "RoundTable needs at least two expert roles and one round");
  GraphEditor ed(g);
  const std::string a(anchor);
  const std::string base = a + "_rt";

  std::vector<std::string> first_round;
  for (const auto& role : tpl.expert_roles) {
    std::string id = ed.fresh_id(base + "_r1_" + slug(role));
    ed.insert_node(NodeSpec::basic(
        id, role + " (round 1)", "Initial opinion of the " + role + ".",
        "You are a " + role + " taking part in a round-table case discussion.",
        "Image: {{image_ref}}\nCandidate diagnoses: {{labels}}\nPrevious analysis: " +
            placeholder(a) + "\n\nGive your initial assessment from the perspective of a " + role +
            ". End with a numbered list of the most likely diagnoses."));
    first_round.push_back(id);
  }
  std::vector<std::string> later;
  if (tpl.rounds >= 2)
    later = discussion_chain(ed, base, tpl.expert_roles, 2, tpl.rounds, first_round);
  const std::vector<std::string> final_round =
      later.empty() ? first_round
                    : std::vector<std::string>(later.end() - static_cast<long>(tpl.expert_roles.size()),
                                               later.end());
  const std::string agg = ed.fresh_id(base + "_aggregator");
  ed.insert_node(summary_node(ed, agg, "Round-table aggregator",
                              "Merges the final round of expert opinions into one ranking.",
                              final_round));

  ed.move_outgoing(a, agg);
  const std::string fusion = later.empty() ? agg : later.front();
  for (const auto& id : first_round) {
    ed.connect(EdgeSpec::fan_out(a, id));
    ed.connect(EdgeSpec::fan_in(id, fusion));
  }
  if (!later.empty()) ed.connect(EdgeSpec::sequential(later.back(), agg));
  if (g.output_node == a) ed.set_output(agg);
  return ed.commit();
}

WorkflowGraph expand_cmd(const WorkflowGraph& g, std::string_view anchor,
                         const FrameworkTemplate& tpl) {
  if (tpl.expert_roles.size() < 2 || tpl.rounds < 1)
    throw Error(ErrorCode::PreconditionFailed, "CMD needs at least two expert roles and one round");
  GraphEditor ed(g);
  const std::string a(anchor);
  std::vector<std::string> summaries;
  std::vector<std::pair<std::string, std::string>> arms;  // head, tail
  for (const char* group : {"a", "b"}) {
    const std::string base = a + "_cmd_" + group;
    auto chain = discussion_chain(ed, base, tpl.expert_roles, 1, tpl.rounds, {});
    std::vector<std::string> last(chain.end() - static_cast<long>(tpl.expert_roles.size()),
                                  chain.end());
    std::string sum = ed.fresh_id(base + "_summary");
    ed.insert_node(summary_node(ed, sum, std::string("Group ") + group + " summary",
                                std::string("Conclusion of discussion group ") + group + ".", last));
    ed.connect(EdgeSpec::sequential(chain.back(), sum));
    summaries.push_back(sum);
    arms.emplace_back(chain.front(), sum);
  }
  const std::string merge = ed.fresh_id(a + "_cmd_merge");
  ed.insert_node(summary_node(ed, merge, "Group merge",
                              "Merges the conclusions of the two discussion groups.", summaries));
  ed.move_outgoing(a, merge);
  for (const auto& [head, tail] : arms) {
    ed.connect(EdgeSpec::fan_out(a, head));
    ed.connect(EdgeSpec::fan_in(tail, merge));
  }
  if (g.output_node == a) ed.set_output(merge);
  return ed.commit();
}

WorkflowGraph expand_cot(const WorkflowGraph& g, std::string_view anchor) {
  GraphEditor ed(g);
  NodeSpec& n = ed.node(anchor);
  if (n.kind != NodeKind::Basic)
    throw Error(ErrorCode::PreconditionFailed, "ChainOfThought needs a basic node");
  if (text::contains(n.human_prompt, kCotMarker))
    throw Error(ErrorCode::PreconditionFailed,
                "node '" + n.node_id + "' already reasons step by step");
  n.system_prompt += " Reason carefully and explicitly before committing to an answer.";
  n.human_prompt += "\n\n" + std::string(kCotMarker) +
                    ": first describe the visible findings, then weigh each candidate diagnosis "
                    "against them, and only then give your final answer.";
  return ed.commit();
}

WorkflowGraph expand_reflexion(const WorkflowGraph& g, std::string_view anchor,
                               const FrameworkTemplate& tpl) {
  if (tpl.max_reflections < 1)
    throw Error(ErrorCode::PreconditionFailed, "Reflexion needs max_reflections >= 1");
  GraphEditor ed(g);
  const std::string a(anchor);
  NodeSpec& n = ed.node(a);
  if (n.kind != NodeKind::Basic)
    throw Error(ErrorCode::PreconditionFailed, "Reflexion needs a basic node to revise");
  n.human_prompt += "\n\nReviewer feedback on your previous attempt (\"none\" on the first "
                    "attempt): {{loop_feedback}}";
  const std::string critic = ed.fresh_id(a + "_critic");
  ed.insert_node(NodeSpec::basic(
      critic, "Critic", "Reviews the answer and either approves it or asks for a revision.",
      "You are a meticulous reviewer who checks diagnostic reasoning for mistakes.",
      "Candidate diagnoses: {{labels}}\nAnswer under review:\n" + placeholder(a) +
          "\n\nPoint out errors or overlooked findings. If the answer is sound, say that you "
          "approve it."));
  ed.move_outgoing(a, critic);
  ed.connect(EdgeSpec::sequential(a, critic));
  ed.connect(EdgeSpec::loop_back(critic, a, "critic approves", tpl.max_reflections));
  return ed.commit();
}

}  // namespace

WorkflowGraph modify_prompts(const WorkflowGraph& graph, std::string_view node_id,
                             std::optional<std::string> system_prompt,
                             std::optional<std::string> human_prompt) {
  require_node(graph, node_id);
  if (!system_prompt && !human_prompt)
    throw Error(ErrorCode::IncompletePayload, "ModifyPrompts needs a new system or human prompt");
  return rejecting([&] {
    GraphEditor ed(graph);
    NodeSpec& n = ed.node(node_id);
    if (n.kind != NodeKind::Basic)
      throw Error(ErrorCode::PreconditionFailed,
                  "node '" + n.node_id + "' is a tool node and has no prompts");
    if (system_prompt) n.system_prompt = *system_prompt;
    if (human_prompt) n.human_prompt = *human_prompt;
    return ed.commit();
  });
}

WorkflowGraph add_conditional(const WorkflowGraph& graph, std::string_view source,
                              const std::vector<Branch>& branches, std::string_view condition) {
  require_node(graph, source);
  const bool has_default = std::any_of(branches.begin(), branches.end(), [](const Branch& b) {
    return b.branch_label == kDefaultBranch;
  });
  if (branches.size() < 2 || !has_default)
    throw Error(ErrorCode::NeedDefaultBranch,
                "a conditional needs at least two branches, one labelled \"default\"");
  std::set<std::string> targets, labels;
  for (const auto& b : branches) {
    require_node(graph, b.target);
    if (!targets.insert(b.target).second || !labels.insert(b.branch_label).second)
      throw Error(ErrorCode::PreconditionFailed, "branch targets and labels must be distinct");
  }
  return rejecting([&] {
    GraphEditor ed(graph);
    for (const auto* e : graph.outgoing(source))
      if (e->kind == EdgeKind::Sequential) ed.disconnect(e->source, e->target);
    for (const auto& b : branches)
      ed.connect(EdgeSpec::branch(std::string(source), b.target, b.branch_label,
                                  std::string(condition)));
    return ed.commit();
  });
}

WorkflowGraph add_loop(const WorkflowGraph& graph, std::string_view body_entry,
                       std::string_view body_exit, std::string_view exit_condition,
                       int max_iterations) {
  require_node(graph, body_entry);
  require_node(graph, body_exit);
  if (max_iterations < 1)
    throw Error(ErrorCode::PreconditionFailed, "a loop needs max_iterations >= 1");
  return rejecting([&] {
    GraphEditor ed(graph);
    ed.connect(EdgeSpec::loop_back(std::string(body_exit), std::string(body_entry),
                                   std::string(exit_condition), max_iterations));
    return ed.commit();
  });
}

WorkflowGraph add_parallel(const WorkflowGraph& graph, std::string_view source,
                           std::vector<NodeSpec> arms, NodeSpec fusion) {
  require_node(graph, source);
  if (arms.size() < 2) throw Error(ErrorCode::PreconditionFailed, "a parallel block needs >= 2 arms");
  if (fusion.kind != NodeKind::Basic)
    throw Error(ErrorCode::PreconditionFailed, "the fusion node must be a basic node");
  return rejecting([&] {
    GraphEditor ed(graph);
    std::string missing;
    for (const auto& arm : arms) {
      if (!text::contains(fusion.human_prompt, placeholder(arm.node_id)))
        missing += "- " + arm.node_name + ": " + placeholder(arm.node_id) + "\n";
    }
    if (!missing.empty()) fusion.human_prompt += "\n\nParallel findings:\n" + missing;
    const std::string src(source);
    const std::string fusion_id = fusion.node_id;
    std::vector<std::string> arm_ids;
    for (auto& arm : arms) {
      arm_ids.push_back(arm.node_id);
      ed.insert_node(std::move(arm));
    }
    ed.insert_node(std::move(fusion));
    ed.move_outgoing(src, fusion_id);
    for (const auto& id : arm_ids) {
      ed.connect(EdgeSpec::fan_out(src, id));
      ed.connect(EdgeSpec::fan_in(id, fusion_id));
    }
    if (graph.output_node == src) ed.set_output(fusion_id);
    return ed.commit();
  });
}

WorkflowGraph expand_framework(const WorkflowGraph& graph, std::string_view anchor,
                               const FrameworkTemplate& tpl) {
  require_node(graph, anchor);
  return rejecting([&] {
    switch (tpl.template_id) {
      case TemplateId::ChainOfThought: return expand_cot(graph, anchor);
      case TemplateId::Reflexion: return expand_reflexion(graph, anchor, tpl);
      case TemplateId::RoundTable: return expand_round_table(graph, anchor, tpl);
      case TemplateId::CMD: return expand_cmd(graph, anchor, tpl);
    }
    throw Error(ErrorCode::UnsupportedTemplate, "unsupported framework template");
  });
}

void check_payload(const WorkflowOperation& op) {
  const json& p = op.payload;
  if (!p.is_object()) incomplete(op.op_kind, "payload must be an object");
  switch (op.op_kind) {
    case OpKind::AddNode:
      only_fields(p, op.op_kind, {"node", "anchor", "position"});
      node_field(p, op.op_kind, "node");
      placement_field(p);
      break;
    case OpKind::RemoveNode:
      only_fields(p, op.op_kind, {"node_id"});
      str_field(p, op.op_kind, "node_id");
      break;
    case OpKind::ModifyPrompts: {
      only_fields(p, op.op_kind, {"node_id", "system_prompt", "human_prompt"});
      str_field(p, op.op_kind, "node_id");
      auto s = opt_str(p, op.op_kind, "system_prompt");
      auto h = opt_str(p, op.op_kind, "human_prompt");
      if (!s && !h) incomplete(op.op_kind, "needs system_prompt or human_prompt");
      break;
    }
    case OpKind::AddConditional:
      only_fields(p, op.op_kind, {"source", "condition", "branches"});
      str_field(p, op.op_kind, "source");
      str_field(p, op.op_kind, "condition");
      branches_field(p);
      break;
    case OpKind::AddLoop:
      only_fields(p, op.op_kind, {"body_entry", "body_exit", "exit_condition", "max_iterations"});
      str_field(p, op.op_kind, "body_entry");
      str_field(p, op.op_kind, "body_exit");
      str_field(p, op.op_kind, "exit_condition");
      int_field(p, op.op_kind, "max_iterations", kDefaultMaxIterations);
      break;
    case OpKind::AddParallel: {
      only_fields(p, op.op_kind, {"source", "arms", "fusion"});
      str_field(p, op.op_kind, "source");
      const json& arms = field(p, op.op_kind, "arms");
      if (!arms.is_array()) incomplete(op.op_kind, "'arms' must be an array of nodes");
      for (size_t i = 0; i < arms.size(); ++i) {
        json wrapper{{"arm", arms[i]}};
        node_field(wrapper, op.op_kind, "arm");
      }
      node_field(p, op.op_kind, "fusion");
      break;
    }
    case OpKind::ExpandFramework:
      only_fields(p, op.op_kind, {"anchor", "template"});
      str_field(p, op.op_kind, "anchor");
      template_field(p);
      break;
  }
}

WorkflowGraph apply_operation(const WorkflowGraph& graph, const WorkflowOperation& op) {
  check_payload(op);
  const json& p = op.payload;
  switch (op.op_kind) {
    case OpKind::AddNode:
      return rejecting(
          [&] { return add_node(graph, node_field(p, op.op_kind, "node"), placement_field(p)); });
    case OpKind::RemoveNode:
      return rejecting([&] { return remove_node(graph, str_field(p, op.op_kind, "node_id")); });
    case OpKind::ModifyPrompts:
      return modify_prompts(graph, str_field(p, op.op_kind, "node_id"),
                            opt_str(p, op.op_kind, "system_prompt"),
                            opt_str(p, op.op_kind, "human_prompt"));
    case OpKind::AddConditional:
      return add_conditional(graph, str_field(p, op.op_kind, "source"), branches_field(p),
                             str_field(p, op.op_kind, "condition"));
    case OpKind::AddLoop:
      return add_loop(graph, str_field(p, op.op_kind, "body_entry"),
                      str_field(p, op.op_kind, "body_exit"),
                      str_field(p, op.op_kind, "exit_condition"),
                      int_field(p, op.op_kind, "max_iterations", kDefaultMaxIterations));
    case OpKind::AddParallel: {
      std::vector<NodeSpec> arms;
      for (const auto& a : p.at("arms")) arms.push_back(node_from_json(a));
      return add_parallel(graph, str_field(p, op.op_kind, "source"), std::move(arms),
                          node_field(p, op.op_kind, "fusion"));
    }
    case OpKind::ExpandFramework:
      return expand_framework(graph, str_field(p, op.op_kind, "anchor"), template_field(p));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown operation kind");
}

std::string payload_schema(OpKind kind) {
  switch (kind) {
    case OpKind::AddNode:
      return R"({"op_kind": "AddNode", "payload": {
  "anchor": "<existing node_id>",
  "position": "after" | "before",
  "node": {"node_id": "<new unique id>", "kind": "Basic", "node_name": "...", "description": "...",
           "system_prompt": "...", "human_prompt": "... may use {{image_ref}}, {{labels}} or {{<node_id>}} ..."}
}}
A tool node uses "kind": "Tool", "tool_name": "<registered tool>", "tool_params": {...} instead of the prompts.)";
    case OpKind::RemoveNode:
      return R"({"op_kind": "RemoveNode", "payload": {"node_id": "<existing node_id>"}})";
    case OpKind::ModifyPrompts:
      return R"({"op_kind": "ModifyPrompts", "payload": {
  "node_id": "<existing basic node_id>",
  "system_prompt": "<optional full replacement>",
  "human_prompt": "<optional full replacement>"
}}
At least one of system_prompt / human_prompt is required.)";
    case OpKind::AddConditional:
      return R"({"op_kind": "AddConditional", "payload": {
  "source": "<existing node_id whose output decides the branch>",
  "condition": "<question the router answers with a branch label>",
  "branches": [{"branch_label": "<label>", "target": "<existing node_id>"},
               {"branch_label": "default", "target": "<existing node_id>"}]
}})";
    case OpKind::AddLoop:
      return R"({"op_kind": "AddLoop", "payload": {
  "body_entry": "<existing node_id where the loop restarts>",
  "body_exit": "<existing node_id after which the exit condition is checked>",
  "exit_condition": "<condition that ends the loop>",
  "max_iterations": 3
}})";
    case OpKind::AddParallel:
      return R"({"op_kind": "AddParallel", "payload": {
  "source": "<existing node_id>",
  "arms": [<node object>, <node object>],
  "fusion": <basic node object that integrates the arm outputs>
}}
Node objects use the same fields as AddNode.)";
    case OpKind::ExpandFramework:
      return R"({"op_kind": "ExpandFramework", "payload": {
  "anchor": "<existing node_id>",
  "template": {"template_id": "ChainOfThought" | "Reflexion" | "RoundTable" | "CMD",
               "expert_roles": ["<role>", "<role>"], "rounds": 2, "max_reflections": 3}
}}
expert_roles and rounds apply to RoundTable and CMD; max_reflections applies to Reflexion.)";
  }
  return {};
}

}  // namespace agentflow
