#include "agentflow/graph_json.hpp"

#include <algorithm>

#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

void reject_unknown_fields(const json& j, std::initializer_list<std::string_view> allowed,
                           std::string_view context) {
  if (!j.is_object())
    throw Error(ErrorCode::ParseError, std::string(context) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::ParseError,
                  "unknown field '" + key + "' in " + std::string(context));
  }
}

namespace {

std::string required_string(const json& j, const char* key, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::ParseError,
                std::string(context) + ": missing or non-string field '" + key + "'");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_string())
    throw Error(ErrorCode::ParseError,
                std::string(context) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

json to_json(const NodeSpec& n) {
  json j{{"node_id", n.node_id},
         {"kind", to_string(n.kind)},
         {"node_name", n.node_name},
         {"description", n.description}};
  if (n.kind == NodeKind::Basic) {
    j["system_prompt"] = n.system_prompt;
    j["human_prompt"] = n.human_prompt;
  } else {
    j["tool_name"] = n.tool_name;
    j["tool_params"] = n.tool_params.is_null() ? json::object() : n.tool_params;
  }
  return j;
}

json to_json(const EdgeSpec& e) {
  json j{{"source", e.source}, {"target", e.target}, {"kind", to_string(e.kind)}};
  if (!e.condition.empty()) j["condition"] = e.condition;
  if (!e.branch_label.empty()) j["branch_label"] = e.branch_label;
  if (e.max_iterations) j["max_iterations"] = *e.max_iterations;
  return j;
}

json to_json(const WorkflowGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back(to_json(n));
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back(to_json(e));
  return json{{"graph_id", g.graph_id},       {"version", g.version},
              {"entry_node", g.entry_node},   {"output_node", g.output_node},
              {"nodes", std::move(nodes)},    {"edges", std::move(edges)}};
}

json to_json(const ValidationReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations)
    violations.push_back({{"rule_id", v.rule_id}, {"message", v.message}, {"elements", v.elements}});
  return json{{"ok", r.ok()}, {"violations", std::move(violations)}};
}

json to_json(const GraphStats& s) {
  return json{{"node_count", s.node_count},
              {"branch_count", s.branch_count},
              {"loop_count", s.loop_count},
              {"parallel_block_count", s.parallel_block_count}};
}

NodeSpec node_from_json(const json& j) {
  reject_unknown_fields(j,
                        {"node_id", "kind", "node_name", "description", "system_prompt",
                         "human_prompt", "tool_name", "tool_params"},
                        "node");
  NodeSpec n;
  n.node_id = required_string(j, "node_id", "node");
  const std::string ctx = "node '" + n.node_id + "'";
  auto kind = parse_node_kind(required_string(j, "kind", ctx));
  if (!kind) throw Error(ErrorCode::ParseError, ctx + ": kind must be Basic or Tool");
  n.kind = *kind;
  n.node_name = required_string(j, "node_name", ctx);
  n.description = required_string(j, "description", ctx);
  n.system_prompt = optional_string(j, "system_prompt", ctx);
  n.human_prompt = optional_string(j, "human_prompt", ctx);
  n.tool_name = optional_string(j, "tool_name", ctx);
  if (auto it = j.find("tool_params"); it != j.end()) {
    if (!it->is_object()) throw Error(ErrorCode::ParseError, ctx + ": tool_params must be an object");
    n.tool_params = *it;
  }
  return n;
}

EdgeSpec edge_from_json(const json& j) {
  reject_unknown_fields(j, {"source", "target", "kind", "condition", "branch_label", "max_iterations"},
                        "edge");
  EdgeSpec e;
  e.source = required_string(j, "source", "edge");
  e.target = required_string(j, "target", "edge");
  const std::string ctx = "edge " + e.source + "->" + e.target;
  auto kind = parse_edge_kind(required_string(j, "kind", ctx));
  if (!kind) throw Error(ErrorCode::ParseError, ctx + ": unknown edge kind");
  e.kind = *kind;
  e.condition = optional_string(j, "condition", ctx);
  e.branch_label = optional_string(j, "branch_label", ctx);
  if (auto it = j.find("max_iterations"); it != j.end()) {
    if (!it->is_number_integer())
      throw Error(ErrorCode::ParseError, ctx + ": max_iterations must be an integer");
    e.max_iterations = it->get<int>();
  }
  return e;
}

WorkflowGraph graph_from_json(const json& j) {
  reject_unknown_fields(j, {"graph_id", "version", "entry_node", "output_node", "nodes", "edges"},
                        "workflow");
  WorkflowGraph g;
  g.graph_id = required_string(j, "graph_id", "workflow");
  auto v = j.find("version");
  if (v == j.end() || !v->is_number_integer())
    throw Error(ErrorCode::ParseError, "workflow: missing integer field 'version'");
  g.version = v->get<std::int64_t>();
  g.entry_node = required_string(j, "entry_node", "workflow");
  g.output_node = required_string(j, "output_node", "workflow");
  for (const char* key : {"nodes", "edges"}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array())
      throw Error(ErrorCode::ParseError, std::string("workflow: '") + key + "' must be an array");
  }
  for (const auto& n : j.at("nodes")) g.nodes.push_back(node_from_json(n));
  for (const auto& e : j.at("edges")) g.edges.push_back(edge_from_json(e));
  return g;
}

std::string serialize_graph(const WorkflowGraph& graph) { return to_json(graph).dump(2) + "\n"; }

WorkflowGraph parse_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("workflow is not valid JSON: ") + e.what());
  }
  return graph_from_json(j);
}

WorkflowGraph load_graph(const std::filesystem::path& path) {
  return parse_graph(text::read_file(path));
}

void save_graph(const WorkflowGraph& graph, const std::filesystem::path& path) {
  text::write_file(path, serialize_graph(graph));
}

}  // namespace agentflow
