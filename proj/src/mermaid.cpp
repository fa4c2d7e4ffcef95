#include "agentflow/mermaid.hpp"

#include <algorithm>
#include <set>

#include "agentflow/text.hpp"

namespace agentflow {

std::string sanitize_mermaid_id(std::string_view id) {
  static const std::set<std::string, std::less<>> keywords = {
      "end", "graph", "flowchart", "subgraph", "style", "class", "classdef",
      "click", "linkstyle", "direction", "call", "href", "default"};
  std::string out;
  for (char ch : id) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  if (out.empty()) out = "_";
  if (keywords.count(text::to_lower(out))) out += '_';
  return out;
}

std::string escape_mermaid_text(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '"': out += "#quot;"; break;
      case '|': out += "#124;"; break;
      case '\n': out += ' '; break;
      case '\r': break;
      default: out += ch;
    }
  }
  return out;
}

namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::erase(out, '\r');
  return out;
}

std::string arrow(const EdgeSpec& e) {
  switch (e.kind) {
    case EdgeKind::Sequential: return " --> ";
    case EdgeKind::ConditionalBranch:
      return " -->|" + escape_mermaid_text(e.branch_label + ": " + e.condition) + "| ";
    case EdgeKind::LoopBack:
      return " -.->|" +
             escape_mermaid_text("exit: " + e.condition + ", max " +
                                 std::to_string(e.max_iterations.value_or(kDefaultMaxIterations))) +
             "| ";
    case EdgeKind::ParallelFanOut:
    case EdgeKind::ParallelFanIn: return " -->|parallel| ";
  }
  return " --> ";
}

}  // namespace

MermaidDocument to_mermaid(const WorkflowGraph& graph) {
  MermaidDocument doc;
  std::set<std::string> taken;
  for (const auto& n : graph.nodes) {
    if (doc.node_id_map.count(n.node_id)) continue;
    std::string base = sanitize_mermaid_id(n.node_id);
    std::string id = base;
    for (int i = 2; taken.count(id); ++i) id = base + "_" + std::to_string(i);
    taken.insert(id);
    doc.node_id_map[n.node_id] = id;
  }
  auto mid = [&](const std::string& node_id) {
    auto it = doc.node_id_map.find(node_id);
    return it == doc.node_id_map.end() ? sanitize_mermaid_id(node_id) : it->second;
  };

  std::string& out = doc.code;
  out = "flowchart TD\n";
  out += "%% entry: " + mid(graph.entry_node) + "\n";
  out += "%% output: " + mid(graph.output_node) + "\n";
  for (const auto& n : graph.nodes) {
    const std::string label = "\"" + escape_mermaid_text(n.node_name) + "\"";
    const std::string& id = mid(n.node_id);
    out += n.kind == NodeKind::Tool ? id + "[[" + label + "]]\n" : id + "[" + label + "]\n";
    if (!n.description.empty()) out += "%% " + id + ": " + one_line(n.description) + "\n";
  }
  std::vector<const EdgeSpec*> edges;
  for (const auto& e : graph.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](const EdgeSpec* a, const EdgeSpec* b) {
    return std::tie(a->source, a->target, a->kind) < std::tie(b->source, b->target, b->kind);
  });
  for (const auto* e : edges) out += mid(e->source) + arrow(*e) + mid(e->target) + "\n";
  return doc;
}

}  // namespace agentflow
