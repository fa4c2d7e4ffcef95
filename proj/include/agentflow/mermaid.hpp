#pragma once

#include <map>
#include <string>
#include <string_view>

#include "agentflow/graph.hpp"

namespace agentflow {

struct MermaidDocument {
  std::string code;
  std::map<std::string, std::string> node_id_map;  // node_id -> Mermaid identifier
};

/// Byte-deterministic `flowchart TD` rendering. Nodes appear in insertion
/// order with their description as a `%%` comment; edges are sorted by
/// (source, target, kind).
MermaidDocument to_mermaid(const WorkflowGraph& graph);

/// Non-alphanumeric characters become '_'; Mermaid keywords get a trailing '_'.
std::string sanitize_mermaid_id(std::string_view id);

/// Text safe inside a quoted node label or an edge label.
std::string escape_mermaid_text(std::string_view s);

}  // namespace agentflow
