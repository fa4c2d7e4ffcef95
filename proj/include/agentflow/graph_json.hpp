#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "agentflow/graph.hpp"

// Workflow file format (also the checkpoint format). Field names match the
// in-memory types; unknown fields are rejected with ErrorCode::ParseError.
namespace agentflow {

nlohmann::json to_json(const NodeSpec& node);
nlohmann::json to_json(const EdgeSpec& edge);
nlohmann::json to_json(const WorkflowGraph& graph);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const GraphStats& stats);

NodeSpec node_from_json(const nlohmann::json& j);
EdgeSpec edge_from_json(const nlohmann::json& j);
WorkflowGraph graph_from_json(const nlohmann::json& j);

/// Canonical text form: two-space indented JSON with a trailing newline.
std::string serialize_graph(const WorkflowGraph& graph);
WorkflowGraph parse_graph(std::string_view text);

WorkflowGraph load_graph(const std::filesystem::path& path);
void save_graph(const WorkflowGraph& graph, const std::filesystem::path& path);

/// Throws ParseError naming the first key of `j` not in `allowed`.
void reject_unknown_fields(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                           std::string_view context);

}  // namespace agentflow
