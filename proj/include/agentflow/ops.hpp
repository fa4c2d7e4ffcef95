#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/graph.hpp"

namespace agentflow {

enum class OpKind {
  AddNode,
  RemoveNode,
  ModifyPrompts,
  AddConditional,
  AddLoop,
  AddParallel,
  ExpandFramework
};

enum class OpOrigin { Seed, Suggestion, Manual };

std::string_view to_string(OpKind kind);
std::string_view to_string(OpOrigin origin);
std::optional<OpKind> parse_op_kind(std::string_view s);
std::optional<OpOrigin> parse_op_origin(std::string_view s);

/// A standardized mutation request. The payload layout per kind is
/// documented in docs/operation-schema.md and returned by payload_schema().
struct WorkflowOperation {
  OpKind op_kind = OpKind::AddNode;
  nlohmann::json payload = nlohmann::json::object();
  OpOrigin origin = OpOrigin::Manual;

  bool operator==(const WorkflowOperation&) const = default;
};

/// Version of the operation envelope and payload layout.
inline constexpr int kOperationSchemaVersion = 1;

nlohmann::json to_json(const WorkflowOperation& op);
/// Parses the {op_kind, payload, origin} envelope; ParseError on bad shape.
WorkflowOperation operation_from_json(const nlohmann::json& j);

/// Throws IncompletePayload (or UnsupportedTemplate) when the payload is
/// missing a required parameter or has the wrong shape.
void check_payload(const WorkflowOperation& op);

/// Example payload plus field notes for one kind; embedded in the
/// reformulation prompt.
std::string payload_schema(OpKind kind);

/// Applies one operation atomically: returns a new valid graph with the
/// version bumped by one, or throws and leaves nothing changed. Structural
/// rejections surface as GraphError(ValidationRejected) with the report.
WorkflowGraph apply_operation(const WorkflowGraph& graph, const WorkflowOperation& op);

enum class TemplateId { ChainOfThought, Reflexion, RoundTable, CMD };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view s);

struct FrameworkTemplate {
  TemplateId template_id = TemplateId::ChainOfThought;
  std::vector<std::string> expert_roles;  // RoundTable, CMD
  int rounds = 2;                          // RoundTable, CMD
  int max_reflections = kDefaultMaxIterations;  // Reflexion
};

struct Branch {
  std::string branch_label;
  std::string target;
};

WorkflowGraph modify_prompts(const WorkflowGraph& graph, std::string_view node_id,
                             std::optional<std::string> system_prompt,
                             std::optional<std::string> human_prompt);

/// Replaces the source's Sequential successor edge with one
/// ConditionalBranch edge per branch.
WorkflowGraph add_conditional(const WorkflowGraph& graph, std::string_view source,
                              const std::vector<Branch>& branches, std::string_view condition);

WorkflowGraph add_loop(const WorkflowGraph& graph, std::string_view body_entry,
                       std::string_view body_exit, std::string_view exit_condition,
                       int max_iterations);

/// Inserts a parallel block right after `source`: the source fans out to the
/// arms, the arms fan in to the fusion node, and the source's previous
/// successors now follow the fusion node.
WorkflowGraph add_parallel(const WorkflowGraph& graph, std::string_view source,
                           std::vector<NodeSpec> arms, NodeSpec fusion);

WorkflowGraph expand_framework(const WorkflowGraph& graph, std::string_view anchor,
                               const FrameworkTemplate& tpl);

}  // namespace agentflow
