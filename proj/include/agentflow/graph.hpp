#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/error.hpp"

namespace agentflow {

enum class NodeKind { Basic, Tool };

enum class EdgeKind { Sequential, ConditionalBranch, LoopBack, ParallelFanOut, ParallelFanIn };

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<EdgeKind> parse_edge_kind(std::string_view s);

/// Label every conditional block must carry; execution falls back to it.
inline constexpr std::string_view kDefaultBranch = "default";

/// Default loop bound when a suggestion omits one.
inline constexpr int kDefaultMaxIterations = 3;

/// Context keys the executor always provides, in addition to node ids.
inline constexpr std::array<std::string_view, 6> kReservedContextKeys = {
    "image_ref", "case_id", "labels", "iteration", "last_output", "loop_feedback"};

/// One agent in the workflow. Basic nodes talk to the LLM; tool nodes call a
/// registered tool. Fields belonging to the other kind stay empty.
struct NodeSpec {
  std::string node_id;
  NodeKind kind = NodeKind::Basic;
  std::string node_name;
  std::string description;
  std::string system_prompt;
  std::string human_prompt;
  std::string tool_name;
  nlohmann::json tool_params = nlohmann::json::object();

  static NodeSpec basic(std::string id, std::string name, std::string description,
                        std::string system_prompt, std::string human_prompt);
  static NodeSpec tool(std::string id, std::string name, std::string description,
                       std::string tool_name,
                       nlohmann::json params = nlohmann::json::object());

  bool operator==(const NodeSpec&) const = default;
};

/// Problems with a node spec in isolation (empty when the spec is well formed).
std::vector<std::string> node_spec_problems(const NodeSpec& spec);

struct EdgeSpec {
  std::string source;
  std::string target;
  EdgeKind kind = EdgeKind::Sequential;
  std::string condition;     // branch selector or loop exit condition
  std::string branch_label;  // ConditionalBranch only
  std::optional<int> max_iterations;  // LoopBack only

  static EdgeSpec sequential(std::string source, std::string target);
  static EdgeSpec branch(std::string source, std::string target, std::string label,
                         std::string condition);
  static EdgeSpec loop_back(std::string source, std::string target, std::string exit_condition,
                            int max_iterations);
  static EdgeSpec fan_out(std::string source, std::string target);
  static EdgeSpec fan_in(std::string source, std::string target);

  bool is_forward() const { return kind != EdgeKind::LoopBack; }
  bool operator==(const EdgeSpec&) const = default;
};

/// The evolving artifact. Plain value: copies are independent and the
/// mutators below never modify their input.
struct WorkflowGraph {
  std::string graph_id;
  std::int64_t version = 0;
  std::vector<NodeSpec> nodes;  // insertion order is canonical
  std::vector<EdgeSpec> edges;
  std::string entry_node;
  std::string output_node;

  const NodeSpec* find_node(std::string_view id) const;
  std::optional<size_t> node_index(std::string_view id) const;
  bool has_node(std::string_view id) const { return find_node(id) != nullptr; }
  const EdgeSpec* find_edge(std::string_view source, std::string_view target) const;
  std::vector<const EdgeSpec*> outgoing(std::string_view id) const;
  std::vector<const EdgeSpec*> incoming(std::string_view id) const;

  bool operator==(const WorkflowGraph&) const = default;
};

/// Rule identifiers reported by validate_graph.
namespace rules {
inline constexpr std::string_view kUnknownNodeRef = "UNKNOWN_NODE_REF";
inline constexpr std::string_view kDuplicateNodeId = "DUPLICATE_NODE_ID";
inline constexpr std::string_view kInvalidNode = "INVALID_NODE";
inline constexpr std::string_view kInvalidEdge = "INVALID_EDGE";
inline constexpr std::string_view kLoopMissingExitCondition = "LOOP_MISSING_EXIT_CONDITION";
inline constexpr std::string_view kLoopUnbounded = "LOOP_UNBOUNDED";
inline constexpr std::string_view kDuplicateEdge = "DUPLICATE_EDGE";
inline constexpr std::string_view kEntryHasIncoming = "ENTRY_HAS_INCOMING";
inline constexpr std::string_view kUnreachableNode = "UNREACHABLE_NODE";
inline constexpr std::string_view kOutputUnreachable = "OUTPUT_UNREACHABLE";
inline constexpr std::string_view kCycleWithoutExit = "CYCLE_WITHOUT_EXIT";
inline constexpr std::string_view kLoopBackNotBackward = "LOOPBACK_NOT_BACKWARD";
inline constexpr std::string_view kMultipleLoopBacksFromNode = "MULTIPLE_LOOPBACKS_FROM_NODE";
inline constexpr std::string_view kMultipleLoopBacksInCycle = "MULTIPLE_LOOPBACKS_IN_CYCLE";
inline constexpr std::string_view kCycleAnalysisLimit = "CYCLE_ANALYSIS_LIMIT";
inline constexpr std::string_view kMixedOutgoing = "MIXED_OUTGOING";
inline constexpr std::string_view kConditionalMissingDefault = "CONDITIONAL_MISSING_DEFAULT";
inline constexpr std::string_view kConditionalDuplicateLabel = "CONDITIONAL_DUPLICATE_LABEL";
inline constexpr std::string_view kParallelUnmatched = "PARALLEL_UNMATCHED";
inline constexpr std::string_view kUnknownPlaceholder = "UNKNOWN_PLACEHOLDER";
}  // namespace rules

struct Violation {
  std::string rule_id;
  std::string message;
  std::vector<std::string> elements;  // offending node ids or "source->target"

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view rule_id) const;
  std::vector<std::string> rule_ids() const;  // distinct, in first-seen order
  std::string summary() const;
};

/// Runs every structural pass and returns all violations. Never throws.
ValidationReport validate_graph(const WorkflowGraph& graph);

/// Thrown by the mutators; carries the report when validation failed.
class GraphError : public Error {
 public:
  GraphError(ErrorCode code, const std::string& message, ValidationReport report = {})
      : Error(code, message), report_(std::move(report)) {}

  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

struct Placement {
  enum class Side { After, Before };
  Side side = Side::After;
  std::string anchor;
};

/// Inserts a node next to an existing one. After: the anchor's outgoing edges
/// move to the new node and the anchor links to it (output role moves too).
/// Before: the anchor's incoming forward edges move to the new node, which
/// links to the anchor (entry role moves too).
WorkflowGraph add_node(const WorkflowGraph& graph, NodeSpec spec, const Placement& placement);

/// Removes a node, splicing its predecessors onto its unique Sequential
/// successor when it has one.
WorkflowGraph remove_node(const WorkflowGraph& graph, std::string_view node_id);

WorkflowGraph add_edge(const WorkflowGraph& graph, EdgeSpec edge);
WorkflowGraph remove_edge(const WorkflowGraph& graph, std::string_view source,
                          std::string_view target);

struct GraphStats {
  int node_count = 0;
  int branch_count = 0;  // distinct ConditionalBranch sources
  int loop_count = 0;    // LoopBack edges
  int parallel_block_count = 0;  // distinct ParallelFanOut sources

  bool operator==(const GraphStats&) const = default;
};

GraphStats graph_stats(const WorkflowGraph& graph);

/// Single-node diagnosis workflow every evolution run starts from.
WorkflowGraph make_baseline_graph(std::string graph_id = "baseline");

/// Unchecked editing surface used to build compound mutations. Nothing is
/// published until commit(), which validates the whole result and bumps the
/// version exactly once.
class GraphEditor {
 public:
  explicit GraphEditor(WorkflowGraph base);

  const WorkflowGraph& view() const { return graph_; }

  void insert_node(NodeSpec spec);
  void erase_node(std::string_view id);
  void connect(EdgeSpec edge);
  bool disconnect(std::string_view source, std::string_view target);
  NodeSpec& node(std::string_view id);

  /// Re-points every outgoing edge of `from` so that it leaves `to`.
  void move_outgoing(std::string_view from, std::string_view to);
  /// Re-points incoming forward edges of `from` so that they enter `to`.
  void move_incoming_forward(std::string_view from, std::string_view to);

  void set_entry(std::string id) { graph_.entry_node = std::move(id); }
  void set_output(std::string id) { graph_.output_node = std::move(id); }

  /// `base` if unused, else `base_2`, `base_3`, ...
  std::string fresh_id(std::string_view base) const;

  /// Validates and returns the new version. On failure throws GraphError
  /// with DuplicateEdge / CycleWithoutLoopBack when those rules fire, else
  /// `fallback`.
  WorkflowGraph commit(ErrorCode fallback = ErrorCode::ValidationRejected) const;

 private:
  WorkflowGraph graph_;
};

/// Names referenced as {{name}} in a template, in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view tmpl);

}  // namespace agentflow
