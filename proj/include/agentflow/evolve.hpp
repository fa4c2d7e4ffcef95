#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/exec.hpp"
#include "agentflow/metrics.hpp"
#include "agentflow/ops.hpp"
#include "agentflow/prompts.hpp"
#include "agentflow/tools.hpp"

namespace agentflow {

enum class ErrorCategory { ImageUnderstanding, Diagnostic, None };
enum class SuggestionKind { Structural, Prompt, Infeasible };

std::string_view to_string(ErrorCategory c);
std::string_view to_string(SuggestionKind k);

struct ErrorReport {
  std::string case_id;
  ErrorCategory category = ErrorCategory::None;
  std::string root_cause;
  std::vector<std::string> implicated_nodes;
};

inline constexpr std::string_view kUnparsedAnalysis = "unparsed analysis";

struct Suggestion {
  std::string suggestion_id;
  std::string text;
  SuggestionKind kind = SuggestionKind::Prompt;
  std::vector<std::string> source_errors;  // case ids
  std::string infeasible_reason;
};

struct AppliedOperation {
  std::string suggestion_id;
  WorkflowOperation op;
  std::int64_t version_after = 0;
};

struct RejectedOperation {
  std::string suggestion_id;
  WorkflowOperation op;
  std::string error_code;
  std::string reason;
  std::vector<std::string> rule_ids;
};

struct DroppedSuggestion {
  std::string suggestion_id;
  std::string reason;
};

struct Accuracy {
  double top1 = 0.0;
  double top3 = 0.0;
  double top5 = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  std::int64_t graph_version_before = 0;
  std::int64_t graph_version_after = 0;
  std::vector<std::string> batch_case_ids;
  std::vector<ErrorReport> error_reports;
  std::vector<Suggestion> suggestions;
  std::vector<AppliedOperation> applied_operations;
  std::vector<RejectedOperation> rejected_operations;
  std::vector<DroppedSuggestion> dropped_suggestions;  // reformulation failed
  Accuracy validation_accuracy;
  std::string checkpoint;  // relative to the output directory
  std::vector<std::string> notes;
};

struct ConvergenceConfig {
  double epsilon = 0.01;
  int window = 2;
  int max_iterations = 10;
};

struct EvolveConfig {
  ConvergenceConfig convergence;
  int batch_size = 0;  // 0: the whole training split every iteration
  int max_suggestions = 4;
  EvalConfig eval;     // validation scoring and execution limits
  std::filesystem::path output_dir;  // empty: nothing is written
};

/// The workflow backend runs cases; the analyzer backend does error analysis
/// and suggestion work. They may be the same client.
struct EvolveBackends {
  const LlmClient& workflow;
  const LlmClient& analyzer;
  const ToolRegistry& tools;
  const PromptLibrary& prompts;
};

/// Mermaid code followed by a numbered listing in execution order.
std::string structure_to_prose(const WorkflowGraph& graph);

std::vector<ErrorReport> classify_errors(const std::vector<ExecutionTrace>& traces,
                                         const std::vector<CaseRecord>& cases,
                                         const WorkflowGraph& graph, const LlmClient& analyzer,
                                         const PromptLibrary& prompts, const ExecLimits& limits = {});

/// Parses the analyzer's "category / root_cause / implicated_nodes" lines.
ErrorReport parse_error_analysis(std::string_view reply, const std::string& case_id,
                                 const WorkflowGraph& graph);

std::vector<Suggestion> generate_suggestions(const std::vector<ErrorReport>& reports,
                                             const WorkflowGraph& graph, const LlmClient& analyzer,
                                             const PromptLibrary& prompts, const ToolRegistry& tools,
                                             int max_suggestions = 4, int iteration = 0,
                                             const ExecLimits& limits = {},
                                             std::vector<std::string>* notes = nullptr);

/// Numbered "[Structural]" / "[Prompt]" lines, capped at max_suggestions.
std::vector<Suggestion> parse_suggestions(std::string_view reply, int max_suggestions, int iteration);

/// Structural when the text names a control-flow or framework change.
bool mentions_structure(std::string_view text);

/// Node ids written as @node_id and tool names written as #tool, tool `x`,
/// or "x" tool.
std::vector<std::string> referenced_nodes(std::string_view text);
std::vector<std::string> referenced_tools(std::string_view text);

std::vector<Suggestion> filter_suggestions(std::vector<Suggestion> suggestions,
                                           const WorkflowGraph& graph, const ToolRegistry& tools,
                                           const LlmClient& analyzer, const PromptLibrary& prompts,
                                           const ExecLimits& limits = {},
                                           std::vector<std::string>* notes = nullptr);

OpKind infer_op_kind(const Suggestion& s);

/// Throws ReformulationError when the reply is not a valid operation of an
/// acceptable kind.
WorkflowOperation reformulate(const Suggestion& suggestion, const WorkflowGraph& graph,
                              const LlmClient& analyzer, const PromptLibrary& prompts,
                              const ExecLimits& limits = {});

struct StepResult {
  WorkflowGraph graph;
  IterationRecord record;
};

StepResult evolve_step(const WorkflowGraph& graph, int iteration,
                       const std::vector<CaseRecord>& batch, const std::vector<CaseRecord>& val,
                       const EvolveBackends& backends, const EvolveConfig& cfg);

struct EvolutionResult {
  WorkflowGraph final_graph;  // best validation top-1, earliest on ties
  int best_iteration = 0;
  std::vector<IterationRecord> records;
};

EvolutionResult run_evolution(const WorkflowGraph& initial, const std::vector<CaseRecord>& train,
                              const std::vector<CaseRecord>& val, const EvolveBackends& backends,
                              const EvolveConfig& cfg);

std::string checkpoint_name(int iteration, std::int64_t version);

nlohmann::json to_json(const ErrorReport& r);
nlohmann::json to_json(const Suggestion& s);
nlohmann::json to_json(const IterationRecord& r);

/// "iteration,top1,top3,top5" header plus one row per record.
std::string accuracy_csv(const std::vector<IterationRecord>& records);

}  // namespace agentflow
