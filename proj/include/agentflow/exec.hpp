#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/context.hpp"
#include "agentflow/graph.hpp"
#include "agentflow/llm.hpp"
#include "agentflow/prompts.hpp"
#include "agentflow/tools.hpp"

namespace agentflow {

struct CaseRecord {
  std::string case_id;
  std::string image_ref;
  std::string label;
  std::vector<std::string> label_vocabulary;
  std::vector<double> query_embedding;  // optional, feeds image_search
};

inline constexpr int kDefaultMaxTotalSteps = 64;

struct ExecLimits {
  int max_total_steps = kDefaultMaxTotalSteps;
  int retries = 2;          // extra attempts after a failed backend call
  int backoff_ms = 500;     // doubled after every failed attempt
  bool parallel_arms = true;
  double temperature = kDefaultTemperature;
  std::optional<std::int64_t> seed = kDefaultSeed;
  std::shared_ptr<const PromptLibrary> prompts;  // null: built-in router prompts
};

enum class TraceStatus { Completed, Truncated, Failed };

std::string_view to_string(TraceStatus status);
std::optional<TraceStatus> parse_trace_status(std::string_view s);

struct TraceStep {
  std::string node_id;
  std::string rendered_system_prompt;
  std::string rendered_human_prompt;  // tool nodes: "<tool_name> <params json>"
  std::string raw_output;
  std::string parsed_output;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  double wall_time = 0.0;  // seconds
};

/// A branch or loop-exit decision made by the router LLM.
struct RouterCall {
  std::string source;
  std::string kind;  // "condition" or "exit"
  int iteration = 0;
  std::string reply;
  std::string decision;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ExecutionTrace {
  std::string case_id;
  std::int64_t graph_version = 0;
  std::vector<TraceStep> steps;
  std::map<std::string, int> loop_iteration_counts;
  std::map<std::string, std::string> branch_choices;
  std::vector<RouterCall> router_calls;
  std::vector<std::string> final_ranking;
  TraceStatus status = TraceStatus::Completed;
  bool refused = false;
  std::string error;

  /// Node steps plus router calls.
  int prompt_tokens() const;
  int completion_tokens() const;
};

/// Runs one case. Backend failures, refusals, and unresolved placeholders
/// end the run with status Failed; nothing is thrown for them.
ExecutionTrace execute(const WorkflowGraph& graph, const CaseRecord& c, const LlmClient& llm,
                       const ToolRegistry& tools, const ExecLimits& limits = {});

/// One of `branch_labels`; "default" when the reply does not name one.
std::string evaluate_condition(std::string_view condition, const NodeContext& ctx,
                               const std::vector<std::string>& branch_labels, const LlmClient& llm,
                               const ExecLimits& limits = {}, RouterCall* log = nullptr);

/// True means leave the loop. The bound wins without consulting the LLM;
/// anything but a clear "no" also exits.
bool evaluate_exit(std::string_view condition, const NodeContext& ctx, int iteration,
                   int max_iterations, const LlmClient& llm, const ExecLimits& limits = {},
                   RouterCall* log = nullptr);

/// Labels named in a free-text ranking, in order, deduplicated. Throws
/// EmptyRanking when nothing matches the vocabulary.
std::vector<std::string> parse_final_ranking(std::string_view raw_output,
                                             const std::vector<std::string>& vocab);

/// Calls the backend, retrying transport-level errors with exponential
/// backoff; throws BackendFailure once the attempts are used up.
LlmResponse complete_with_retry(const LlmClient& llm, const LlmRequest& request,
                                const ExecLimits& limits);

nlohmann::json to_json(const TraceStep& step, bool with_wall_time = true);
nlohmann::json to_json(const ExecutionTrace& trace, bool with_wall_time = true);
ExecutionTrace trace_from_json(const nlohmann::json& j);

/// One trace per line.
std::string traces_to_jsonl(const std::vector<ExecutionTrace>& traces, bool with_wall_time = true);

}  // namespace agentflow
