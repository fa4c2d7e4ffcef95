#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/exec.hpp"

namespace agentflow {

struct Prediction {
  std::string case_id;
  std::string label;
  std::vector<std::string> final_ranking;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  TraceStatus status = TraceStatus::Completed;
  bool refused = false;

  /// Failed and refused cases are left out of accuracy denominators.
  bool scorable() const { return status != TraceStatus::Failed && !refused; }
};

using PredictionSet = std::vector<Prediction>;

Prediction prediction_from(const ExecutionTrace& trace, const CaseRecord& c);

/// Fraction of scorable cases whose label is among the first k entries.
/// Throws EmptyPredictionSet when no case is scorable.
double top_k_accuracy(const PredictionSet& preds, int k);

/// Most frequent entry; ties go to the lexicographically smallest.
std::string majority_label(const std::vector<std::string>& votes);

struct ConsResult {
  int n = 0;
  std::map<std::string, int> per_class;  // 1 when the majority vote is the class label
  double aggregate = 0.0;
};

/// Throws WrongSampleCount unless every class has exactly n samples.
ConsResult cons_at_n(const std::map<std::string, std::vector<std::string>>& samples_per_class, int n);

struct CostStats {
  double mean_prompt_tokens = 0.0;
  double mean_completion_tokens = 0.0;
  double mean_total_tokens = 0.0;
  int node_count = 0;
  int branch_count = 0;
};

struct EvaluationReport {
  std::map<int, double> top_k;
  std::map<std::string, double> per_class_top1;
  std::optional<ConsResult> cons;
  std::vector<std::string> cons_skipped_classes;  // fewer than n scorable cases
  CostStats cost;
  int total_cases = 0;
  int scored_cases = 0;
  int failed_cases = 0;
  int refused_cases = 0;

  double top(int k) const;
};

struct EvalConfig {
  std::vector<int> ks = {1, 3, 5};
  int cons_n = 0;  // 0 disables cons@n
  int concurrency = 1;
  ExecLimits limits;
};

/// Runs every case and scores the result. Per-case failures are counted,
/// never thrown; an empty case list is EmptyPredictionSet.
EvaluationReport evaluate(const WorkflowGraph& graph, const std::vector<CaseRecord>& cases,
                          const LlmClient& llm, const ToolRegistry& tools, const EvalConfig& cfg,
                          std::vector<ExecutionTrace>* traces = nullptr);

/// Executes cases with up to `concurrency` workers; traces keep case order.
std::vector<ExecutionTrace> execute_all(const WorkflowGraph& graph,
                                        const std::vector<CaseRecord>& cases, const LlmClient& llm,
                                        const ToolRegistry& tools, const ExecLimits& limits,
                                        int concurrency);

EvaluationReport score(const PredictionSet& preds, const WorkflowGraph& graph, const EvalConfig& cfg);

nlohmann::json to_json(const EvaluationReport& report);

}  // namespace agentflow
