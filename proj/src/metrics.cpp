#include "agentflow/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace agentflow {

using nlohmann::json;

Prediction prediction_from(const ExecutionTrace& trace, const CaseRecord& c) {
  return {c.case_id,        c.label,
          trace.final_ranking, trace.prompt_tokens(),
          trace.completion_tokens(), trace.status,
          trace.refused};
}

double top_k_accuracy(const PredictionSet& preds, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  int total = 0;
  int hits = 0;
  for (const auto& p : preds) {
    if (!p.scorable()) continue;
    ++total;
    const size_t n = std::min(p.final_ranking.size(), static_cast<size_t>(k));
    if (std::find(p.final_ranking.begin(), p.final_ranking.begin() + static_cast<std::ptrdiff_t>(n),
                  p.label) != p.final_ranking.begin() + static_cast<std::ptrdiff_t>(n))
      ++hits;
  }
  if (total == 0) throw Error(ErrorCode::EmptyPredictionSet, "no scorable predictions");
  return static_cast<double>(hits) / total;
}

std::string majority_label(const std::vector<std::string>& votes) {
  std::map<std::string, int> tally;
  for (const auto& v : votes) ++tally[v];
  std::string best;
  int best_count = 0;
  for (const auto& [label, count] : tally)  // ascending, so ties keep the smallest
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  return best;
}

ConsResult cons_at_n(const std::map<std::string, std::vector<std::string>>& samples_per_class, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  if (samples_per_class.empty()) throw Error(ErrorCode::EmptyPredictionSet, "no classes to score");
  ConsResult r;
  r.n = n;
  int hits = 0;
  for (const auto& [label, votes] : samples_per_class) {
    if (static_cast<int>(votes.size()) != n)
      throw Error(ErrorCode::WrongSampleCount, "class " + label + " has " +
                                                   std::to_string(votes.size()) + " samples, expected " +
                                                   std::to_string(n));
    int hit = majority_label(votes) == label ? 1 : 0;
    r.per_class[label] = hit;
    hits += hit;
  }
  r.aggregate = static_cast<double>(hits) / static_cast<double>(samples_per_class.size());
  return r;
}

double EvaluationReport::top(int k) const {
  auto it = top_k.find(k);
  return it == top_k.end() ? 0.0 : it->second;
}

EvaluationReport score(const PredictionSet& preds, const WorkflowGraph& graph, const EvalConfig& cfg) {
  if (preds.empty()) throw Error(ErrorCode::EmptyPredictionSet, "no cases to evaluate");
  EvaluationReport r;
  r.total_cases = static_cast<int>(preds.size());
  double prompt = 0, completion = 0;
  std::map<std::string, PredictionSet> by_class;
  for (const auto& p : preds) {
    prompt += p.prompt_tokens;
    completion += p.completion_tokens;
    if (p.refused) ++r.refused_cases;
    if (p.status == TraceStatus::Failed) ++r.failed_cases;
    if (p.scorable()) {
      ++r.scored_cases;
      by_class[p.label].push_back(p);
    }
  }
  for (int k : cfg.ks) r.top_k[k] = r.scored_cases ? top_k_accuracy(preds, k) : 0.0;
  for (const auto& [label, ps] : by_class) r.per_class_top1[label] = top_k_accuracy(ps, 1);

  if (cfg.cons_n > 0) {
    std::map<std::string, std::vector<std::string>> samples;
    for (const auto& [label, ps] : by_class) {
      if (static_cast<int>(ps.size()) < cfg.cons_n) {
        r.cons_skipped_classes.push_back(label);
        continue;
      }
      auto& votes = samples[label];
      for (int i = 0; i < cfg.cons_n; ++i)
        votes.push_back(ps[i].final_ranking.empty() ? std::string{} : ps[i].final_ranking.front());
    }
    if (!samples.empty()) r.cons = cons_at_n(samples, cfg.cons_n);
  }

  const auto stats = graph_stats(graph);
  r.cost.mean_prompt_tokens = prompt / r.total_cases;
  r.cost.mean_completion_tokens = completion / r.total_cases;
  r.cost.mean_total_tokens = r.cost.mean_prompt_tokens + r.cost.mean_completion_tokens;
  r.cost.node_count = stats.node_count;
  r.cost.branch_count = stats.branch_count;
  return r;
}

std::vector<ExecutionTrace> execute_all(const WorkflowGraph& graph,
                                        const std::vector<CaseRecord>& cases, const LlmClient& llm,
                                        const ToolRegistry& tools, const ExecLimits& limits,
                                        int concurrency) {
  std::vector<ExecutionTrace> traces(cases.size());
  const int workers = std::clamp(concurrency, 1, std::max(1, static_cast<int>(cases.size())));
  if (workers == 1) {
    for (size_t i = 0; i < cases.size(); ++i) traces[i] = execute(graph, cases[i], llm, tools, limits);
    return traces;
  }
  std::atomic<size_t> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i = next++; i < cases.size(); i = next++)
        traces[i] = execute(graph, cases[i], llm, tools, limits);
    });
  pool.clear();
  return traces;
}

EvaluationReport evaluate(const WorkflowGraph& graph, const std::vector<CaseRecord>& cases,
                          const LlmClient& llm, const ToolRegistry& tools, const EvalConfig& cfg,
                          std::vector<ExecutionTrace>* traces) {
  if (cases.empty()) throw Error(ErrorCode::EmptyPredictionSet, "no cases to evaluate");
  auto run = execute_all(graph, cases, llm, tools, cfg.limits, cfg.concurrency);
  PredictionSet preds;
  for (size_t i = 0; i < cases.size(); ++i) preds.push_back(prediction_from(run[i], cases[i]));
  auto report = score(preds, graph, cfg);
  if (traces) *traces = std::move(run);
  return report;
}

json to_json(const EvaluationReport& r) {
  json top = json::object();
  for (const auto& [k, v] : r.top_k) top["top" + std::to_string(k)] = v;
  json j{{"top_k", top},
         {"per_class_top1", r.per_class_top1},
         {"cost",
          {{"mean_prompt_tokens", r.cost.mean_prompt_tokens},
           {"mean_completion_tokens", r.cost.mean_completion_tokens},
           {"mean_total_tokens", r.cost.mean_total_tokens},
           {"node_count", r.cost.node_count},
           {"branch_count", r.cost.branch_count}}},
         {"counts",
          {{"total", r.total_cases},
           {"scored", r.scored_cases},
           {"failed", r.failed_cases},
           {"refused", r.refused_cases}}}};
  if (r.cons) {
    j["cons"] = {{"n", r.cons->n}, {"per_class", r.cons->per_class}, {"aggregate", r.cons->aggregate},
                 {"skipped_classes", r.cons_skipped_classes}};
  }
  return j;
}

}  // namespace agentflow
