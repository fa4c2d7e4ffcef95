#include "agentflow/exec.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <regex>
#include <set>
#include <thread>

#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

std::string_view to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::Completed: return "Completed";
    case TraceStatus::Truncated: return "Truncated";
    case TraceStatus::Failed: return "Failed";
  }
  return "?";
}

std::optional<TraceStatus> parse_trace_status(std::string_view s) {
  for (auto st : {TraceStatus::Completed, TraceStatus::Truncated, TraceStatus::Failed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

int ExecutionTrace::prompt_tokens() const {
  int n = 0;
  for (const auto& s : steps) n += s.prompt_tokens;
  for (const auto& r : router_calls) n += r.prompt_tokens;
  return n;
}

int ExecutionTrace::completion_tokens() const {
  int n = 0;
  for (const auto& s : steps) n += s.completion_tokens;
  for (const auto& r : router_calls) n += r.completion_tokens;
  return n;
}

namespace {

const PromptLibrary& prompts_of(const ExecLimits& limits) {
  static const PromptLibrary builtin;
  return limits.prompts ? *limits.prompts : builtin;
}

bool retryable(ErrorCode code) {
  return code == ErrorCode::Transport || code == ErrorCode::RateLimited ||
         code == ErrorCode::MalformedResponse;
}

std::string describe(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

// Reply reduced to lowercase words, punctuation and markup stripped.
std::string router_words(std::string_view reply) {
  std::string out;
  for (char ch : reply) {
    unsigned char u = static_cast<unsigned char>(ch);
    out += (std::isalnum(u) || ch == '_' || ch == '-') ? ch : ' ';
  }
  return text::normalize(out);
}

LlmResponse router_call(std::string_view prompt, const std::map<std::string, std::string>& values,
                        const LlmClient& llm, const ExecLimits& limits) {
  auto [system, human] = prompts_of(limits).render(prompt, values);
  LlmRequest req;
  req.system_prompt = std::move(system);
  req.human_prompt = std::move(human);
  req.temperature = limits.temperature;
  req.seed = limits.seed;
  return complete_with_retry(llm, req, limits);
}

std::string value_or_empty(const NodeContext& ctx, const std::string& key) {
  const std::string* v = ctx.find(key);
  return v ? *v : std::string{};
}

}  // namespace

LlmResponse complete_with_retry(const LlmClient& llm, const LlmRequest& request,
                                const ExecLimits& limits) {
  const int attempts = 1 + std::max(0, limits.retries);
  std::string last;
  for (int i = 0; i < attempts; ++i) {
    try {
      return llm.complete(request);
    } catch (const Error& e) {
      if (!retryable(e.code())) throw Error(ErrorCode::BackendFailure, describe(e));
      last = describe(e);
    }
    if (i + 1 < attempts && limits.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(limits.backoff_ms) << i));
  }
  throw Error(ErrorCode::BackendFailure,
              "gave up after " + std::to_string(attempts) + " attempts: " + last);
}

std::string evaluate_condition(std::string_view condition, const NodeContext& ctx,
                               const std::vector<std::string>& branch_labels, const LlmClient& llm,
                               const ExecLimits& limits, RouterCall* log) {
  std::string decision(kDefaultBranch);
  if (log) log->kind = "condition";
  try {
    auto r = router_call("router_condition",
                         {{"condition", std::string(condition)},
                          {"branch_labels", text::join(branch_labels, ", ")},
                          {"last_output", value_or_empty(ctx, "last_output")}},
                         llm, limits);
    if (log) {
      log->reply = r.text;
      log->prompt_tokens = r.prompt_tokens;
      log->completion_tokens = r.completion_tokens;
    }
    const std::string reply = text::normalize(r.text);
    const std::string words = router_words(r.text);
    for (const auto& label : branch_labels) {
      const std::string norm = text::normalize(label);
      if (!r.refused && (reply == norm || words == router_words(label))) {
        decision = label;
        break;
      }
    }
  } catch (const Error& e) {
    if (log) log->reply = describe(e);
  }
  if (log) log->decision = decision;
  return decision;
}

bool evaluate_exit(std::string_view condition, const NodeContext& ctx, int iteration,
                   int max_iterations, const LlmClient& llm, const ExecLimits& limits,
                   RouterCall* log) {
  if (iteration >= max_iterations) return true;
  bool exit = true;
  if (log) {
    log->kind = "exit";
    log->iteration = iteration;
  }
  try {
    auto r = router_call("router_exit",
                         {{"condition", std::string(condition)},
                          {"iteration", std::to_string(iteration)},
                          {"max_iterations", std::to_string(max_iterations)},
                          {"last_output", value_or_empty(ctx, "last_output")}},
                         llm, limits);
    if (log) {
      log->reply = r.text;
      log->prompt_tokens = r.prompt_tokens;
      log->completion_tokens = r.completion_tokens;
    }
    const auto words = text::split(router_words(r.text), ' ');
    const std::string first = words.empty() ? std::string{} : words.front();
    if (!r.refused && (first == "no" || first == "false")) exit = false;
  } catch (const Error& e) {
    if (log) log->reply = describe(e);
  }
  if (log) log->decision = exit ? "exit" : "continue";
  return exit;
}

namespace {

std::string clean_piece(std::string s) {
  s = text::replace_all(std::move(s), "**", "");
  s = text::replace_all(std::move(s), "`", "");
  s = text::trim(s);
  size_t b = s.find_first_not_of("-*#>+\t ");
  s = b == std::string::npos ? std::string{} : s.substr(b);
  while (!s.empty() && std::string_view(".:!?\"' ").find(s.back()) != std::string_view::npos)
    s.pop_back();
  return text::trim(s);
}

bool is_word_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) != 0; }

bool contains_word(std::string_view hay, std::string_view word) {
  if (word.empty()) return false;
  for (size_t pos = hay.find(word); pos != std::string_view::npos; pos = hay.find(word, pos + 1)) {
    bool left = pos == 0 || !is_word_char(hay[pos - 1]);
    size_t end = pos + word.size();
    bool right = end == hay.size() || !is_word_char(hay[end]);
    if (left && right) return true;
  }
  return false;
}

std::optional<size_t> match_label(const std::string& piece, const std::vector<std::string>& norm) {
  for (size_t i = 0; i < norm.size(); ++i)
    if (norm[i] == piece) return i;
  std::vector<size_t> inside;
  size_t longest = 0;
  for (size_t i = 0; i < norm.size(); ++i)
    if (contains_word(piece, norm[i])) {
      if (norm[i].size() > longest) {
        longest = norm[i].size();
        inside.clear();
      }
      if (norm[i].size() == longest) inside.push_back(i);
    }
  if (inside.size() == 1) return inside.front();
  if (!inside.empty()) return std::nullopt;
  if (piece.size() < 3) return std::nullopt;
  std::optional<size_t> found;
  for (size_t i = 0; i < norm.size(); ++i)
    if (contains_word(norm[i], piece)) {
      if (found) return std::nullopt;
      found = i;
    }
  return found;
}

}  // namespace

std::vector<std::string> parse_final_ranking(std::string_view raw_output,
                                             const std::vector<std::string>& vocab) {
  if (vocab.empty()) throw Error(ErrorCode::InvalidArgument, "empty label vocabulary");
  static const std::regex marker(R"((^|\s)\d{1,3}[.)](?!\d))");
  std::string flat = std::regex_replace(std::string(raw_output), marker, "$1\n");
  for (char& ch : flat)
    if (ch == ',' || ch == ';' || ch == '\r') ch = '\n';

  std::vector<std::string> norm;
  norm.reserve(vocab.size());
  for (const auto& v : vocab) norm.push_back(text::normalize(v));

  std::vector<std::string> out;
  std::set<size_t> used;
  for (const auto& line : text::split(flat, '\n')) {
    auto piece = text::normalize(clean_piece(line));
    if (piece.empty()) continue;
    auto idx = match_label(piece, norm);
    if (idx && used.insert(*idx).second) out.push_back(vocab[*idx]);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyRanking, "no label from the vocabulary in the reply");
  return out;
}

namespace {

class Runner {
 public:
  Runner(const WorkflowGraph& g, const CaseRecord& c, const LlmClient& llm, const ToolRegistry& tools,
         const ExecLimits& limits)
      : g_(g), c_(c), llm_(llm), tools_(tools), limits_(limits) {}

  // Throws Error on any failure; `refused` reports a moderation refusal.
  TraceStep run_node(const NodeSpec& n, const NodeContext& ctx, bool& refused) const {
    TraceStep s;
    s.node_id = n.node_id;
    const auto t0 = std::chrono::steady_clock::now();
    if (n.kind == NodeKind::Basic) {
      LlmRequest req;
      req.system_prompt = render_prompt(n.system_prompt, ctx);
      req.human_prompt = render_prompt(n.human_prompt, ctx);
      if (!c_.image_ref.empty()) req.image_ref = c_.image_ref;
      req.temperature = limits_.temperature;
      req.seed = limits_.seed;
      s.rendered_system_prompt = req.system_prompt;
      s.rendered_human_prompt = req.human_prompt;
      auto r = complete_with_retry(llm_, req, limits_);
      s.raw_output = r.text;
      s.prompt_tokens = r.prompt_tokens;
      s.completion_tokens = r.completion_tokens;
      refused = r.refused;
    } else {
      s.rendered_human_prompt = n.tool_name + " " + n.tool_params.dump();
      s.raw_output = tools_.invoke(n.tool_name, n.tool_params, ctx);
    }
    s.parsed_output = text::trim(s.raw_output);
    s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }

  struct ArmOutcome {
    std::vector<TraceStep> steps;
    std::optional<std::string> error;
    bool refused = false;
  };

  ArmOutcome run_arm(const std::vector<std::string>& chain, NodeContext ctx) const {
    ArmOutcome out;
    try {
      for (const auto& id : chain) {
        bool refused = false;
        out.steps.push_back(run_node(*g_.find_node(id), ctx, refused));
        if (refused) {
          out.refused = true;
          return out;
        }
        ctx.set(id, out.steps.back().parsed_output);
        ctx.set("last_output", out.steps.back().parsed_output);
      }
    } catch (const Error& e) {
      out.error = describe(e);
    }
    return out;
  }

  NodeContext initial_context() const {
    NodeContext ctx;
    ctx.set("image_ref", c_.image_ref);
    ctx.set("case_id", c_.case_id);
    ctx.set("labels", text::join(c_.label_vocabulary, ", "));
    ctx.set("iteration", "1");
    ctx.set("last_output", "");
    ctx.set("loop_feedback", "");
    ctx.query_embedding = c_.query_embedding;
    return ctx;
  }

  ExecutionTrace run() const {
    ExecutionTrace tr;
    tr.case_id = c_.case_id;
    tr.graph_version = g_.version;
    NodeContext ctx = initial_context();
    std::map<std::string, int> loop_iter;
    const int budget = limits_.max_total_steps;
    auto refuse = [&](const TraceStep& s) {
      tr.status = TraceStatus::Failed;
      tr.refused = true;
      tr.error = "refused by " + s.node_id + ": " + s.raw_output;
    };

    try {
      std::string cur = g_.entry_node;
      while (true) {
        if (static_cast<int>(tr.steps.size()) >= budget) {
          tr.status = TraceStatus::Truncated;
          break;
        }
        const NodeSpec* node = g_.find_node(cur);
        if (!node) throw Error(ErrorCode::NodeNotFound, "no node " + cur);
        bool refused = false;
        tr.steps.push_back(run_node(*node, ctx, refused));
        const TraceStep& step = tr.steps.back();
        if (refused) {
          refuse(step);
          break;
        }
        ctx.set(cur, step.parsed_output);
        ctx.set("last_output", step.parsed_output);

        const EdgeSpec* back = nullptr;
        std::vector<const EdgeSpec*> fwd;
        for (const EdgeSpec* e : g_.outgoing(cur)) {
          if (e->is_forward())
            fwd.push_back(e);
          else
            back = e;
        }

        if (back) {
          const int it = ++loop_iter[cur];
          int& seen = tr.loop_iteration_counts[cur];
          seen = std::max(seen, it);
          RouterCall rc;
          rc.source = cur;
          bool exit = evaluate_exit(back->condition, ctx, it,
                                    back->max_iterations.value_or(kDefaultMaxIterations), llm_,
                                    limits_, &rc);
          if (!rc.kind.empty()) tr.router_calls.push_back(std::move(rc));
          if (!exit) {
            ctx.set("loop_feedback", step.parsed_output);
            ctx.set("iteration", std::to_string(it + 1));
            cur = back->target;
            continue;
          }
          loop_iter.erase(cur);
          ctx.set("iteration", "1");
        }

        if (fwd.empty()) break;
        const EdgeKind kind = fwd.front()->kind;
        if (kind == EdgeKind::Sequential) {
          cur = fwd.front()->target;
        } else if (kind == EdgeKind::ConditionalBranch) {
          std::vector<std::string> labels;
          for (const auto* e : fwd) labels.push_back(e->branch_label);
          RouterCall rc;
          rc.source = cur;
          auto label = evaluate_condition(fwd.front()->condition, ctx, labels, llm_, limits_, &rc);
          tr.router_calls.push_back(std::move(rc));
          tr.branch_choices[cur] = label;
          auto chosen = std::find_if(fwd.begin(), fwd.end(),
                                     [&](const EdgeSpec* e) { return e->branch_label == label; });
          cur = (*chosen)->target;
        } else if (kind == EdgeKind::ParallelFanOut) {
          auto next = run_parallel(cur, fwd, ctx, tr);
          if (!next) break;
          cur = *next;
        } else {
          throw Error(ErrorCode::InvalidArgument, "fan-in edge outside a parallel block at " + cur);
        }
      }
    } catch (const Error& e) {
      tr.status = TraceStatus::Failed;
      tr.error = describe(e);
    }

    if (tr.status != TraceStatus::Failed) {
      if (const std::string* out = ctx.find(g_.output_node)) {
        try {
          tr.final_ranking = parse_final_ranking(*out, c_.label_vocabulary);
        } catch (const Error& e) {
          tr.error = describe(e);
        }
      } else {
        tr.error = "EmptyRanking: output node " + g_.output_node + " did not run";
      }
    }
    return tr;
  }

 private:
  // Runs every arm, then returns the fusion node to continue with. Returns
  // nullopt when the trace was closed (truncated, failed or refused).
  std::optional<std::string> run_parallel(const std::string& source,
                                          const std::vector<const EdgeSpec*>& fwd,
                                          NodeContext& ctx, ExecutionTrace& tr) const {
    std::vector<std::string> heads;
    for (const auto* e : fwd) heads.push_back(e->target);
    std::sort(heads.begin(), heads.end(), [&](const std::string& a, const std::string& b) {
      return g_.node_index(a) < g_.node_index(b);
    });
    std::vector<std::vector<std::string>> chains;
    std::string fusion;
    size_t total = 0;
    for (const auto& head : heads) {
      std::vector<std::string> chain{head};
      while (true) {
        auto outs = g_.outgoing(chain.back());
        if (outs.size() != 1) throw Error(ErrorCode::InvalidArgument, "malformed arm after " + source);
        if (outs.front()->kind == EdgeKind::ParallelFanIn) {
          fusion = outs.front()->target;
          break;
        }
        chain.push_back(outs.front()->target);
      }
      total += chain.size();
      chains.push_back(std::move(chain));
    }
    if (tr.steps.size() + total > static_cast<size_t>(limits_.max_total_steps)) {
      tr.status = TraceStatus::Truncated;
      return std::nullopt;
    }

    std::vector<ArmOutcome> outcomes;
    if (limits_.parallel_arms && chains.size() > 1) {
      std::vector<std::future<ArmOutcome>> futures;
      for (const auto& chain : chains)
        futures.push_back(std::async(std::launch::async, [this, &chain, ctx] { return run_arm(chain, ctx); }));
      for (auto& f : futures) outcomes.push_back(f.get());
    } else {
      for (const auto& chain : chains) outcomes.push_back(run_arm(chain, ctx));
    }

    for (auto& o : outcomes) {
      for (auto& s : o.steps) {
        ctx.set(s.node_id, s.parsed_output);
        ctx.set("last_output", s.parsed_output);
        tr.steps.push_back(std::move(s));
      }
      if (o.refused) {
        tr.status = TraceStatus::Failed;
        tr.refused = true;
        tr.error = "refused by " + tr.steps.back().node_id + ": " + tr.steps.back().raw_output;
        return std::nullopt;
      }
      if (o.error) {
        tr.status = TraceStatus::Failed;
        tr.error = *o.error;
        return std::nullopt;
      }
    }
    return fusion;
  }

  const WorkflowGraph& g_;
  const CaseRecord& c_;
  const LlmClient& llm_;
  const ToolRegistry& tools_;
  const ExecLimits& limits_;
};

}  // namespace

ExecutionTrace execute(const WorkflowGraph& graph, const CaseRecord& c, const LlmClient& llm,
                       const ToolRegistry& tools, const ExecLimits& limits) {
  if (limits.max_total_steps < 1)
    throw Error(ErrorCode::InvalidArgument, "max_total_steps must be at least 1");
  if (!graph.has_node(graph.entry_node))
    throw Error(ErrorCode::InvalidArgument, "graph has no entry node");
  return Runner(graph, c, llm, tools, limits).run();
}

json to_json(const TraceStep& s, bool with_wall_time) {
  json j{{"node_id", s.node_id},
         {"rendered_system_prompt", s.rendered_system_prompt},
         {"rendered_human_prompt", s.rendered_human_prompt},
         {"raw_output", s.raw_output},
         {"parsed_output", s.parsed_output},
         {"prompt_tokens", s.prompt_tokens},
         {"completion_tokens", s.completion_tokens}};
  if (with_wall_time) j["wall_time"] = s.wall_time;
  return j;
}

json to_json(const ExecutionTrace& t, bool with_wall_time) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s, with_wall_time));
  json routers = json::array();
  for (const auto& r : t.router_calls)
    routers.push_back({{"source", r.source},
                       {"kind", r.kind},
                       {"iteration", r.iteration},
                       {"reply", r.reply},
                       {"decision", r.decision},
                       {"prompt_tokens", r.prompt_tokens},
                       {"completion_tokens", r.completion_tokens}});
  return json{{"case_id", t.case_id},
              {"graph_version", t.graph_version},
              {"status", to_string(t.status)},
              {"refused", t.refused},
              {"error", t.error},
              {"steps", steps},
              {"loop_iteration_counts", t.loop_iteration_counts},
              {"branch_choices", t.branch_choices},
              {"router_calls", routers},
              {"final_ranking", t.final_ranking},
              {"prompt_tokens", t.prompt_tokens()},
              {"completion_tokens", t.completion_tokens()}};
}

ExecutionTrace trace_from_json(const json& j) {
  try {
    ExecutionTrace t;
    t.case_id = j.at("case_id").get<std::string>();
    t.graph_version = j.at("graph_version").get<std::int64_t>();
    auto status = parse_trace_status(j.at("status").get<std::string>());
    if (!status) throw Error(ErrorCode::ParseError, "unknown trace status");
    t.status = *status;
    t.refused = j.value("refused", false);
    t.error = j.value("error", std::string{});
    for (const auto& s : j.at("steps")) {
      TraceStep step;
      step.node_id = s.at("node_id").get<std::string>();
      step.rendered_system_prompt = s.value("rendered_system_prompt", std::string{});
      step.rendered_human_prompt = s.value("rendered_human_prompt", std::string{});
      step.raw_output = s.value("raw_output", std::string{});
      step.parsed_output = s.value("parsed_output", std::string{});
      step.prompt_tokens = s.value("prompt_tokens", 0);
      step.completion_tokens = s.value("completion_tokens", 0);
      step.wall_time = s.value("wall_time", 0.0);
      t.steps.push_back(std::move(step));
    }
    t.loop_iteration_counts = j.value("loop_iteration_counts", std::map<std::string, int>{});
    t.branch_choices = j.value("branch_choices", std::map<std::string, std::string>{});
    for (const auto& r : j.value("router_calls", json::array())) {
      RouterCall rc;
      rc.source = r.at("source").get<std::string>();
      rc.kind = r.at("kind").get<std::string>();
      rc.iteration = r.value("iteration", 0);
      rc.reply = r.value("reply", std::string{});
      rc.decision = r.value("decision", std::string{});
      rc.prompt_tokens = r.value("prompt_tokens", 0);
      rc.completion_tokens = r.value("completion_tokens", 0);
      t.router_calls.push_back(std::move(rc));
    }
    t.final_ranking = j.value("final_ranking", std::vector<std::string>{});
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad trace: ") + e.what());
  }
}

std::string traces_to_jsonl(const std::vector<ExecutionTrace>& traces, bool with_wall_time) {
  std::string out;
  for (const auto& t : traces) out += to_json(t, with_wall_time).dump() + "\n";
  return out;
}

}  // namespace agentflow
