#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "agentflow/config.hpp"
#include "agentflow/dataset.hpp"
#include "agentflow/evolve.hpp"
#include "agentflow/exec.hpp"
#include "agentflow/graph_json.hpp"
#include "agentflow/mermaid.hpp"
#include "agentflow/metrics.hpp"
#include "agentflow/ops.hpp"
#include "agentflow/text.hpp"
#include "agentflow/tools.hpp"

using namespace agentflow;
using nlohmann::json;

namespace {

struct Globals {
  bool json_output = false;
  std::optional<std::int64_t> seed;
  std::string config = "agentflow.toml";
};

// Backends and shared state built from a config file.
struct Session {
  RunConfig cfg;
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<LlmClient> analyzer;
  std::shared_ptr<const PromptLibrary> prompts;
  ToolRegistry tools;
  std::shared_ptr<const EmbeddingIndex> index;

  explicit Session(const Globals& g) : cfg(load_config(g.config)) {
    if (g.seed) {
      cfg.llm.seed = *g.seed;
      if (cfg.analyzer) cfg.analyzer->seed = *g.seed;
      cfg.exec.seed = *g.seed;
    }
    llm = make_llm_client(cfg.llm);
    analyzer = cfg.analyzer ? make_llm_client(*cfg.analyzer) : nullptr;
    prompts = std::make_shared<PromptLibrary>(cfg.paths.prompts_dir.empty()
                                                  ? PromptLibrary()
                                                  : PromptLibrary::from_directory(cfg.paths.prompts_dir));
    cfg.exec.prompts = prompts;
    if (!cfg.tools.index.empty()) {
      index = std::make_shared<EmbeddingIndex>(load_index(cfg.tools.index));
      tools.add(std::make_shared<ImageSearchTool>(index, cfg.tools.search_k));
    }
  }

  const LlmClient& analyzer_client() const { return analyzer ? *analyzer : *llm; }

  DatasetManifest manifest() const {
    if (cfg.paths.manifest.empty() || cfg.paths.splits.empty())
      throw Error(ErrorCode::ConfigError, "paths.manifest and paths.splits are required");
    auto m = load_manifest(cfg.paths.manifest, cfg.paths.splits);
    if (index) check_disjoint(*index, m.case_ids());
    return m;
  }

  WorkflowGraph initial_graph() const {
    return cfg.paths.initial_graph.empty() ? make_baseline_graph() : load_graph(cfg.paths.initial_graph);
  }

  EvalConfig eval_config() const {
    EvalConfig ec;
    ec.ks = cfg.ks;
    ec.cons_n = cfg.cons_n;
    ec.concurrency = cfg.concurrency;
    ec.limits = cfg.exec;
    return ec;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_or_print(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-")
    std::cout << content;
  else
    text::write_file(out, content);
}

int cmd_init(const Globals& g, const std::string& dir) {
  std::filesystem::path base(dir);
  const auto cfg_path = base / "agentflow.toml";
  const auto graph_path = base / "baseline.json";
  for (const auto& p : {cfg_path, graph_path})
    if (std::filesystem::exists(p)) throw Error(ErrorCode::IoError, p.string() + " already exists");
  text::write_file(cfg_path, default_config_text());
  save_graph(make_baseline_graph(), graph_path);
  if (g.json_output)
    print_json({{"config", cfg_path.string()}, {"graph", graph_path.string()}});
  else
    std::cout << "wrote " << cfg_path.string() << " and " << graph_path.string() << "\n";
  return exit_code::kOk;
}

int cmd_validate(const Globals& g, const std::string& path) {
  auto graph = parse_graph(text::read_file(path));
  auto report = validate_graph(graph);
  if (g.json_output)
    print_json(to_json(report));
  else
    std::cout << (report.ok() ? "ok: " + path + "\n" : report.summary() + "\n");
  return report.ok() ? exit_code::kOk : exit_code::kValidationFailed;
}

std::string trace_summary(const ExecutionTrace& t) {
  std::string out = "case " + t.case_id + ": " + std::string(to_string(t.status)) + ", " +
                    std::to_string(t.steps.size()) + " steps, " + std::to_string(t.prompt_tokens()) +
                    " prompt + " + std::to_string(t.completion_tokens()) + " completion tokens\n";
  for (const auto& s : t.steps) out += "  " + s.node_id + "\n";
  for (const auto& [node, label] : t.branch_choices) out += "  branch " + node + " -> " + label + "\n";
  for (const auto& [node, n] : t.loop_iteration_counts)
    out += "  loop at " + node + ": " + std::to_string(n) + " iteration(s)\n";
  out += "ranking: " + (t.final_ranking.empty() ? std::string("(empty)") : text::join(t.final_ranking, ", ")) + "\n";
  if (!t.error.empty()) out += "note: " + t.error + "\n";
  return out;
}

int cmd_run(const Globals& g, const std::string& graph_path, const std::string& case_id,
            const std::string& trace_out) {
  Session s(g);
  auto graph = load_graph(graph_path);
  auto report = validate_graph(graph);
  if (!report.ok()) throw GraphError(ErrorCode::ValidationRejected, report.summary(), report);
  auto manifest = s.manifest();
  auto trace = execute(graph, manifest.find(case_id), *s.llm, s.tools, s.cfg.exec);
  if (!trace_out.empty()) text::write_file(trace_out, traces_to_jsonl({trace}));
  if (g.json_output)
    print_json(to_json(trace));
  else
    std::cout << trace_summary(trace);
  return trace.status == TraceStatus::Failed ? exit_code::kBackend : exit_code::kOk;
}

int cmd_evolve(const Globals& g, const std::string& out_dir) {
  Session s(g);
  auto manifest = s.manifest();
  EvolveConfig ec;
  ec.convergence = s.cfg.convergence;
  ec.batch_size = s.cfg.batch_size;
  ec.max_suggestions = s.cfg.max_suggestions;
  ec.eval = s.eval_config();
  ec.output_dir = out_dir.empty() ? s.cfg.paths.output_dir : std::filesystem::path(out_dir);
  EvolveBackends backends{*s.llm, s.analyzer_client(), s.tools, *s.prompts};
  auto result = run_evolution(s.initial_graph(), manifest.split("train"), manifest.split("val"), backends, ec);
  if (g.json_output) {
    json records = json::array();
    for (const auto& r : result.records) records.push_back(to_json(r));
    print_json({{"best_iteration", result.best_iteration},
                {"final_version", result.final_graph.version},
                {"output_dir", ec.output_dir.string()},
                {"records", records}});
  } else {
    for (const auto& r : result.records)
      std::cout << "iteration " << r.iteration << ": v" << r.graph_version_after << " top1="
                << text::fixed(r.validation_accuracy.top1, 4) << " applied=" << r.applied_operations.size()
                << " rejected=" << r.rejected_operations.size() << "\n";
    std::cout << "best: iteration " << result.best_iteration << " (v" << result.final_graph.version
              << "), written to " << (ec.output_dir / "best.json").string() << "\n";
  }
  return exit_code::kOk;
}

int cmd_eval(const Globals& g, const std::string& graph_path, const std::string& cases,
             const std::string& splits, const std::string& split, const std::string& out,
             const std::string& traces_out) {
  Session s(g);
  if (!cases.empty()) s.cfg.paths.manifest = cases;
  if (!splits.empty()) s.cfg.paths.splits = splits;
  auto manifest = s.manifest();
  auto graph = load_graph(graph_path);
  auto report = validate_graph(graph);
  if (!report.ok()) throw GraphError(ErrorCode::ValidationRejected, report.summary(), report);
  std::vector<ExecutionTrace> traces;
  auto result = evaluate(graph, manifest.split(split), *s.llm, s.tools, s.eval_config(), &traces);
  if (!traces_out.empty()) text::write_file(traces_out, traces_to_jsonl(traces));
  const std::string body = to_json(result).dump(2) + "\n";
  if (!out.empty()) text::write_file(out, body);
  if (out.empty() || g.json_output) std::cout << body;
  return exit_code::kOk;
}

int cmd_export_mermaid(const Globals& g, const std::string& in, const std::string& out) {
  auto doc = to_mermaid(load_graph(in));
  write_or_print(out, doc.code);
  if (g.json_output && !out.empty()) print_json({{"out", out}, {"node_id_map", doc.node_id_map}});
  return exit_code::kOk;
}

int cmd_apply(const Globals& g, const std::string& graph_path, const std::string& op_path,
              const std::string& out) {
  auto graph = load_graph(graph_path);
  json j;
  try {
    j = json::parse(text::read_file(op_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, op_path + ": " + e.what());
  }
  std::vector<WorkflowOperation> ops;
  if (j.is_array())
    for (const auto& item : j) ops.push_back(operation_from_json(item));
  else
    ops.push_back(operation_from_json(j));
  for (const auto& op : ops) graph = apply_operation(graph, op);
  write_or_print(out, serialize_graph(graph));
  if (g.json_output && !out.empty()) print_json({{"out", out}, {"version", graph.version}});
  return exit_code::kOk;
}

int cmd_index_build(const Globals& g, const std::string& in, const std::string& out,
                    const std::string& manifest, const std::string& splits) {
  auto index = load_index(in);
  if (!manifest.empty()) {
    if (splits.empty()) throw Error(ErrorCode::InvalidArgument, "--manifest needs --splits");
    check_disjoint(index, load_manifest(manifest, splits).case_ids());
  }
  save_index(index, out);
  if (g.json_output)
    print_json({{"entries", index.size()}, {"dimension", index.dimension()}, {"out", out}});
  else
    std::cout << "indexed " << index.size() << " entries of dimension " << index.dimension() << " into "
              << out << "\n";
  return exit_code::kOk;
}

int cmd_index_query(const Globals& g, const std::string& index_path, const std::string& vector,
                    int k) {
  auto index = load_index(index_path);
  std::vector<double> query;
  for (const auto& part : text::split(vector, ',')) {
    try {
      size_t used = 0;
      auto t = text::trim(part);
      query.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad vector component '" + part + "'");
    }
  }
  auto result = search(index, query, k);
  if (g.json_output) {
    json hits = json::array();
    for (const auto& h : result) hits.push_back({{"item_id", h.item_id}, {"label", h.label}, {"score", h.score}});
    print_json(hits);
  } else {
    std::cout << format_search_result(result) << "\n";
  }
  return exit_code::kOk;
}

void report_error(const Globals& g, std::string_view code, const std::string& message, int status,
                  const json& extra = nullptr) {
  if (g.json_output) {
    json j{{"error", {{"code", code}, {"message", message}, {"exit_code", status}}}};
    if (!extra.is_null()) j["error"]["violations"] = extra;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cerr << "error [" << code << "]: " << message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  CLI::App app{"Build, run, evolve and evaluate LLM agent workflows"};
  app.require_subcommand(1);
  app.add_flag("--json", g.json_output, "Print results and errors as JSON");
  app.add_option("--seed", g.seed, "Seed passed to every LLM request");
  app.add_option("--config", g.config, "Config file")->capture_default_str();

  std::string dir = ".";
  auto* init = app.add_subcommand("init", "Write a starter config and baseline workflow");
  init->add_option("dir", dir, "Target directory")->capture_default_str();

  std::string workflow;
  auto* validate = app.add_subcommand("validate", "Check a workflow graph");
  validate->add_option("workflow", workflow, "Workflow JSON")->required();

  std::string graph, case_id, trace_out;
  auto* run = app.add_subcommand("run", "Execute a workflow on one case");
  run->add_option("--graph", graph, "Workflow JSON")->required();
  run->add_option("--case", case_id, "Case id from the manifest")->required();
  run->add_option("--trace", trace_out, "Write the trace as JSONL");

  std::string out_dir;
  auto* evolve = app.add_subcommand("evolve", "Evolve the workflow against the training split");
  evolve->add_option("--out", out_dir, "Output directory (default: paths.output_dir)");

  std::string cases, splits, split = "test", out, traces;
  auto* eval = app.add_subcommand("eval", "Evaluate a workflow on a split");
  eval->add_option("--graph", graph, "Workflow JSON")->required();
  eval->add_option("--cases", cases, "Manifest JSONL (default: paths.manifest)");
  eval->add_option("--splits", splits, "Splits JSON (default: paths.splits)");
  eval->add_option("--split", split, "train, val or test")->capture_default_str();
  eval->add_option("--out", out, "Write the report JSON here");
  eval->add_option("--traces", traces, "Write traces as JSONL");

  std::string in;
  auto* mermaid = app.add_subcommand("export-mermaid", "Render a workflow as Mermaid");
  mermaid->add_option("--in", in, "Workflow JSON")->required();
  mermaid->add_option("--out", out, "Output .mmd file (default: stdout)");

  std::string op_path;
  auto* apply = app.add_subcommand("apply", "Apply operations from a JSON file to a workflow");
  apply->add_option("--graph", graph, "Workflow JSON")->required();
  apply->add_option("--op", op_path, "Operation envelope or array of envelopes")->required();
  apply->add_option("--out", out, "Output workflow JSON (default: stdout)");

  auto* index = app.add_subcommand("index", "Embedding index tools");
  index->require_subcommand(1);
  std::string index_in, index_out, manifest, vector;
  int k = kDefaultSearchK;
  auto* build = index->add_subcommand("build", "Validate and normalize an embedding file");
  build->add_option("--in", index_in, "Raw JSONL embeddings")->required();
  build->add_option("--out", index_out, "Canonical index file")->required();
  build->add_option("--manifest", manifest, "Check the index is disjoint from these cases");
  build->add_option("--splits", splits, "Splits JSON for --manifest");
  auto* query = index->add_subcommand("query", "Search an index");
  query->add_option("--index", index_in, "Index file")->required();
  query->add_option("--vector", vector, "Comma-separated query vector")->required();
  query->add_option("--k", k, "Number of neighbors")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    if (g.json_output) {
      report_error(g, "Usage", e.what(), exit_code::kUsage);
      return exit_code::kUsage;
    }
    app.exit(e);
    return exit_code::kUsage;
  }

  try {
    if (*init) return cmd_init(g, dir);
    if (*validate) return cmd_validate(g, workflow);
    if (*run) return cmd_run(g, graph, case_id, trace_out);
    if (*evolve) return cmd_evolve(g, out_dir);
    if (*eval) return cmd_eval(g, graph, cases, splits, split, out, traces);
    if (*mermaid) return cmd_export_mermaid(g, in, out);
    if (*apply) return cmd_apply(g, graph, op_path, out);
    if (*build) return cmd_index_build(g, index_in, index_out, manifest, splits);
    if (*query) return cmd_index_query(g, index_in, vector, k);
  } catch (const GraphError& e) {
    const int status = exit_code_for(e.code());
    report_error(g, to_string(e.code()), e.what(), status,
                 e.report().ok() ? json(nullptr) : to_json(e.report())["violations"]);
    return status;
  } catch (const Error& e) {
    const int status = exit_code_for(e.code());
    report_error(g, to_string(e.code()), e.what(), status);
    return status;
  } catch (const std::exception& e) {
    report_error(g, "Internal", e.what(), exit_code::kInternal);
    return exit_code::kInternal;
  }
  return exit_code::kUsage;
}
