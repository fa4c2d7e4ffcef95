#include <gtest/gtest.h>

#include <atomic>
#include <functional>

#include "agentflow/dataset.hpp"
#include "agentflow/evolve.hpp"
#include "agentflow/graph_json.hpp"
#include "agentflow/text.hpp"
#include "fixtures.hpp"

using namespace agentflow;
using nlohmann::json;

namespace {

ExecLimits fast() {
  ExecLimits l;
  l.backoff_ms = 0;
  l.retries = 0;
  return l;
}

class CountingLlm final : public LlmClient {
 public:
  explicit CountingLlm(const LlmClient& inner) : inner_(inner) {}
  LlmResponse complete(const LlmRequest& r) const override {
    ++calls;
    return inner_.complete(r);
  }
  mutable std::atomic<int> calls{0};

 private:
  const LlmClient& inner_;
};

const ToolRegistry kNoTools;
const PromptLibrary kPrompts;

MockLlm demo_workflow() { return MockLlm(MockScript::load(fixtures::demo_dir() / "workflow_mock.json")); }
MockLlm demo_analyzer() { return MockLlm(MockScript::load(fixtures::demo_dir() / "analyzer_mock.json")); }

std::vector<CaseRecord> one_per_class(const std::string& suffix) {
  std::vector<CaseRecord> out;
  for (const auto& l : fixtures::kLabels) out.push_back(fixtures::make_case(suffix + std::to_string(out.size()), l));
  return out;
}

Suggestion suggestion(std::string text, SuggestionKind kind, std::string id = "s1_1") {
  Suggestion s;
  s.suggestion_id = std::move(id);
  s.text = std::move(text);
  s.kind = kind;
  return s;
}

EvolveConfig config(int max_iterations = 10) {
  EvolveConfig cfg;
  cfg.convergence.max_iterations = max_iterations;
  cfg.eval.limits = fast();
  return cfg;
}

}  // namespace

TEST(ErrorAnalysis, ParsesTheThreeLines) {
  auto g = fixtures::conditional_graph();
  auto r = parse_error_analysis(
      "**Category:** Image understanding\nroot cause: the describer missed the scale\n"
      "- implicated_nodes: @describer, ghost, describer, diagnoser",
      "c1", g);
  EXPECT_EQ(r.case_id, "c1");
  EXPECT_EQ(r.category, ErrorCategory::ImageUnderstanding);
  EXPECT_EQ(r.root_cause, "the describer missed the scale");
  EXPECT_EQ(r.implicated_nodes, (std::vector<std::string>{"describer", "diagnoser"}));

  r = parse_error_analysis("category: Diagnostic_Error\nroot_cause: x", "c2", g);
  EXPECT_EQ(r.category, ErrorCategory::Diagnostic);
  EXPECT_TRUE(r.implicated_nodes.empty());
}

TEST(ErrorAnalysis, UnparseableReplyFallsBackToDiagnostic) {
  auto r = parse_error_analysis("I cannot tell.", "c", make_baseline_graph());
  EXPECT_EQ(r.category, ErrorCategory::Diagnostic);
  EXPECT_EQ(r.root_cause, kUnparsedAnalysis);
  EXPECT_TRUE(r.implicated_nodes.empty());
}

TEST(ErrorAnalysis, ClassifyOnlyAsksAboutWrongUnrefusedCases) {
  auto s = fixtures::script({});
  MockRule refuse = fixtures::rule({"images/psoriasis_"}, "no");
  refuse.refused = true;
  s.rules.push_back(refuse);
  MockLlm workflow(s);
  auto cases = std::vector<CaseRecord>{fixtures::make_case("c1", "Eczema"), fixtures::make_case("c2", "Acne"),
                                       fixtures::make_case("c3", "Psoriasis")};
  auto g = make_baseline_graph();
  auto traces = execute_all(g, cases, workflow, kNoTools, fast(), 1);

  MockLlm analyzer_inner(fixtures::script(
      {fixtures::rule({"Classify the failure.", "Case c2"},
                      "category: ImageUnderstanding\nroot_cause: blurry photo\nimplicated_nodes: diagnoser")},
      ""));
  CountingLlm analyzer(analyzer_inner);
  auto reports = classify_errors(traces, cases, g, analyzer, kPrompts, fast());
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(analyzer.calls, 1);
  EXPECT_EQ(reports[0].category, ErrorCategory::None);
  EXPECT_EQ(reports[1].category, ErrorCategory::ImageUnderstanding);
  EXPECT_EQ(reports[1].root_cause, "blurry photo");
  EXPECT_EQ(reports[2].category, ErrorCategory::None);
}

TEST(ErrorAnalysis, BackendFailureYieldsUnparsedReport) {
  MockLlm workflow(fixtures::script({}));
  auto cases = std::vector<CaseRecord>{fixtures::make_case("c2", "Acne")};
  auto traces = execute_all(make_baseline_graph(), cases, workflow, kNoTools, fast(), 1);
  MockRule fail = fixtures::rule({}, "");
  fail.fail = ErrorCode::Transport;
  MockScript s;
  s.fallback = fail;
  MockLlm analyzer(s);
  auto reports = classify_errors(traces, cases, make_baseline_graph(), analyzer, kPrompts, fast());
  EXPECT_EQ(reports.at(0).category, ErrorCategory::Diagnostic);
  EXPECT_EQ(reports.at(0).root_cause, kUnparsedAnalysis);
}

TEST(ErrorAnalysis, TraceForUnknownCaseThrows) {
  ExecutionTrace t;
  t.case_id = "nope";
  MockLlm analyzer(fixtures::script({}));
  try {
    classify_errors({t}, {}, make_baseline_graph(), analyzer, kPrompts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownCase);
  }
}

TEST(StructureProse, ConditionalGraph) {
  auto prose = structure_to_prose(fixtures::conditional_graph());
  EXPECT_EQ(prose.rfind("Mermaid diagram:\nflowchart TD\n", 0), 0u);
  EXPECT_TRUE(text::contains(prose, "1. describer \"describer agent\" (entry)\n"));
  EXPECT_TRUE(text::contains(prose, "branches on \"Is the image clear enough to diagnose?\": "));
  EXPECT_TRUE(text::contains(prose, "default -> diagnoser"));
  EXPECT_TRUE(text::contains(prose, "image_unclear -> clarifier"));
  EXPECT_TRUE(text::contains(prose, "diagnoser \"Diagnoser\" (output)\n"));
}

TEST(StructureProse, LoopAndParallel) {
  auto loop = structure_to_prose(fixtures::loop_graph(3));
  EXPECT_TRUE(text::contains(loop, "back to diagnoser until \"the ranking is stable\""));
  EXPECT_TRUE(text::contains(loop, "≤3"));

  auto par = structure_to_prose(fixtures::parallel_graph());
  EXPECT_TRUE(text::contains(par, "   parallel arms:\n   - morphology \"morphology agent\"\n"
                                  "   - color \"color agent\"\n   fused at synthesizer\n"));
  auto listing = par.substr(par.find("Execution order:"));
  int numbered = 0;
  for (const auto& line : text::split(listing, '\n'))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++numbered;
  EXPECT_EQ(numbered, 3);  // describer, synthesizer, diagnoser
}

TEST(Suggestions, ParsesTagsAndCaps) {
  const std::string reply =
      "Here are my ideas:\n"
      "1. [Prompt] Ask @diagnoser to describe lesion colour.\n"
      "2) [Structural] Add a loop around @diagnoser.\n"
      "3. Add a new node that describes texture.\n"
      "- 4: **[Prompt]** Add a critic step after @diagnoser.\n"
      "5. [Prompt] Mention scale.\n"
      "6. [Prompt] Mention age.\n"
      "7. [Prompt] Mention site.\n";
  auto s = parse_suggestions(reply, 4, 2);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].suggestion_id, "s2_1");
  EXPECT_EQ(s[3].suggestion_id, "s2_4");
  EXPECT_EQ(s[0].kind, SuggestionKind::Prompt);
  EXPECT_EQ(s[0].text, "Ask @diagnoser to describe lesion colour.");
  EXPECT_EQ(s[1].kind, SuggestionKind::Structural);
  EXPECT_EQ(s[2].kind, SuggestionKind::Structural);
  EXPECT_EQ(s[3].kind, SuggestionKind::Structural);  // retagged: adds a step
  EXPECT_TRUE(parse_suggestions("nothing numbered here", 4, 1).empty());
}

TEST(Suggestions, GenerateSkipsWhenNothingFailed) {
  MockLlm inner(fixtures::script({}, "1. [Prompt] x"));
  CountingLlm analyzer(inner);
  std::vector<ErrorReport> reports(2);
  auto out = generate_suggestions(reports, make_baseline_graph(), analyzer, kPrompts, kNoTools);
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(analyzer.calls, 0);
}

TEST(Suggestions, GenerateAttachesFailingCases) {
  MockLlm analyzer(fixtures::script({fixtures::rule({"Propose at most 3", "blurry (cases: a, b; nodes: diagnoser)"},
                                                    "1. [Prompt] Ask @diagnoser for colour.")},
                                    ""));
  std::vector<ErrorReport> reports{{"a", ErrorCategory::ImageUnderstanding, "blurry", {"diagnoser"}},
                                   {"b", ErrorCategory::ImageUnderstanding, "blurry", {}},
                                   {"c", ErrorCategory::None, "", {}}};
  auto out = generate_suggestions(reports, make_baseline_graph(), analyzer, kPrompts, kNoTools, 3, 5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].suggestion_id, "s5_1");
  EXPECT_EQ(out[0].source_errors, (std::vector<std::string>{"a", "b"}));
}

TEST(Suggestions, References) {
  EXPECT_EQ(referenced_nodes("Tell @diagnoser. Then @describer-2, and mail a@b."),
            (std::vector<std::string>{"diagnoser", "describer-2"}));
  EXPECT_EQ(referenced_tools("Use #mri_lookup, the tool `image_search` and the \"dermoscopy\" tool; &#39;"),
            (std::vector<std::string>{"mri_lookup", "image_search", "dermoscopy"}));
}

TEST(Suggestions, FilterMarksInfeasible) {
  MockLlm inner(fixtures::script(
      {fixtures::rule({"Can this change be implemented", "patient history"}, "No, that needs more input."),
       fixtures::rule({"Can this change be implemented"}, "Yes.")},
      ""));
  CountingLlm analyzer(inner);
  std::vector<Suggestion> in{suggestion("Query #mri_lookup before @diagnoser.", SuggestionKind::Structural, "a"),
                             suggestion("Ask @ghost to help.", SuggestionKind::Prompt, "b"),
                             suggestion("Ask @diagnoser for patient history.", SuggestionKind::Prompt, "c"),
                             suggestion("Ask @diagnoser for colour.", SuggestionKind::Prompt, "d")};
  auto out = filter_suggestions(in, make_baseline_graph(), kNoTools, analyzer, kPrompts);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].kind, SuggestionKind::Infeasible);
  EXPECT_EQ(out[0].infeasible_reason, "unknown tool mri_lookup");
  EXPECT_EQ(out[1].kind, SuggestionKind::Infeasible);
  EXPECT_EQ(out[1].infeasible_reason, "unknown node ghost");
  EXPECT_EQ(out[2].kind, SuggestionKind::Infeasible);
  EXPECT_EQ(out[3].kind, SuggestionKind::Prompt);
  EXPECT_EQ(analyzer.calls, 2);
}

TEST(Suggestions, FeasibilityFailureKeepsTheSuggestion) {
  MockScript s;
  s.fallback.fail = ErrorCode::Transport;
  MockLlm analyzer(s);
  std::vector<std::string> notes;
  auto out = filter_suggestions({suggestion("Ask @diagnoser for colour.", SuggestionKind::Prompt)},
                                make_baseline_graph(), kNoTools, analyzer, kPrompts, fast(), &notes);
  EXPECT_EQ(out.at(0).kind, SuggestionKind::Prompt);
  EXPECT_EQ(notes.size(), 1u);
}

TEST(Reformulation, InferredKinds) {
  auto kind = [](const char* text) { return infer_op_kind(suggestion(text, SuggestionKind::Structural)); };
  EXPECT_EQ(kind("Expand @diagnoser into a round table of experts"), OpKind::ExpandFramework);
  EXPECT_EQ(kind("Run two describers in parallel"), OpKind::AddParallel);
  EXPECT_EQ(kind("Iterate the diagnosis until stable"), OpKind::AddLoop);
  EXPECT_EQ(kind("Route unclear images to a clarifier branch"), OpKind::AddConditional);
  EXPECT_EQ(kind("Remove the @clarifier node"), OpKind::RemoveNode);
  EXPECT_EQ(kind("Add a node that describes the lesion"), OpKind::AddNode);
  EXPECT_EQ(infer_op_kind(suggestion("Add a loop", SuggestionKind::Prompt)), OpKind::ModifyPrompts);
}

TEST(Reformulation, PromptSuggestionBecomesModifyPrompts) {
  MockLlm analyzer(fixtures::script(
      {fixtures::rule({"Emit one ModifyPrompts operation"},
                      "Sure:\n```json\n{\"op_kind\": \"ModifyPrompts\", \"payload\": {\"node_id\": \"diagnoser\", "
                      "\"human_prompt\": \"Look hard at {{image_ref}}: {{labels}}\"}, \"origin\": \"Manual\"}\n```")},
      ""));
  auto op = reformulate(suggestion("Ask @diagnoser to look hard.", SuggestionKind::Prompt), make_baseline_graph(),
                        analyzer, kPrompts);
  EXPECT_EQ(op.op_kind, OpKind::ModifyPrompts);
  EXPECT_EQ(op.origin, OpOrigin::Suggestion);
  EXPECT_EQ(op.payload.at("human_prompt"), "Look hard at {{image_ref}}: {{labels}}");
}

TEST(Reformulation, StructuralSuggestionUsesInferredKind) {
  MockLlm analyzer(fixtures::script(
      {fixtures::rule({"Emit one AddLoop operation"},
                      R"({"op_kind": "AddLoop", "payload": {"body_entry": "diagnoser", "body_exit": "reviewer",)"
                      R"( "exit_condition": "stable", "max_iterations": 2}})")},
      ""));
  auto op = reformulate(suggestion("Loop @reviewer back to @diagnoser.", SuggestionKind::Structural),
                        fixtures::loop_graph(), analyzer, kPrompts);
  EXPECT_EQ(op.op_kind, OpKind::AddLoop);
  EXPECT_EQ(op.payload.at("max_iterations"), 2);
}

TEST(Reformulation, BadRepliesAreReformulationErrors) {
  auto code = [](const std::string& reply, SuggestionKind kind) {
    MockLlm analyzer(fixtures::script({}, reply));
    try {
      reformulate(suggestion("Ask @diagnoser to look hard.", kind), make_baseline_graph(), analyzer, kPrompts);
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "expected an agentflow::Error";
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code("no json here", SuggestionKind::Prompt), ErrorCode::ReformulationError);
  EXPECT_EQ(code("{\"op_kind\": \"ModifyPrompts\", ", SuggestionKind::Prompt), ErrorCode::ReformulationError);
  EXPECT_EQ(code(R"({"op_kind": "ModifyPrompts", "payload": {"node_id": "diagnoser"}})", SuggestionKind::Prompt),
            ErrorCode::ReformulationError);
  EXPECT_EQ(code(R"({"op_kind": "RemoveNode", "payload": {"node_id": "diagnoser"}})", SuggestionKind::Prompt),
            ErrorCode::ReformulationError);
  EXPECT_EQ(code(R"({"op_kind": "ModifyPrompts", "payload": {"node_id": "d", "system_prompt": "x"}})",
                 SuggestionKind::Infeasible),
            ErrorCode::ReformulationError);
}

TEST(EvolveStep, PromptFixIsAppliedAndValidated) {
  auto workflow = demo_workflow();
  auto analyzer = demo_analyzer();
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto batch = one_per_class("b");
  auto val = one_per_class("v");
  auto base = make_baseline_graph();
  auto step = evolve_step(base, 1, batch, val, b, config());

  const auto& rec = step.record;
  EXPECT_EQ(rec.graph_version_before, 0);
  EXPECT_EQ(rec.graph_version_after, 1);
  ASSERT_EQ(rec.error_reports.size(), 6u);
  int failing = 0;
  for (const auto& r : rec.error_reports) failing += r.category != ErrorCategory::None;
  EXPECT_EQ(failing, 5);  // Eczema is the mock's default answer
  ASSERT_EQ(rec.suggestions.size(), 1u);
  EXPECT_EQ(rec.suggestions[0].kind, SuggestionKind::Prompt);
  EXPECT_EQ(rec.suggestions[0].source_errors.size(), 5u);
  ASSERT_EQ(rec.applied_operations.size(), 1u);
  EXPECT_EQ(rec.applied_operations[0].version_after, 1);
  EXPECT_TRUE(rec.rejected_operations.empty());
  EXPECT_DOUBLE_EQ(rec.validation_accuracy.top1, 1.0);
  EXPECT_EQ(rec.checkpoint, "checkpoints/iter_1_v1.json");
  EXPECT_EQ(step.graph.nodes.at(0).system_prompt.rfind(fixtures::kBorderMarker, 0), 0u);
  EXPECT_TRUE(validate_graph(step.graph).ok());
}

TEST(EvolveStep, RejectedStructuralOperationIsLogged) {
  MockLlm workflow(fixtures::script({fixtures::rule({"Which branch label applies?"}, "default")}));
  MockLlm analyzer(fixtures::script(
      {fixtures::rule({"Classify the failure."}, "category: Diagnostic\nroot_cause: r\nimplicated_nodes: describer"),
       fixtures::rule({"Propose at most"}, "1. [Structural] Add a loop from @describer back to @clarifier."),
       fixtures::rule({"Can this change be implemented"}, "yes"),
       fixtures::rule({"Emit one AddLoop operation"},
                      R"({"op_kind": "AddLoop", "payload": {"body_entry": "clarifier", "body_exit": "describer",)"
                      R"( "exit_condition": "done", "max_iterations": 3}})")},
      ""));
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto g = fixtures::conditional_graph();
  auto step = evolve_step(g, 1, {fixtures::make_case("a", "Acne")}, {fixtures::make_case("v", "Acne")}, b, config());
  EXPECT_EQ(step.graph, g);
  EXPECT_TRUE(step.record.applied_operations.empty());
  ASSERT_EQ(step.record.rejected_operations.size(), 1u);
  const auto& r = step.record.rejected_operations[0];
  EXPECT_EQ(r.error_code, "ValidationRejected");
  EXPECT_NE(std::find(r.rule_ids.begin(), r.rule_ids.end(), std::string(rules::kDuplicateEdge)), r.rule_ids.end());
  EXPECT_EQ(step.record.graph_version_after, step.record.graph_version_before);
}

TEST(EvolveStep, ReformulationFailureDropsTheSuggestion) {
  MockLlm workflow(fixtures::script({}));
  MockLlm analyzer(fixtures::script(
      {fixtures::rule({"Classify the failure."}, "category: Diagnostic\nroot_cause: r\nimplicated_nodes: diagnoser"),
       fixtures::rule({"Propose at most"}, "1. [Prompt] Ask @diagnoser to look harder."),
       fixtures::rule({"Can this change be implemented"}, "yes")},
      "not json"));
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto step = evolve_step(make_baseline_graph(), 1, {fixtures::make_case("a", "Acne")},
                          {fixtures::make_case("v", "Acne")}, b, config());
  ASSERT_EQ(step.record.dropped_suggestions.size(), 1u);
  EXPECT_EQ(step.record.dropped_suggestions[0].suggestion_id, "s1_1");
  EXPECT_EQ(step.graph.version, 0);
}

TEST(EvolveStep, NoErrorsMeansNoAnalyzerCalls) {
  MockLlm workflow(fixtures::script({}, "1. Acne"));
  MockLlm inner(fixtures::script({}));
  CountingLlm analyzer(inner);
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto step = evolve_step(make_baseline_graph(), 1, {fixtures::make_case("a", "Acne")},
                          {fixtures::make_case("v", "Acne")}, b, config());
  EXPECT_EQ(analyzer.calls, 0);
  EXPECT_TRUE(step.record.suggestions.empty());
  EXPECT_EQ(step.graph.version, 0);
}

TEST(Evolution, ZeroIterationsReturnsTheInitialGraph) {
  MockLlm llm(fixtures::script({}));
  EvolveBackends b{llm, llm, kNoTools, kPrompts};
  auto r = run_evolution(make_baseline_graph(), {}, {}, b, config(0));
  EXPECT_EQ(r.final_graph, make_baseline_graph());
  EXPECT_EQ(r.best_iteration, 0);
  EXPECT_TRUE(r.records.empty());
}

TEST(Evolution, BadSettingsAreRejected) {
  MockLlm llm(fixtures::script({}));
  EvolveBackends b{llm, llm, kNoTools, kPrompts};
  auto cases = one_per_class("c");
  for (auto mutate : std::vector<std::function<void(EvolveConfig&)>>{
           [](EvolveConfig& c) { c.convergence.epsilon = 0; },
           [](EvolveConfig& c) { c.convergence.window = 0; },
           [](EvolveConfig& c) { c.convergence.max_iterations = -1; }}) {
    auto cfg = config();
    mutate(cfg);
    EXPECT_THROW(run_evolution(make_baseline_graph(), cases, cases, b, cfg), Error);
  }
  try {
    run_evolution(make_baseline_graph(), cases, {}, b, config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Evolution, FlatAccuracyStopsAfterTheWindow) {
  MockLlm workflow(fixtures::script({}));
  MockLlm analyzer(fixtures::script({}, ""));
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto train = one_per_class("t");
  auto cfg = config(10);
  cfg.batch_size = 4;
  auto r = run_evolution(make_baseline_graph(), train, one_per_class("v"), b, cfg);
  ASSERT_EQ(r.records.size(), 3u);  // baseline plus `window` flat iterations
  EXPECT_EQ(r.best_iteration, 0);
  EXPECT_EQ(r.records[1].batch_case_ids, (std::vector<std::string>{"t0", "t1", "t2", "t3"}));
  EXPECT_EQ(r.records[2].batch_case_ids, (std::vector<std::string>{"t4", "t5", "t0", "t1"}));
}

TEST(Evolution, ImprovesOnceThenConvergesAndWritesArtifacts) {
  auto workflow = demo_workflow();
  auto analyzer = demo_analyzer();
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  auto dir = fixtures::temp_dir("evolve_converge");
  auto cfg = config(10);
  cfg.batch_size = 3;
  cfg.output_dir = dir;
  auto r = run_evolution(make_baseline_graph(), one_per_class("t"), one_per_class("v"), b, cfg);

  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_NEAR(r.records[0].validation_accuracy.top1, 1.0 / 6, 1e-12);
  EXPECT_DOUBLE_EQ(r.records[1].validation_accuracy.top1, 1.0);
  EXPECT_EQ(r.best_iteration, 1);
  EXPECT_EQ(r.final_graph.version, 1);
  for (const char* f : {"checkpoints/iter_0_v0.json", "checkpoints/iter_1_v1.json", "checkpoints/iter_2_v1.json",
                        "checkpoints/iter_3_v1.json", "evolution_log.jsonl", "accuracy.csv", "best.json",
                        "traces/iter_1.jsonl"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(load_graph(dir / "best.json"), r.final_graph);
  EXPECT_EQ(text::split(text::trim(text::read_file(dir / "evolution_log.jsonl")), '\n').size(), 4u);
  EXPECT_EQ(text::read_file(dir / "accuracy.csv"), accuracy_csv(r.records));
  auto rows = text::split(accuracy_csv(r.records), '\n');
  EXPECT_EQ(rows.at(0), "iteration,top1,top3,top5");
  EXPECT_EQ(rows.at(1), "0,0.1667,0.5000,0.8333");
  EXPECT_EQ(rows.at(2), "1,1.0000,1.0000,1.0000");
}

TEST(Evolution, ReplayIsByteIdentical) {
  auto workflow = demo_workflow();
  auto analyzer = demo_analyzer();
  EvolveBackends b{workflow, analyzer, kNoTools, kPrompts};
  std::vector<std::string> logs;
  for (const char* name : {"evolve_replay_a", "evolve_replay_b"}) {
    auto cfg = config(10);
    cfg.batch_size = 2;
    cfg.eval.concurrency = 3;
    cfg.output_dir = fixtures::temp_dir(name);
    run_evolution(make_baseline_graph(), one_per_class("t"), one_per_class("v"), b, cfg);
    logs.push_back(text::read_file(cfg.output_dir / "evolution_log.jsonl") +
                   text::read_file(cfg.output_dir / "best.json"));
  }
  EXPECT_EQ(logs[0], logs[1]);
}

TEST(Evolution, RecordJsonShape) {
  IterationRecord r;
  r.iteration = 2;
  r.suggestions.push_back(suggestion("x", SuggestionKind::Infeasible));
  r.suggestions[0].infeasible_reason = "unknown tool t";
  auto j = to_json(r);
  EXPECT_EQ(j.at("iteration"), 2);
  EXPECT_EQ(j.at("suggestions").at(0).at("kind"), "Infeasible");
  EXPECT_EQ(j.at("suggestions").at(0).at("infeasible_reason"), "unknown tool t");
  for (const char* key : {"graph_version_before", "graph_version_after", "batch_case_ids", "error_reports",
                          "applied_operations", "rejected_operations", "dropped_suggestions",
                          "validation_accuracy", "checkpoint", "notes"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(checkpoint_name(3, 7), "checkpoints/iter_3_v7.json");
}
