#include <gtest/gtest.h>

#include <random>

#include "agentflow/graph.hpp"
#include "agentflow/graph_json.hpp"
#include "agentflow/ops.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace agentflow;

namespace {

NodeSpec basic(const std::string& id, const std::string& human = "Look at {{image_ref}}") {
  return NodeSpec::basic(id, id + " name", id + " step", "You are " + id + ".", human);
}

// a -> b -> c, entry a, output c
WorkflowGraph chain3() {
  auto g = make_baseline_graph("chain");
  g = add_node(g, basic("a"), {Placement::Side::Before, "diagnoser"});
  g = add_node(g, basic("b"), {Placement::Side::Before, "diagnoser"});
  return g;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an agentflow::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Graph, BaselineIsValid) {
  auto g = make_baseline_graph();
  EXPECT_TRUE(validate_graph(g).ok());
  EXPECT_EQ(graph_stats(g), (GraphStats{1, 0, 0, 0}));
}

TEST(Graph, DuplicateEdgeAcrossKindsIsReported) {
  auto g = chain3();
  g.edges.push_back(EdgeSpec::branch("a", "b", "default", "x"));
  auto r = validate_graph(g);
  EXPECT_TRUE(r.has(rules::kDuplicateEdge)) << r.summary();
}

TEST(Graph, SequentialCycleIsReported) {
  auto g = chain3();
  g.edges.push_back(EdgeSpec::sequential("b", "a"));
  auto r = validate_graph(g);
  EXPECT_TRUE(r.has(rules::kCycleWithoutExit)) << r.summary();
}

TEST(Graph, AddToolNodeAppendsAndBumpsVersion) {
  auto g = make_baseline_graph();
  auto g2 = add_node(g, NodeSpec::tool("img_search", "Image search", "retrieve similar cases", "image_search"),
                     {Placement::Side::Before, "diagnoser"});
  EXPECT_EQ(g2.nodes.size(), 2u);
  EXPECT_EQ(g2.version, g.version + 1);
  EXPECT_EQ(g2.nodes.back().node_id, "img_search");
  EXPECT_EQ(g2.entry_node, "img_search");
  EXPECT_EQ(g, make_baseline_graph());
}

TEST(Graph, AddNodeRejectsDuplicateIdAndEmptySystemPrompt) {
  auto g = make_baseline_graph();
  EXPECT_EQ(code_of([&] { add_node(g, basic("diagnoser"), {Placement::Side::After, "diagnoser"}); }),
            ErrorCode::DuplicateNodeId);
  auto spec = basic("x");
  spec.system_prompt.clear();
  EXPECT_EQ(code_of([&] { add_node(g, spec, {Placement::Side::After, "diagnoser"}); }),
            ErrorCode::InvalidNodeSpec);
}

TEST(Graph, NodeSpecFieldFuzzing) {
  // Each required field blanked in turn must be caught.
  const auto good_basic = basic("x");
  const auto good_tool = NodeSpec::tool("t", "Tool", "search", "image_search");
  EXPECT_TRUE(node_spec_problems(good_basic).empty());
  EXPECT_TRUE(node_spec_problems(good_tool).empty());
  for (auto field : {&NodeSpec::node_id, &NodeSpec::node_name, &NodeSpec::system_prompt,
                     &NodeSpec::human_prompt}) {
    auto s = good_basic;
    s.*field = "";
    EXPECT_FALSE(node_spec_problems(s).empty());
  }
  for (auto field : {&NodeSpec::node_id, &NodeSpec::node_name, &NodeSpec::tool_name}) {
    auto s = good_tool;
    s.*field = "";
    EXPECT_FALSE(node_spec_problems(s).empty());
  }
}

TEST(Graph, RemoveMiddleNodeSplices) {
  auto g = chain3();
  auto g2 = remove_node(g, "b");
  ASSERT_NE(g2.find_edge("a", "diagnoser"), nullptr);
  EXPECT_EQ(g2.find_edge("a", "diagnoser")->kind, EdgeKind::Sequential);
  EXPECT_TRUE(oracles::reachable(g2, "a").contains("diagnoser"));
  EXPECT_EQ(g2.nodes.size(), 2u);
}

TEST(Graph, RemoveProtectedAndMissing) {
  auto g = chain3();
  EXPECT_EQ(code_of([&] { remove_node(g, "a"); }), ErrorCode::ProtectedNode);
  EXPECT_EQ(code_of([&] { remove_node(g, "diagnoser"); }), ErrorCode::ProtectedNode);
  EXPECT_EQ(code_of([&] { remove_node(g, "nope"); }), ErrorCode::NodeNotFound);
}

TEST(Graph, RemoveOneParallelArm) {
  auto g = apply_operation(
      make_baseline_graph(),
      fixtures::op(OpKind::AddParallel, {{"source", "diagnoser"},
                                         {"arms", {fixtures::basic_node_json("p"), fixtures::basic_node_json("q")}},
                                         {"fusion", fixtures::basic_node_json("f", "Fuse.")}}));
  // the fusion prompt still names the removed arm
  EXPECT_EQ(code_of([&] { remove_node(g, "p"); }), ErrorCode::ValidationRejected);

  EXPECT_EQ(code_of([&] { remove_node(g, "f"); }), ErrorCode::ProtectedNode);
}

TEST(Graph, RemoveThatWouldDisconnect) {
  auto g = fixtures::conditional_graph();
  EXPECT_NO_THROW(remove_node(g, "clarifier"));
  auto p = fixtures::parallel_graph();
  auto spliced = remove_node(p, "synthesizer");
  ASSERT_NE(spliced.find_edge("color", "diagnoser"), nullptr);
  EXPECT_EQ(spliced.find_edge("color", "diagnoser")->kind, EdgeKind::ParallelFanIn);

  // describer only has Conditional successors, so intake would be stranded
  g = add_node(g, basic("intake"), {Placement::Side::Before, "describer"});
  EXPECT_EQ(code_of([&] { remove_node(g, "describer"); }), ErrorCode::WouldDisconnect);
}

TEST(Graph, AddEdgeRules) {
  auto g = chain3();
  EXPECT_EQ(code_of([&] { add_edge(g, EdgeSpec::sequential("a", "b")); }), ErrorCode::DuplicateEdge);
  EXPECT_EQ(code_of([&] { add_edge(g, EdgeSpec::sequential("diagnoser", "a")); }),
            ErrorCode::CycleWithoutLoopBack);
  EXPECT_EQ(code_of([&] { add_edge(g, EdgeSpec::sequential("a", "zzz")); }), ErrorCode::UnknownNode);
  auto g2 = add_edge(g, EdgeSpec::loop_back("diagnoser", "a", "done", 3));
  EXPECT_TRUE(validate_graph(g2).ok());
  EXPECT_EQ(graph_stats(g2).loop_count, 1);
}

TEST(Graph, DuplicateRuleIsDirectionSensitive) {
  auto g = chain3();
  // b->a exists in neither direction check: only cycle rules apply.
  EXPECT_EQ(code_of([&] { add_edge(g, EdgeSpec::sequential("b", "a")); }),
            ErrorCode::CycleWithoutLoopBack);
  EXPECT_NO_THROW(add_edge(g, EdgeSpec::loop_back("b", "a", "stop", 2)));
}

TEST(Graph, LoopRulesNeedConditionAndBound) {
  auto g = chain3();
  auto no_cond = EdgeSpec::loop_back("diagnoser", "a", "", 3);
  try {
    add_edge(g, no_cond);
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_TRUE(e.report().has(rules::kLoopMissingExitCondition));
  }
  auto unbounded = EdgeSpec::loop_back("diagnoser", "a", "done", 3);
  unbounded.max_iterations.reset();
  try {
    add_edge(g, unbounded);
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_TRUE(e.report().has(rules::kLoopUnbounded));
  }
}

TEST(Graph, StatsOnChainWithConditional) {
  // m -> n -> {alt -> alt2 | skip} -> diagnoser
  auto h = make_baseline_graph();
  h = add_node(h, basic("m"), {Placement::Side::Before, "diagnoser"});
  h = add_node(h, basic("n"), {Placement::Side::Before, "diagnoser"});
  h = add_node(h, basic("alt"), {Placement::Side::After, "n"});
  h = add_node(h, basic("alt2"), {Placement::Side::After, "alt"});
  h = add_conditional(h, "n", {{"default", "alt"}, {"skip", "diagnoser"}}, "is more detail needed");
  EXPECT_EQ(graph_stats(h), (GraphStats{5, 1, 0, 0}));
}

TEST(Graph, RoundTableStats) {
  EXPECT_EQ(graph_stats(fixtures::round_table_graph()).node_count, 1 + 7);
}

TEST(Graph, AddThenRemoveEdgeRestoresStructure) {
  auto g = chain3();
  auto g2 = remove_edge(add_edge(g, EdgeSpec::loop_back("diagnoser", "b", "ok", 2)), "diagnoser", "b");
  EXPECT_EQ(g2.nodes, g.nodes);
  EXPECT_EQ(g2.edges, g.edges);
  EXPECT_EQ(g2.entry_node, g.entry_node);
  EXPECT_EQ(g2.output_node, g.output_node);
  EXPECT_EQ(g2.version, g.version + 2);
}

TEST(Graph, JsonRoundTrip) {
  for (const auto& g : {make_baseline_graph(), fixtures::conditional_graph(), fixtures::loop_graph(),
                        fixtures::parallel_graph(), fixtures::round_table_graph()}) {
    auto text = serialize_graph(g);
    EXPECT_EQ(parse_graph(text), g);
    EXPECT_EQ(serialize_graph(parse_graph(text)), text);
  }
}

TEST(Graph, JsonRejectsUnknownFields) {
  auto j = to_json(make_baseline_graph());
  j["extra"] = 1;
  EXPECT_EQ(code_of([&] { graph_from_json(j); }), ErrorCode::ParseError);
  auto k = to_json(make_baseline_graph());
  k["nodes"][0]["colour"] = "red";
  EXPECT_EQ(code_of([&] { graph_from_json(k); }), ErrorCode::ParseError);
}

TEST(Graph, PlaceholdersMustResolve) {
  auto g = make_baseline_graph();
  g.nodes[0].human_prompt = "{{nonexistent}}";
  EXPECT_TRUE(validate_graph(g).has(rules::kUnknownPlaceholder));
}

// Property: random operation sequences never publish an invalid graph, never
// touch their input, and every cycle in every published graph passes
// through exactly one LoopBack edge.
TEST(GraphProperty, RandomMutationSequences) {
  std::mt19937 rng(7);
  int accepted = 0, rejected = 0;
  for (int seq = 0; seq < 60; ++seq) {
    auto g = make_baseline_graph("seq" + std::to_string(seq));
    int counter = 0;
    for (int step = 0; step < 12; ++step) {
      const auto before = g;
      auto op = fixtures::random_operation(g, rng, counter);
      try {
        auto next = apply_operation(g, op);
        ASSERT_EQ(g, before);
        ASSERT_TRUE(validate_graph(next).ok()) << validate_graph(next).summary();
        ASSERT_EQ(next.version, g.version + 1);
        for (const auto& cycle : oracles::simple_cycles(next)) {
          int lb = 0;
          for (const auto* e : cycle) lb += e->kind == EdgeKind::LoopBack;
          ASSERT_EQ(lb, 1) << serialize_graph(next);
        }
        g = std::move(next);
        ++accepted;
      } catch (const Error&) {
        ASSERT_EQ(g, before);
        ++rejected;
      }
    }
  }
  EXPECT_GT(accepted, 100);
  EXPECT_GT(rejected, 50);
}
