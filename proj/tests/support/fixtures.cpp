#include "fixtures.hpp"

#include <functional>
#include <thread>

#include "agentflow/text.hpp"

#ifndef AGENTFLOW_TEST_DATA_DIR
#error "AGENTFLOW_TEST_DATA_DIR must be defined"
#endif

namespace fixtures {

using nlohmann::json;

MockRule rule(std::vector<std::string> contains, std::string reply) {
  MockRule r;
  r.contains = std::move(contains);
  r.reply = std::move(reply);
  return r;
}

MockScript script(std::vector<MockRule> rules, std::string fallback) {
  MockScript s;
  s.rules = std::move(rules);
  s.fallback.reply = std::move(fallback);
  return s;
}

CaseRecord make_case(std::string id, std::string label) {
  CaseRecord c;
  c.image_ref = "images/" + text::replace_all(text::to_lower(label), " ", "_") + "_" + id + ".jpg";
  c.case_id = std::move(id);
  c.label = std::move(label);
  c.label_vocabulary = kLabels;
  return c;
}

WorkflowOperation op(OpKind kind, json payload, OpOrigin origin) {
  return WorkflowOperation{kind, std::move(payload), origin};
}

json basic_node_json(const std::string& id, const std::string& human_prompt) {
  return {{"node_id", id},
          {"kind", "Basic"},
          {"node_name", id + " agent"},
          {"description", "Handles the " + id + " step."},
          {"system_prompt", "You are the " + id + " agent. [node:" + id + "]"},
          {"human_prompt", human_prompt.empty() ? "Image: {{image_ref}}\nCandidates: {{labels}}"
                                                : human_prompt}};
}

WorkflowGraph conditional_graph() {
  auto g = make_baseline_graph("conditional");
  g = apply_operation(g, op(OpKind::AddNode, {{"node", basic_node_json("describer")},
                                              {"anchor", "diagnoser"},
                                              {"position", "before"}}));
  g = apply_operation(g, op(OpKind::AddNode, {{"node", basic_node_json("clarifier", "Clarify: {{describer}}")},
                                              {"anchor", "describer"},
                                              {"position", "after"}}));
  g = apply_operation(
      g, op(OpKind::AddConditional,
            {{"source", "describer"},
             {"condition", "Is the image clear enough to diagnose?"},
             {"branches",
              json::array({{{"branch_label", "default"}, {"target", "diagnoser"}},
                           {{"branch_label", "image_unclear"}, {"target", "clarifier"}}})}}));
  return g;
}

WorkflowGraph loop_graph(int max_iterations) {
  auto g = make_baseline_graph("loop");
  g = apply_operation(g, op(OpKind::AddNode,
                            {{"node", basic_node_json("reviewer", "Review and restate the ranking: {{diagnoser}}")},
                             {"anchor", "diagnoser"}}));
  g = apply_operation(g, op(OpKind::AddLoop, {{"body_entry", "diagnoser"},
                                              {"body_exit", "reviewer"},
                                              {"exit_condition", "the ranking is stable"},
                                              {"max_iterations", max_iterations}}));
  return g;
}

WorkflowGraph parallel_graph() {
  auto g = make_baseline_graph("parallel");
  g = apply_operation(g, op(OpKind::AddNode, {{"node", basic_node_json("describer")},
                                              {"anchor", "diagnoser"},
                                              {"position", "before"}}));
  g = apply_operation(
      g, op(OpKind::AddParallel,
            {{"source", "describer"},
             {"arms", json::array({basic_node_json("morphology", "Describe lesion shape in {{image_ref}}"),
                                   basic_node_json("color", "Describe lesion color in {{image_ref}}")})},
             {"fusion", basic_node_json("synthesizer", "Combine the findings into one description.")}}));
  return g;
}

WorkflowGraph round_table_graph() {
  auto g = make_baseline_graph("round_table");
  return apply_operation(
      g, op(OpKind::ExpandFramework,
            {{"anchor", "diagnoser"},
             {"template",
              {{"template_id", "RoundTable"},
               {"expert_roles", {"Dermatologist", "Pathologist", "Internist"}},
               {"rounds", 2}}}}));
}

WorkflowGraph chain_parallel_graph(const std::vector<int>& arm_lengths) {
  auto g = make_baseline_graph("chains");
  g = apply_operation(g, op(OpKind::AddNode, {{"node", basic_node_json("source")},
                                              {"anchor", "diagnoser"},
                                              {"position", "before"}}));
  json arms = json::array();
  for (size_t i = 0; i < arm_lengths.size(); ++i)
    arms.push_back(basic_node_json("arm" + std::to_string(i) + "_0"));
  g = apply_operation(g, op(OpKind::AddParallel, {{"source", "source"},
                                                  {"arms", arms},
                                                  {"fusion", basic_node_json("fusion", "Fuse the findings.")}}));
  for (size_t i = 0; i < arm_lengths.size(); ++i)
    for (int j = 1; j < arm_lengths[i]; ++j) {
      std::string prev = "arm" + std::to_string(i) + "_" + std::to_string(j - 1);
      std::string id = "arm" + std::to_string(i) + "_" + std::to_string(j);
      g = apply_operation(g, op(OpKind::AddNode, {{"node", basic_node_json(id, "Refine: {{" + prev + "}}")},
                                                  {"anchor", prev}}));
    }
  return g;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937& rng) {
  return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

WorkflowOperation random_operation(const WorkflowGraph& g, std::mt19937& rng, int& counter) {
  std::vector<std::string> ids;
  for (const auto& n : g.nodes) ids.push_back(n.node_id);
  auto fresh = [&] { return "n" + std::to_string(++counter); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  switch (std::uniform_int_distribution<int>(0, 6)(rng)) {
    case 0:
      return op(OpKind::AddNode, {{"node", basic_node_json(fresh())},
                                  {"anchor", pick(ids, rng)},
                                  {"position", coin(0.5) ? "after" : "before"}});
    case 1:
      return op(OpKind::RemoveNode, {{"node_id", coin(0.9) ? pick(ids, rng) : "ghost"}});
    case 2:
      return op(OpKind::ModifyPrompts,
                {{"node_id", pick(ids, rng)}, {"human_prompt", "Reconsider {{image_ref}} carefully."}});
    case 3: {
      std::string a = pick(ids, rng), b = pick(ids, rng);
      json branches = json::array({{{"branch_label", "default"}, {"target", a}},
                                   {{"branch_label", "alt"}, {"target", b}}});
      if (coin(0.2)) branches.erase(0);
      return op(OpKind::AddConditional,
                {{"source", pick(ids, rng)}, {"condition", "which path fits"}, {"branches", branches}});
    }
    case 4:
      return op(OpKind::AddLoop, {{"body_entry", pick(ids, rng)},
                                  {"body_exit", pick(ids, rng)},
                                  {"exit_condition", coin(0.2) ? "" : "done"},
                                  {"max_iterations", std::uniform_int_distribution<int>(0, 4)(rng)}});
    case 5: {
      json arms = json::array();
      int n = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int i = 0; i < n; ++i) arms.push_back(basic_node_json(fresh()));
      return op(OpKind::AddParallel,
                {{"source", pick(ids, rng)}, {"arms", arms}, {"fusion", basic_node_json(fresh(), "Fuse.")}});
    }
    default: {
      static const std::vector<std::string> templates = {"ChainOfThought", "Reflexion", "RoundTable",
                                                         "CMD"};
      json tpl{{"template_id", pick(templates, rng)},
               {"expert_roles", {"Expert " + std::to_string(++counter), "Expert " + std::to_string(++counter)}},
               {"rounds", std::uniform_int_distribution<int>(1, 2)(rng)},
               {"max_reflections", std::uniform_int_distribution<int>(1, 3)(rng)}};
      if (tpl["template_id"] == "ChainOfThought" || tpl["template_id"] == "Reflexion") {
        tpl.erase("expert_roles");
        tpl.erase("rounds");
      }
      return op(OpKind::ExpandFramework, {{"anchor", pick(ids, rng)}, {"template", tpl}});
    }
  }
}

LlmResponse SlowLlm::complete(const LlmRequest& request) const {
  const size_t h = std::hash<std::string>{}(request.system_prompt + request.human_prompt);
  std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int>(h % (max_delay_ms_ + 1))));
  return inner_.complete(request);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("agentflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path data_dir() { return AGENTFLOW_TEST_DATA_DIR; }
std::filesystem::path golden_dir() { return data_dir().parent_path() / "golden"; }

std::filesystem::path demo_dir() { return data_dir().parent_path().parent_path() / "examples_config"; }

}  // namespace fixtures
