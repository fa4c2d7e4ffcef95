#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "agentflow/exec.hpp"
#include "agentflow/graph.hpp"
#include "agentflow/llm.hpp"
#include "agentflow/ops.hpp"

namespace fixtures {

using namespace agentflow;

inline const std::vector<std::string> kLabels = {"Acne", "Eczema", "Psoriasis", "Rosacea",
                                                 "Tinea corporis", "Urticaria"};

MockRule rule(std::vector<std::string> contains, std::string reply);
MockScript script(std::vector<MockRule> rules, std::string fallback = "1. Eczema 2. Acne 3. Psoriasis");

CaseRecord make_case(std::string id, std::string label);

WorkflowOperation op(OpKind kind, nlohmann::json payload, OpOrigin origin = OpOrigin::Seed);
nlohmann::json basic_node_json(const std::string& id, const std::string& human_prompt = "");

/// describer -> {default: diagnoser, image_unclear: clarifier -> diagnoser}
WorkflowGraph conditional_graph();
/// diagnoser -> reviewer, LoopBack reviewer -> diagnoser
WorkflowGraph loop_graph(int max_iterations = 3);
/// describer fans out to morphology and color, fused at synthesizer, then diagnoser
WorkflowGraph parallel_graph();
/// baseline expanded with a three-expert, two-round RoundTable
WorkflowGraph round_table_graph();

/// Source node fanning out to `arm_lengths.size()` chains of the given
/// lengths; every node prompt carries a "[node:<id>]" marker.
WorkflowGraph chain_parallel_graph(const std::vector<int>& arm_lengths);

/// A random, possibly invalid operation against `g`.
WorkflowOperation random_operation(const WorkflowGraph& g, std::mt19937& rng, int& counter);

/// Delays every reply by a prompt-dependent amount, so concurrent calls
/// finish out of order.
class SlowLlm final : public LlmClient {
 public:
  SlowLlm(const LlmClient& inner, int max_delay_ms) : inner_(inner), max_delay_ms_(max_delay_ms) {}
  LlmResponse complete(const LlmRequest& request) const override;

 private:
  const LlmClient& inner_;
  int max_delay_ms_;
};

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::filesystem::path data_dir();
std::filesystem::path golden_dir();

/// The scripted demo under examples_config/: manifest, splits, index and
/// mock scripts. The workflow mock ranks a case correctly only when the
/// prompt carries kBorderMarker; the analyzer mock proposes adding it.
std::filesystem::path demo_dir();
inline constexpr const char* kBorderMarker = "Check the lesion border first";

}  // namespace fixtures
