#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/context.hpp"
#include "agentflow/error.hpp"

namespace agentflow {

inline constexpr double kDefaultTemperature = 1.0;
inline constexpr std::int64_t kDefaultSeed = 42;

struct LlmRequest {
  std::string system_prompt;
  std::string human_prompt;
  std::optional<std::string> image_ref;
  double temperature = kDefaultTemperature;
  std::optional<std::int64_t> seed = kDefaultSeed;
};

struct LlmResponse {
  std::string text;  // refusal reason when refused
  int prompt_tokens = 0;
  int completion_tokens = 0;
  std::string model_id;
  bool refused = false;
};

/// Chat-style backend. Implementations must allow concurrent complete()
/// calls. Failures are thrown as Error with code Transport, RateLimited or
/// MalformedResponse; refusals are data, never exceptions.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) const = 0;
};

/// Deterministic token estimate used when a backend reports none.
int estimate_tokens(std::string_view text);

/// One scripted reply. A rule matches when every `contains` string occurs
/// in the request's match text and no `excludes` string does.
struct MockRule {
  std::vector<std::string> contains;
  std::vector<std::string> excludes;
  std::string reply;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  bool refused = false;
  std::optional<ErrorCode> fail;  // simulate a backend error instead of replying
};

struct MockScript {
  std::vector<MockRule> rules;
  MockRule fallback;  // used when no rule matches
  std::string model_id = "mock";

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Scripted backend: first matching rule wins, no hidden state.
class MockLlm final : public LlmClient {
 public:
  explicit MockLlm(MockScript script) : script_(std::move(script)) {}

  LlmResponse complete(const LlmRequest& request) const override;
  const MockScript& script() const { return script_; }

  /// System prompt, human prompt and image reference joined by newlines.
  static std::string match_text(const LlmRequest& request);

 private:
  MockScript script_;
};

/// Substitutes every {{name}} from the context. Throws
/// UnresolvedPlaceholder naming the first missing key.
std::string render_prompt(std::string_view tmpl, const NodeContext& ctx);

struct LlmConfig {
  std::string backend = "mock";  // "http" or "mock"
  std::string endpoint_url;
  std::string model_id;
  std::string api_key_env;
  double temperature = kDefaultTemperature;
  std::optional<std::int64_t> seed = kDefaultSeed;
  int max_in_flight = 4;
  int timeout_seconds = 60;
  std::filesystem::path mock_script;
};

std::unique_ptr<LlmClient> make_llm_client(const LlmConfig& config);

}  // namespace agentflow
