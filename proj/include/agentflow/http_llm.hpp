#pragma once

#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "agentflow/llm.hpp"

namespace agentflow {

/// Chat-completions client (OpenAI-compatible wire format). Images are sent
/// as image_url parts: http(s) and data: URLs pass through, existing local
/// files are inlined as base64 data URLs.
class HttpLlm final : public LlmClient {
 public:
  struct Options {
    std::string endpoint_url;  // full URL of the chat completions route
    std::string model_id;
    std::string api_key;  // empty: no Authorization header
    int timeout_seconds = 60;
    int max_in_flight = 4;
  };

  explicit HttpLlm(Options options);

  LlmResponse complete(const LlmRequest& request) const override;

  static nlohmann::json build_body(const LlmRequest& request, const std::string& model_id);
  /// Throws MalformedResponse when the body is not a chat completion.
  static LlmResponse parse_body(std::string_view body, const std::string& fallback_model);

 private:
  Options options_;
  std::string host_;  // scheme://host[:port]
  std::string path_;
  mutable std::counting_semaphore<1024> slots_;
};

}  // namespace agentflow
