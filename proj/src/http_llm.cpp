#include "agentflow/http_llm.hpp"

#include <filesystem>
#include <regex>

#include <httplib.h>

#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

namespace {

std::string mime_for(const std::filesystem::path& p) {
  auto ext = text::to_lower(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/jpeg";
}

std::string image_url(const std::string& ref) {
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0 || ref.rfind("data:", 0) == 0)
    return ref;
  std::filesystem::path p = ref.rfind("file://", 0) == 0 ? ref.substr(7) : ref;
  std::error_code ec;
  if (std::filesystem::is_regular_file(p, ec))
    return "data:" + mime_for(p) + ";base64," + httplib::detail::base64_encode(text::read_file(p));
  return ref;
}

// Releases a semaphore slot on scope exit.
struct SlotGuard {
  std::counting_semaphore<1024>& sem;
  explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

HttpLlm::HttpLlm(Options options)
    : options_(std::move(options)), slots_(std::max(1, std::min(options_.max_in_flight, 1024))) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint_url, m, url_re))
    throw Error(ErrorCode::ConfigError, "endpoint_url must be an http(s) URL: " + options_.endpoint_url);
  host_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

json HttpLlm::build_body(const LlmRequest& request, const std::string& model_id) {
  json user;
  if (request.image_ref) {
    user = json::array({json{{"type", "text"}, {"text", request.human_prompt}},
                        json{{"type", "image_url"}, {"image_url", {{"url", image_url(*request.image_ref)}}}}});
  } else {
    user = request.human_prompt;
  }
  json body{{"model", model_id},
            {"messages", json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                                      json{{"role", "user"}, {"content", user}}})},
            {"temperature", request.temperature}};
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

LlmResponse HttpLlm::parse_body(std::string_view body, const std::string& fallback_model) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  try {
    const json& choice = j.at("choices").at(0);
    const json& message = choice.at("message");
    LlmResponse r;
    r.model_id = j.value("model", fallback_model);
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      r.prompt_tokens = u->value("prompt_tokens", 0);
      r.completion_tokens = u->value("completion_tokens", 0);
    }
    auto refusal = message.find("refusal");
    if (refusal != message.end() && refusal->is_string()) {
      r.refused = true;
      r.text = refusal->get<std::string>();
    } else if (choice.value("finish_reason", std::string{}) == "content_filter") {
      r.refused = true;
      r.text = "content_filter";
    } else {
      const json& content = message.at("content");
      if (!content.is_string()) throw Error(ErrorCode::MalformedResponse, "message content is not text");
      r.text = content.get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("unexpected response shape: ") + e.what());
  }
}

LlmResponse HttpLlm::complete(const LlmRequest& request) const {
  SlotGuard slot(slots_);
  httplib::Client client(host_);
  client.set_connection_timeout(options_.timeout_seconds, 0);
  client.set_read_timeout(options_.timeout_seconds, 0);
  client.set_write_timeout(options_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const std::string body = build_body(request, options_.model_id).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res)
    throw Error(ErrorCode::Transport, "request to " + host_ + path_ +
                                          " failed: " + httplib::to_string(res.error()));
  if (res->status == 429) throw Error(ErrorCode::RateLimited, "rate limited by " + host_);
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorCode::Transport, "HTTP " + std::to_string(res->status) + " from " + host_ +
                                          ": " + res->body.substr(0, 200));
  return parse_body(res->body, options_.model_id);
}

}  // namespace agentflow
