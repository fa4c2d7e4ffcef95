#include "agentflow/llm.hpp"

#include <cstdlib>

#include "agentflow/graph_json.hpp"
#include "agentflow/http_llm.hpp"
#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

int estimate_tokens(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
    return out;
  }
  if (!it->is_array())
    throw Error(ErrorCode::ParseError, std::string("mock rule: '") + key + "' must be a string list");
  for (const auto& s : *it) {
    if (!s.is_string())
      throw Error(ErrorCode::ParseError, std::string("mock rule: '") + key + "' must be a string list");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::optional<int> opt_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number_integer() || it->get<int>() < 0)
    throw Error(ErrorCode::ParseError, std::string("mock rule: '") + key + "' must be a count >= 0");
  return it->get<int>();
}

MockRule rule_from_json(const json& j) {
  reject_unknown_fields(j,
                        {"contains", "excludes", "reply", "prompt_tokens", "completion_tokens",
                         "refused", "fail"},
                        "mock rule");
  MockRule r;
  r.contains = string_list(j, "contains");
  r.excludes = string_list(j, "excludes");
  if (auto it = j.find("reply"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::ParseError, "mock rule: reply must be a string");
    r.reply = it->get<std::string>();
  }
  r.prompt_tokens = opt_int(j, "prompt_tokens");
  r.completion_tokens = opt_int(j, "completion_tokens");
  if (auto it = j.find("refused"); it != j.end()) r.refused = it->get<bool>();
  if (auto it = j.find("fail"); it != j.end()) {
    const auto name = it->get<std::string>();
    if (name == "Transport") r.fail = ErrorCode::Transport;
    else if (name == "RateLimited") r.fail = ErrorCode::RateLimited;
    else if (name == "MalformedResponse") r.fail = ErrorCode::MalformedResponse;
    else throw Error(ErrorCode::ParseError, "mock rule: unknown failure '" + name + "'");
  }
  return r;
}

json rule_to_json(const MockRule& r) {
  json j{{"reply", r.reply}};
  if (!r.contains.empty()) j["contains"] = r.contains;
  if (!r.excludes.empty()) j["excludes"] = r.excludes;
  if (r.prompt_tokens) j["prompt_tokens"] = *r.prompt_tokens;
  if (r.completion_tokens) j["completion_tokens"] = *r.completion_tokens;
  if (r.refused) j["refused"] = true;
  if (r.fail) j["fail"] = to_string(*r.fail);
  return j;
}

}  // namespace

MockScript MockScript::from_json(const json& j) {
  reject_unknown_fields(j, {"rules", "default_reply", "model_id"}, "mock script");
  MockScript s;
  if (auto it = j.find("rules"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::ParseError, "mock script: rules must be an array");
    for (const auto& r : *it) s.rules.push_back(rule_from_json(r));
  }
  if (auto it = j.find("default_reply"); it != j.end()) s.fallback.reply = it->get<std::string>();
  if (auto it = j.find("model_id"); it != j.end()) s.model_id = it->get<std::string>();
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(text::read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "mock script " + path.string() + ": " + e.what());
  }
}

json MockScript::to_json() const {
  json rules_json = json::array();
  for (const auto& r : rules) rules_json.push_back(rule_to_json(r));
  return json{{"rules", rules_json}, {"default_reply", fallback.reply}, {"model_id", model_id}};
}

std::string MockLlm::match_text(const LlmRequest& request) {
  std::string s = request.system_prompt + "\n" + request.human_prompt;
  if (request.image_ref) s += "\n" + *request.image_ref;
  return s;
}

LlmResponse MockLlm::complete(const LlmRequest& request) const {
  const std::string haystack = match_text(request);
  const MockRule* hit = &script_.fallback;
  for (const auto& rule : script_.rules) {
    bool ok = true;
    for (const auto& c : rule.contains) ok = ok && text::contains(haystack, c);
    for (const auto& x : rule.excludes) ok = ok && !text::contains(haystack, x);
    if (ok) {
      hit = &rule;
      break;
    }
  }
  if (hit->fail) throw Error(*hit->fail, "scripted backend failure");
  LlmResponse r;
  r.text = hit->reply;
  r.refused = hit->refused;
  r.model_id = script_.model_id;
  r.prompt_tokens =
      hit->prompt_tokens.value_or(estimate_tokens(request.system_prompt + request.human_prompt));
  r.completion_tokens = hit->completion_tokens.value_or(estimate_tokens(hit->reply));
  return r;
}

std::string render_prompt(std::string_view tmpl, const NodeContext& ctx) {
  std::string out;
  out.reserve(tmpl.size());
  size_t pos = 0;
  while (true) {
    size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string key = text::trim(tmpl.substr(open + 2, close - open - 2));
    const std::string* value = ctx.find(key);
    if (!value)
      throw Error(ErrorCode::UnresolvedPlaceholder, "unresolved placeholder '" + key + "'");
    out.append(*value);
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::unique_ptr<LlmClient> make_llm_client(const LlmConfig& config) {
  if (config.backend == "mock") return std::make_unique<MockLlm>(MockScript::load(config.mock_script));
  if (config.backend == "http") {
    HttpLlm::Options opts;
    opts.endpoint_url = config.endpoint_url;
    opts.model_id = config.model_id;
    if (!config.api_key_env.empty()) {
      const char* key = std::getenv(config.api_key_env.c_str());
      if (!key)
        throw Error(ErrorCode::ConfigError,
                    "environment variable " + config.api_key_env + " is not set");
      opts.api_key = key;
    }
    opts.timeout_seconds = config.timeout_seconds;
    opts.max_in_flight = config.max_in_flight;
    return std::make_unique<HttpLlm>(std::move(opts));
  }
  throw Error(ErrorCode::ConfigError, "unknown llm backend '" + config.backend + "'");
}

}  // namespace agentflow
