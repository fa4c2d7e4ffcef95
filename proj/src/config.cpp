#include "agentflow/config.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "agentflow/text.hpp"

namespace agentflow {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>, std::less<>>& known_keys() {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys = {
      {"llm", {"backend", "endpoint_url", "model_id", "api_key_env", "temperature", "seed",
               "max_in_flight", "timeout_seconds", "mock_script"}},
      {"analyzer", {"backend", "endpoint_url", "model_id", "api_key_env", "temperature", "seed",
                    "max_in_flight", "timeout_seconds", "mock_script"}},
      {"tools", {"index", "search_k"}},
      {"exec", {"max_total_steps", "retries", "backoff_ms", "parallel_arms", "concurrency"}},
      {"evolution", {"epsilon", "window", "max_iterations", "batch_size", "max_suggestions"}},
      {"eval", {"ks", "cons_n"}},
      {"paths", {"manifest", "splits", "output_dir", "prompts_dir", "initial_graph"}},
  };
  return keys;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

std::string unquote(std::string v) {
  v = text::trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    v = v.substr(1, v.size() - 2);
  return v;
}

int to_int(const std::string& where, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(where, "expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& where, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0;
  in >> out;
  if (!in || !in.eof()) bad(where, "expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& where, const std::string& v) {
  const auto l = text::to_lower(v);
  if (l == "true" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "no" || l == "0") return false;
  bad(where, "expected true or false, got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  if (v.empty()) return {};
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void apply_llm(LlmConfig& c, const std::string& section, const std::string& key,
               const std::string& v, const std::filesystem::path& base) {
  const std::string where = section + "." + key;
  if (key == "backend") {
    if (v != "mock" && v != "http") bad(where, "must be mock or http");
    c.backend = v;
  } else if (key == "endpoint_url") {
    c.endpoint_url = v;
  } else if (key == "model_id") {
    c.model_id = v;
  } else if (key == "api_key_env") {
    c.api_key_env = v;
  } else if (key == "temperature") {
    c.temperature = to_double(where, v);
    if (c.temperature < 0) bad(where, "must be non-negative");
  } else if (key == "seed") {
    if (text::to_lower(v) == "none") c.seed.reset();
    else c.seed = to_int(where, v);
  } else if (key == "max_in_flight") {
    c.max_in_flight = to_int(where, v);
    if (c.max_in_flight < 1) bad(where, "must be at least 1");
  } else if (key == "timeout_seconds") {
    c.timeout_seconds = to_int(where, v);
    if (c.timeout_seconds < 1) bad(where, "must be at least 1");
  } else if (key == "mock_script") {
    c.mock_script = resolve(base, v);
  }
}

void check_llm(const LlmConfig& c, const std::string& section) {
  if (c.backend == "http" && (c.endpoint_url.empty() || c.model_id.empty()))
    bad(section, "http backend needs endpoint_url and model_id");
  if (c.backend == "mock" && c.mock_script.empty()) bad(section, "mock backend needs mock_script");
}

}  // namespace

RunConfig parse_config(std::string_view content, const std::filesystem::path& base) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(content)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config syntax: ") + e.what());
  }

  RunConfig cfg;
  cfg.exec.seed = cfg.llm.seed;
  bool analyzer_seen = false;
  for (const auto& [section, body] : tree) {
    auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      if (body.empty() && !body.data().empty()) bad(section, "key outside any section");
      bad(section, "unknown section");
    }
    if (section == "analyzer") {
      analyzer_seen = true;
      cfg.analyzer = cfg.llm;
    }
  }
  // Second pass so [analyzer] inherits the final [llm] values.
  for (const char* section : {"llm", "analyzer", "tools", "exec", "evolution", "eval", "paths"}) {
    auto node = tree.get_child_optional(section);
    if (!node) continue;
    if (std::string_view(section) == "analyzer") cfg.analyzer = cfg.llm;
    for (const auto& [key, child] : *node) {
      const std::string where = std::string(section) + "." + key;
      if (!known_keys().find(section)->second.count(key)) bad(where, "unknown key");
      const std::string v = unquote(child.data());
      const std::string s(section);
      if (s == "llm") {
        apply_llm(cfg.llm, s, key, v, base);
      } else if (s == "analyzer") {
        apply_llm(*cfg.analyzer, s, key, v, base);
      } else if (s == "tools") {
        if (key == "index") cfg.tools.index = resolve(base, v);
        if (key == "search_k") {
          cfg.tools.search_k = to_int(where, v);
          if (cfg.tools.search_k < 1) bad(where, "must be at least 1");
        }
      } else if (s == "exec") {
        if (key == "max_total_steps") {
          cfg.exec.max_total_steps = to_int(where, v);
          if (cfg.exec.max_total_steps < 1) bad(where, "must be at least 1");
        } else if (key == "retries") {
          cfg.exec.retries = to_int(where, v);
          if (cfg.exec.retries < 0) bad(where, "must be non-negative");
        } else if (key == "backoff_ms") {
          cfg.exec.backoff_ms = to_int(where, v);
          if (cfg.exec.backoff_ms < 0) bad(where, "must be non-negative");
        } else if (key == "parallel_arms") {
          cfg.exec.parallel_arms = to_bool(where, v);
        } else if (key == "concurrency") {
          cfg.concurrency = to_int(where, v);
          if (cfg.concurrency < 1) bad(where, "must be at least 1");
        }
      } else if (s == "evolution") {
        if (key == "epsilon") {
          cfg.convergence.epsilon = to_double(where, v);
          if (cfg.convergence.epsilon <= 0) bad(where, "must be positive");
        } else if (key == "window") {
          cfg.convergence.window = to_int(where, v);
          if (cfg.convergence.window < 1) bad(where, "must be at least 1");
        } else if (key == "max_iterations") {
          cfg.convergence.max_iterations = to_int(where, v);
          if (cfg.convergence.max_iterations < 0) bad(where, "must be non-negative");
        } else if (key == "batch_size") {
          cfg.batch_size = to_int(where, v);
          if (cfg.batch_size < 0) bad(where, "must be non-negative");
        } else if (key == "max_suggestions") {
          cfg.max_suggestions = to_int(where, v);
          if (cfg.max_suggestions < 1) bad(where, "must be at least 1");
        }
      } else if (s == "eval") {
        if (key == "ks") {
          cfg.ks.clear();
          for (const auto& part : text::split(v, ',')) {
            int k = to_int(where, text::trim(part));
            if (k < 1) bad(where, "every k must be at least 1");
            cfg.ks.push_back(k);
          }
          if (cfg.ks.empty()) bad(where, "needs at least one k");
        } else if (key == "cons_n") {
          cfg.cons_n = to_int(where, v);
          if (cfg.cons_n < 0) bad(where, "must be non-negative");
        }
      } else if (s == "paths") {
        if (key == "manifest") cfg.paths.manifest = resolve(base, v);
        if (key == "splits") cfg.paths.splits = resolve(base, v);
        if (key == "output_dir") cfg.paths.output_dir = resolve(base, v);
        if (key == "prompts_dir") cfg.paths.prompts_dir = resolve(base, v);
        if (key == "initial_graph") cfg.paths.initial_graph = resolve(base, v);
      }
    }
  }
  if (!analyzer_seen) cfg.analyzer.reset();
  if (tree.get_child_optional("paths.output_dir") == boost::none)
    cfg.paths.output_dir = resolve(base, "runs");
  check_llm(cfg.llm, "llm");
  if (cfg.analyzer) check_llm(*cfg.analyzer, "analyzer");
  cfg.exec.temperature = cfg.llm.temperature;
  cfg.exec.seed = cfg.llm.seed;
  return cfg;
}

void check_config_files(const RunConfig& cfg) {
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p))
      throw Error(ErrorCode::ConfigError, std::string(what) + " not found: " + p.string());
  };
  if (cfg.llm.backend == "mock") need(cfg.llm.mock_script, "llm.mock_script");
  if (cfg.analyzer && cfg.analyzer->backend == "mock") need(cfg.analyzer->mock_script, "analyzer.mock_script");
  need(cfg.tools.index, "tools.index");
  need(cfg.paths.manifest, "paths.manifest");
  need(cfg.paths.splits, "paths.splits");
  need(cfg.paths.prompts_dir, "paths.prompts_dir");
  need(cfg.paths.initial_graph, "paths.initial_graph");
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
  auto cfg = parse_config(text::read_file(path), path.parent_path());
  check_config_files(cfg);
  return cfg;
}

std::string default_config_text() {
  return R"(# agentflow configuration. Relative paths are relative to this file.

[llm]
# mock replays a scripted JSON file; http talks to a chat-completions endpoint.
backend = mock
mock_script = mock_script.json
# endpoint_url = https://api.openai.com/v1/chat/completions
# model_id = gpt-4o
# api_key_env = OPENAI_API_KEY
temperature = 1.0
seed = 42
max_in_flight = 4
timeout_seconds = 60

# [analyzer] takes the same keys as [llm] and defaults to it.

[tools]
# index = index.jsonl
search_k = 5

[exec]
max_total_steps = 64
retries = 2
backoff_ms = 500
parallel_arms = true
concurrency = 1

[evolution]
epsilon = 0.01
window = 2
max_iterations = 10
batch_size = 0
max_suggestions = 4

[eval]
ks = 1,3,5
cons_n = 0

[paths]
manifest = manifest.jsonl
splits = splits.json
output_dir = runs
# prompts_dir = prompts
# initial_graph = baseline.json
)";
}

}  // namespace agentflow
