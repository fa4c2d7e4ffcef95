#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentflow/evolve.hpp"
#include "agentflow/exec.hpp"
#include "agentflow/llm.hpp"

namespace agentflow {

struct ToolsConfig {
  std::filesystem::path index;  // empty: no image_search tool
  int search_k = kDefaultSearchK;
};

struct PathsConfig {
  std::filesystem::path manifest;
  std::filesystem::path splits;
  std::filesystem::path output_dir = "runs";
  std::filesystem::path prompts_dir;
  std::filesystem::path initial_graph;  // empty: single-node baseline
};

/// Everything a command needs. Relative paths are resolved against the
/// directory holding the config file.
struct RunConfig {
  LlmConfig llm;
  std::optional<LlmConfig> analyzer;  // falls back to llm
  ToolsConfig tools;
  ExecLimits exec;
  int concurrency = 1;
  ConvergenceConfig convergence;
  int batch_size = 0;
  int max_suggestions = 4;
  std::vector<int> ks = {1, 3, 5};
  int cons_n = 0;
  PathsConfig paths;

  const LlmConfig& analyzer_llm() const { return analyzer ? *analyzer : llm; }
};

/// INI-style text with [llm], [analyzer], [tools], [exec], [evolution],
/// [eval] and [paths] sections. Unknown sections or keys and bad values are
/// ConfigError.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

/// parse_config plus a check that every referenced input file exists.
RunConfig load_config(const std::filesystem::path& path);

void check_config_files(const RunConfig& cfg);

/// Commented config written by `agentflow init`.
std::string default_config_text();

}  // namespace agentflow
