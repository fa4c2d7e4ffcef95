#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace agentflow {

/// Contents of prompts/*.txt compiled into the binary, keyed by file stem.
const std::map<std::string, std::string>& builtin_prompt_templates();

/// A prompt file holds a "[system]" section followed by a "[human]" section.
struct PromptTemplate {
  std::string system;
  std::string human;
};

PromptTemplate parse_prompt_template(std::string_view text, std::string_view name);

class PromptLibrary {
 public:
  /// Built-in templates only.
  PromptLibrary();
  /// Built-ins, overridden by any <name>.txt found in `dir`.
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;
  /// Renders both sections; UnresolvedPlaceholder on a missing value.
  std::pair<std::string, std::string> render(std::string_view name,
                                             const std::map<std::string, std::string>& values) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace agentflow
