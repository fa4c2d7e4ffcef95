#include "agentflow/prompts.hpp"

#include "agentflow/context.hpp"
#include "agentflow/error.hpp"
#include "agentflow/llm.hpp"
#include "agentflow/text.hpp"

namespace agentflow {

PromptTemplate parse_prompt_template(std::string_view text, std::string_view name) {
  constexpr std::string_view sys_tag = "[system]\n";
  constexpr std::string_view human_tag = "\n[human]\n";
  const std::string body = text::replace_all(std::string(text), "\r\n", "\n");
  if (body.rfind(sys_tag, 0) != 0)
    throw Error(ErrorCode::ParseError, "prompt " + std::string(name) + " must start with [system]");
  size_t split = body.find(human_tag);
  if (split == std::string::npos)
    throw Error(ErrorCode::ParseError, "prompt " + std::string(name) + " has no [human] section");
  PromptTemplate t;
  t.system = text::trim(body.substr(sys_tag.size(), split - sys_tag.size()));
  t.human = text::trim(body.substr(split + human_tag.size()));
  if (t.system.empty() || t.human.empty())
    throw Error(ErrorCode::ParseError, "prompt " + std::string(name) + " has an empty section");
  return t;
}

PromptLibrary::PromptLibrary() {
  for (const auto& [name, body] : builtin_prompt_templates())
    templates_[name] = parse_prompt_template(body, name);
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (auto& [name, tmpl] : lib.templates_) {
    auto path = dir / (name + ".txt");
    if (std::filesystem::exists(path)) tmpl = parse_prompt_template(text::read_file(path), name);
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(ErrorCode::InvalidArgument, "no prompt template named " + std::string(name));
  return it->second;
}

std::pair<std::string, std::string> PromptLibrary::render(
    std::string_view name, const std::map<std::string, std::string>& values) const {
  const auto& t = get(name);
  NodeContext ctx;
  ctx.values = values;
  return {render_prompt(t.system, ctx), render_prompt(t.human, ctx)};
}

}  // namespace agentflow
