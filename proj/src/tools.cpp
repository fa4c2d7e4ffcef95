#include "agentflow/tools.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "agentflow/error.hpp"
#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

void ToolRegistry::add(std::shared_ptr<const Tool> tool) {
  const std::string name = tool->descriptor().tool_name;
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "tool without a name");
  if (!tools_.emplace(name, std::move(tool)).second)
    throw Error(ErrorCode::InvalidArgument, "tool registered twice: " + name);
}

const Tool* ToolRegistry::find(std::string_view name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : it->second.get();
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, tool] : tools_) out.push_back(name);
  return out;
}

std::string ToolRegistry::invoke(std::string_view name, const json& params,
                                 const NodeContext& ctx) const {
  const Tool* tool = find(name);
  if (!tool) throw Error(ErrorCode::UnknownTool, "no tool named '" + std::string(name) + "'");
  check_params(tool->descriptor(), params);
  try {
    return tool->invoke(params, ctx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ToolFailure || e.code() == ErrorCode::ParamSchemaViolation) throw;
    throw Error(ErrorCode::ToolFailure, std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ToolFailure, std::string(name) + ": " + e.what());
  }
}

namespace {

bool has_type(const json& v, ParamType type) {
  switch (type) {
    case ParamType::Integer: return v.is_number_integer();
    case ParamType::Number: return v.is_number();
    case ParamType::String: return v.is_string();
    case ParamType::Boolean: return v.is_boolean();
  }
  return false;
}

std::string_view type_name(ParamType type) {
  switch (type) {
    case ParamType::Integer: return "integer";
    case ParamType::Number: return "number";
    case ParamType::String: return "string";
    case ParamType::Boolean: return "boolean";
  }
  return "?";
}

}  // namespace

void check_params(const ToolDescriptor& desc, const json& params) {
  auto violation = [&](const std::string& what) {
    throw Error(ErrorCode::ParamSchemaViolation, desc.tool_name + ": " + what);
  };
  if (!params.is_null() && !params.is_object()) violation("params must be an object");
  for (const auto& p : desc.param_schema) {
    if (params.is_null() || !params.contains(p.name)) {
      if (p.required) violation("missing parameter '" + p.name + "'");
      continue;
    }
    if (!has_type(params.at(p.name), p.type))
      violation("parameter '" + p.name + "' must be " + std::string(type_name(p.type)));
  }
  if (params.is_object()) {
    for (const auto& [key, value] : params.items()) {
      bool known = std::any_of(desc.param_schema.begin(), desc.param_schema.end(),
                               [&](const ParamSpec& p) { return p.name == key; });
      if (!known) violation("unknown parameter '" + key + "'");
    }
  }
}

std::vector<double> normalized(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::DegenerateVector, "vector has a non-finite component");
    sq += x * x;
  }
  if (sq == 0.0) throw Error(ErrorCode::DegenerateVector, "zero vector cannot be normalized");
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

EmbeddingIndex::EmbeddingIndex(std::vector<IndexEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (auto& e : entries_) {
    if (e.vector.empty()) throw Error(ErrorCode::DegenerateVector, "empty vector for " + e.item_id);
    if (dimension_ == 0) dimension_ = static_cast<int>(e.vector.size());
    if (static_cast<int>(e.vector.size()) != dimension_)
      throw Error(ErrorCode::InconsistentDimension,
                  "entry " + e.item_id + " has dimension " + std::to_string(e.vector.size()) +
                      ", expected " + std::to_string(dimension_));
    if (!seen.insert(e.item_id).second)
      throw Error(ErrorCode::ParseError, "duplicate item_id " + e.item_id);
    try {
      e.vector = normalized(e.vector);
    } catch (const Error& err) {
      throw Error(err.code(), "entry " + e.item_id + ": " + err.what());
    }
  }
}

SearchResult search(const EmbeddingIndex& index, std::span<const double> query, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (static_cast<int>(query.size()) != index.dimension())
    throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                  ", index has " + std::to_string(index.dimension()));
  const auto q = normalized(query);
  const auto& entries = index.entries();
  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    double dot = 0.0;
    const auto& v = entries[i].vector;
    for (size_t d = 0; d < v.size(); ++d) dot += v[d] * q[d];
    scored.emplace_back(std::clamp(dot, -1.0, 1.0), i);
  }
  auto better = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return entries[a.second].item_id < entries[b.second].item_id;
  };
  const size_t n = std::min(scored.size(), static_cast<size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
  SearchResult out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& e = entries[scored[i].second];
    out.push_back({e.item_id, e.label, scored[i].first});
  }
  return out;
}

std::string format_search_result(const SearchResult& result) {
  std::string out;
  for (size_t i = 0; i < result.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + result[i].label +
           " (similarity=" + text::fixed(result[i].score, 3) + ")";
  }
  return out;
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open index " + path.string());
  std::vector<IndexEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto where = path.string() + ":" + std::to_string(lineno);
    try {
      auto j = json::parse(line);
      IndexEntry e;
      e.item_id = j.at("item_id").get<std::string>();
      e.label = j.at("label").get<std::string>();
      e.vector = j.at("vector").get<std::vector<double>>();
      if (e.item_id.empty()) throw Error(ErrorCode::ParseError, "empty item_id");
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return EmbeddingIndex(std::move(entries));
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : index.entries())
    out += json{{"item_id", e.item_id}, {"label", e.label}, {"vector", e.vector}}.dump() + "\n";
  text::write_file(path, out);
}

void check_disjoint(const EmbeddingIndex& index, const std::vector<std::string>& case_ids) {
  std::set<std::string_view> cases(case_ids.begin(), case_ids.end());
  std::vector<std::string> overlap;
  for (const auto& e : index.entries())
    if (cases.count(e.item_id)) overlap.push_back(e.item_id);
  if (!overlap.empty())
    throw Error(ErrorCode::IndexCaseOverlap,
                "index items are also dataset cases: " + text::join(overlap, ", "));
}

ImageSearchTool::ImageSearchTool(std::shared_ptr<const EmbeddingIndex> index, int default_k)
    : index_(std::move(index)), default_k_(default_k) {
  descriptor_.tool_name = "image_search";
  descriptor_.description =
      "Finds the most similar reference images by embedding similarity and lists their labels.";
  descriptor_.param_schema = {{"k", ParamType::Integer, false}};
}

std::string ImageSearchTool::invoke(const json& params, const NodeContext& ctx) const {
  int k = default_k_;
  if (params.is_object() && params.contains("k")) k = params.at("k").get<int>();
  if (k < 1) throw Error(ErrorCode::ParamSchemaViolation, "image_search: k must be at least 1");
  if (ctx.query_embedding.empty())
    throw Error(ErrorCode::ToolFailure, "image_search: case has no query embedding");
  if (!index_ || index_->empty()) throw Error(ErrorCode::ToolFailure, "image_search: index is empty");
  return format_search_result(search(*index_, ctx.query_embedding, k));
}

}  // namespace agentflow
