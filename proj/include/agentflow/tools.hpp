#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentflow/context.hpp"

namespace agentflow {

enum class ParamType { Integer, Number, String, Boolean };

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::String;
  bool required = false;
};

struct ToolDescriptor {
  std::string tool_name;
  std::string description;
  std::vector<ParamSpec> param_schema;
};

class Tool {
 public:
  virtual ~Tool() = default;
  virtual const ToolDescriptor& descriptor() const = 0;
  /// Params have already been checked against the schema.
  virtual std::string invoke(const nlohmann::json& params, const NodeContext& ctx) const = 0;
};

/// Populated at startup, read-only afterwards; invoke is safe to call
/// concurrently as long as the registered tools are.
class ToolRegistry {
 public:
  void add(std::shared_ptr<const Tool> tool);
  const Tool* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

  /// Throws UnknownTool, ParamSchemaViolation, or ToolFailure (any error
  /// raised by the tool itself is rewrapped).
  std::string invoke(std::string_view name, const nlohmann::json& params,
                     const NodeContext& ctx) const;

 private:
  std::map<std::string, std::shared_ptr<const Tool>, std::less<>> tools_;
};

/// Throws ParamSchemaViolation on a missing, mistyped, or unknown parameter.
void check_params(const ToolDescriptor& desc, const nlohmann::json& params);

struct IndexEntry {
  std::string item_id;
  std::string label;
  std::vector<double> vector;
};

/// Unit-normalized copy; DegenerateVector for an all-zero or non-finite input.
std::vector<double> normalized(std::span<const double> v);

/// Immutable after construction. Vectors are stored unit-normalized.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  /// Normalizes every vector. Throws InconsistentDimension, DegenerateVector,
  /// or ParseError on duplicate item ids.
  explicit EmbeddingIndex(std::vector<IndexEntry> entries);

  int dimension() const { return dimension_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<IndexEntry>& entries() const { return entries_; }

 private:
  std::vector<IndexEntry> entries_;
  int dimension_ = 0;
};

struct SearchHit {
  std::string item_id;
  std::string label;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

using SearchResult = std::vector<SearchHit>;

/// Exact top-k by cosine similarity, ties by ascending item_id.
SearchResult search(const EmbeddingIndex& index, std::span<const double> query, int k);

/// "k. <label> (similarity=0.953)" per line.
std::string format_search_result(const SearchResult& result);

/// JSONL with one {"item_id","label","vector"} object per line.
EmbeddingIndex load_index(const std::filesystem::path& path);
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);

/// IndexCaseOverlap if any item id is also a dataset case id.
void check_disjoint(const EmbeddingIndex& index, const std::vector<std::string>& case_ids);

inline constexpr int kDefaultSearchK = 5;

/// "image_search": neighbors of the case's query embedding. Params: k.
class ImageSearchTool final : public Tool {
 public:
  explicit ImageSearchTool(std::shared_ptr<const EmbeddingIndex> index,
                           int default_k = kDefaultSearchK);

  const ToolDescriptor& descriptor() const override { return descriptor_; }
  std::string invoke(const nlohmann::json& params, const NodeContext& ctx) const override;

 private:
  std::shared_ptr<const EmbeddingIndex> index_;
  int default_k_;
  ToolDescriptor descriptor_;
};

}  // namespace agentflow
