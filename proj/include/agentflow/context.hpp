#pragma once

#include <map>
#include <string>
#include <vector>

namespace agentflow {

/// Named values visible to prompt placeholders while one case executes:
/// the reserved keys (image_ref, labels, iteration, ...) plus the latest
/// output of every node that has run, keyed by node id.
struct NodeContext {
  std::map<std::string, std::string> values;
  std::vector<double> query_embedding;  // precomputed for the case image, may be empty

  const std::string* find(const std::string& key) const {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  }
  void set(const std::string& key, std::string value) { values[key] = std::move(value); }
};

}  // namespace agentflow
