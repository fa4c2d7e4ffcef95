#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agentflow/exec.hpp"

namespace agentflow {

/// Cases from a JSONL manifest ({case_id, image_ref, label, embedding?} per
/// line) plus a splits file ({train, val, test, label_vocabulary?}).
struct DatasetManifest {
  std::vector<CaseRecord> cases;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::vector<std::string> label_vocabulary;

  /// UnknownCase when absent.
  const CaseRecord& find(std::string_view case_id) const;
  /// "train", "val" or "test"; InvalidArgument otherwise.
  const std::vector<std::string>& split_ids(std::string_view split) const;
  std::vector<CaseRecord> split(std::string_view split) const;
  std::map<std::string, int> class_counts(std::string_view split) const;
  std::vector<std::string> case_ids() const;
};

/// Throws ParseError, SplitOverlap, UnknownLabel or UnknownCase.
DatasetManifest load_manifest(const std::filesystem::path& manifest,
                              const std::filesystem::path& splits);

/// Same checks on already-parsed content.
DatasetManifest make_manifest(std::vector<CaseRecord> cases, const nlohmann::json& splits);

}  // namespace agentflow
