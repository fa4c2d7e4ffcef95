#include "agentflow/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "agentflow/text.hpp"

namespace agentflow {

using nlohmann::json;

const CaseRecord& DatasetManifest::find(std::string_view case_id) const {
  for (const auto& c : cases)
    if (c.case_id == case_id) return c;
  throw Error(ErrorCode::UnknownCase, "no case with id " + std::string(case_id));
}

const std::vector<std::string>& DatasetManifest::split_ids(std::string_view split) const {
  if (split == "train") return train;
  if (split == "val") return val;
  if (split == "test") return test;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(split) + "'");
}

std::vector<CaseRecord> DatasetManifest::split(std::string_view name) const {
  std::vector<CaseRecord> out;
  for (const auto& id : split_ids(name)) out.push_back(find(id));
  return out;
}

std::map<std::string, int> DatasetManifest::class_counts(std::string_view name) const {
  std::map<std::string, int> counts;
  for (const auto& id : split_ids(name)) ++counts[find(id).label];
  return counts;
}

std::vector<std::string> DatasetManifest::case_ids() const {
  std::vector<std::string> ids;
  for (const auto& c : cases) ids.push_back(c.case_id);
  return ids;
}

DatasetManifest make_manifest(std::vector<CaseRecord> cases, const json& splits) {
  DatasetManifest m;
  std::set<std::string> ids;
  for (const auto& c : cases)
    if (!ids.insert(c.case_id).second) throw Error(ErrorCode::ParseError, "duplicate case_id " + c.case_id);

  auto id_list = [&](const char* key) {
    std::vector<std::string> out;
    if (!splits.contains(key)) return out;
    try {
      out = splits.at(key).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("split '") + key + "' must be a list of ids");
    }
    return out;
  };
  if (!splits.is_object()) throw Error(ErrorCode::ParseError, "splits file must hold an object");
  for (const auto& [key, value] : splits.items())
    if (key != "train" && key != "val" && key != "test" && key != "label_vocabulary")
      throw Error(ErrorCode::ParseError, "unknown field '" + key + "' in splits file");
  m.train = id_list("train");
  m.val = id_list("val");
  m.test = id_list("test");

  std::map<std::string, std::string> owner;
  for (auto [name, list] : {std::pair{"train", &m.train}, {"val", &m.val}, {"test", &m.test}}) {
    for (const auto& id : *list) {
      if (!ids.count(id))
        throw Error(ErrorCode::UnknownCase, std::string(name) + " split names unknown case " + id);
      auto [it, fresh] = owner.emplace(id, name);
      if (!fresh)
        throw Error(ErrorCode::SplitOverlap,
                    "case " + id + " is in both " + it->second + " and " + name);
    }
  }

  if (splits.contains("label_vocabulary")) {
    try {
      m.label_vocabulary = splits.at("label_vocabulary").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::ParseError, "label_vocabulary must be a list of strings");
    }
  } else {
    std::set<std::string> labels;
    for (const auto& c : cases) labels.insert(c.label);
    m.label_vocabulary.assign(labels.begin(), labels.end());
  }
  std::set<std::string> vocab(m.label_vocabulary.begin(), m.label_vocabulary.end());
  if (vocab.size() != m.label_vocabulary.size())
    throw Error(ErrorCode::ParseError, "label_vocabulary has duplicates");
  for (auto& c : cases) {
    if (!vocab.count(c.label))
      throw Error(ErrorCode::UnknownLabel, "case " + c.case_id + " has label '" + c.label +
                                               "' outside the vocabulary");
    c.label_vocabulary = m.label_vocabulary;
  }
  m.cases = std::move(cases);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest,
                              const std::filesystem::path& splits) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + manifest.string());
  std::vector<CaseRecord> cases;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto where = manifest.string() + ":" + std::to_string(lineno);
    try {
      auto j = json::parse(line);
      for (const auto& [key, value] : j.items())
        if (key != "case_id" && key != "image_ref" && key != "label" && key != "embedding")
          throw Error(ErrorCode::ParseError, "unknown field '" + key + "'");
      CaseRecord c;
      c.case_id = j.at("case_id").get<std::string>();
      c.image_ref = j.at("image_ref").get<std::string>();
      c.label = j.at("label").get<std::string>();
      if (j.contains("embedding")) c.query_embedding = j.at("embedding").get<std::vector<double>>();
      if (c.case_id.empty() || c.label.empty())
        throw Error(ErrorCode::ParseError, "case_id and label must be non-empty");
      cases.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  json split_json;
  try {
    split_json = json::parse(text::read_file(splits));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, splits.string() + ": " + e.what());
  }
  return make_manifest(std::move(cases), split_json);
}

}  // namespace agentflow
