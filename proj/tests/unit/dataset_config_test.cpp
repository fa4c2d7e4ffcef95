#include <gtest/gtest.h>

#include <functional>

#include "agentflow/config.hpp"
#include "agentflow/dataset.hpp"
#include "agentflow/text.hpp"
#include "agentflow/tools.hpp"
#include "fixtures.hpp"

using namespace agentflow;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an agentflow::Error";
  return ErrorCode::InvalidArgument;
}

std::vector<CaseRecord> three_cases() {
  return {fixtures::make_case("a", "Acne"), fixtures::make_case("b", "Eczema"), fixtures::make_case("c", "Acne")};
}

const std::filesystem::path kBase = "/cfg";

const char* kMinimal = "[llm]\nmock_script = mock.json\n";

}  // namespace

TEST(Manifest, DemoHasTwentyTestCasesPerClass) {
  auto m = load_manifest(fixtures::demo_dir() / "manifest.jsonl", fixtures::demo_dir() / "splits.json");
  EXPECT_EQ(m.test.size(), 120u);
  auto counts = m.class_counts("test");
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [label, n] : counts) EXPECT_EQ(n, 20) << label;
  EXPECT_EQ(m.label_vocabulary, fixtures::kLabels);
  EXPECT_EQ(m.split("val").size(), 24u);
  EXPECT_EQ(m.find("acne_test_01").label_vocabulary, fixtures::kLabels);
  EXPECT_EQ(m.find("acne_test_01").query_embedding.size(), 8u);
}

TEST(Manifest, DemoIndexIsDisjointFromCases) {
  auto m = load_manifest(fixtures::demo_dir() / "manifest.jsonl", fixtures::demo_dir() / "splits.json");
  auto index = load_index(fixtures::demo_dir() / "index.jsonl");
  EXPECT_NO_THROW(check_disjoint(index, m.case_ids()));
}

TEST(Manifest, OverlappingSplitsAreRejected) {
  EXPECT_EQ(code_of([] { make_manifest(three_cases(), {{"train", {"a", "b"}}, {"test", {"b"}}}); }),
            ErrorCode::SplitOverlap);
  EXPECT_EQ(code_of([] { make_manifest(three_cases(), {{"train", {"a", "a"}}}); }), ErrorCode::SplitOverlap);
}

TEST(Manifest, LabelOutsideVocabulary) {
  EXPECT_EQ(code_of([] {
              make_manifest(three_cases(), {{"train", {"a"}}, {"label_vocabulary", {"Acne", "Rosacea"}}});
            }),
            ErrorCode::UnknownLabel);
}

TEST(Manifest, VocabularyDefaultsToSortedLabels) {
  auto m = make_manifest(three_cases(), {{"train", {"a"}}, {"val", {"b"}}, {"test", {"c"}}});
  EXPECT_EQ(m.label_vocabulary, (std::vector<std::string>{"Acne", "Eczema"}));
  EXPECT_EQ(m.class_counts("test"), (std::map<std::string, int>{{"Acne", 1}}));
}

TEST(Manifest, ShapeErrors) {
  EXPECT_EQ(code_of([] { make_manifest(three_cases(), {{"train", {"zzz"}}}); }), ErrorCode::UnknownCase);
  EXPECT_EQ(code_of([] { make_manifest(three_cases(), {{"holdout", {"a"}}}); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { make_manifest(three_cases(), {{"train", "a"}}); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              auto cases = three_cases();
              cases.push_back(cases.front());
              make_manifest(cases, json::object());
            }),
            ErrorCode::ParseError);
  auto m = make_manifest(three_cases(), json::object());
  EXPECT_EQ(code_of([&] { m.split("dev"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { m.find("nope"); }), ErrorCode::UnknownCase);
}

TEST(Manifest, BadLinesNameTheLocation) {
  auto dir = fixtures::temp_dir("manifest_bad");
  text::write_file(dir / "splits.json", "{}");
  text::write_file(dir / "m.jsonl", "{\"case_id\": \"a\", \"image_ref\": \"x\", \"label\": \"Acne\"}\n"
                                    "{\"case_id\": \"b\", \"image_ref\": \"x\", \"label\": \"Acne\", \"age\": 3}\n");
  try {
    load_manifest(dir / "m.jsonl", dir / "splits.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_TRUE(text::contains(e.what(), "m.jsonl:2"));
  }
  EXPECT_EQ(code_of([&] { load_manifest(dir / "missing.jsonl", dir / "splits.json"); }), ErrorCode::IoError);
}

TEST(Config, DefaultsMatchTheDocumentedValues) {
  auto cfg = parse_config(kMinimal, kBase);
  EXPECT_DOUBLE_EQ(cfg.llm.temperature, 1.0);
  EXPECT_EQ(cfg.llm.seed, 42);
  EXPECT_DOUBLE_EQ(cfg.exec.temperature, 1.0);
  EXPECT_EQ(cfg.exec.seed, 42);
  EXPECT_EQ(cfg.tools.search_k, 5);
  EXPECT_EQ(cfg.ks, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(cfg.paths.output_dir, kBase / "runs");
  EXPECT_EQ(cfg.llm.mock_script, kBase / "mock.json");
  EXPECT_FALSE(cfg.analyzer.has_value());
  EXPECT_EQ(&cfg.analyzer_llm(), &cfg.llm);
}

TEST(Config, AnalyzerInheritsFromLlm) {
  auto cfg = parse_config("[analyzer]\ntemperature = 0.2\n[llm]\nmock_script = \"w.json\"\nseed = none\n", kBase);
  ASSERT_TRUE(cfg.analyzer.has_value());
  EXPECT_EQ(cfg.analyzer->mock_script, kBase / "w.json");
  EXPECT_DOUBLE_EQ(cfg.analyzer->temperature, 0.2);
  EXPECT_FALSE(cfg.analyzer->seed.has_value());
  EXPECT_FALSE(cfg.exec.seed.has_value());
}

TEST(Config, FullSectionsParse) {
  auto cfg = parse_config(std::string(kMinimal) +
                              "[exec]\nmax_total_steps = 9\nparallel_arms = no\nconcurrency = 3\n"
                              "[evolution]\nepsilon = 0.05\nwindow = 3\nmax_iterations = 4\nbatch_size = 7\n"
                              "[eval]\nks = 1, 2\ncons_n = 5\n[paths]\noutput_dir = /abs/out\n",
                          kBase);
  EXPECT_EQ(cfg.exec.max_total_steps, 9);
  EXPECT_FALSE(cfg.exec.parallel_arms);
  EXPECT_EQ(cfg.concurrency, 3);
  EXPECT_DOUBLE_EQ(cfg.convergence.epsilon, 0.05);
  EXPECT_EQ(cfg.convergence.window, 3);
  EXPECT_EQ(cfg.convergence.max_iterations, 4);
  EXPECT_EQ(cfg.batch_size, 7);
  EXPECT_EQ(cfg.ks, (std::vector<int>{1, 2}));
  EXPECT_EQ(cfg.cons_n, 5);
  EXPECT_EQ(cfg.paths.output_dir, "/abs/out");
}

TEST(Config, StrictParsing) {
  for (std::string bad : {
           "[llm]\nmock_script = m.json\ntemprature = 1\n",
           "[llm]\nmock_script = m.json\n[extras]\nx = 1\n",
           "[llm]\nmock_script = m.json\ntemperature = hot\n",
           "[llm]\nmock_script = m.json\nseed = 4x\n",
           "[llm]\nbackend = grpc\n",
           "[llm]\nbackend = http\nmodel_id = m\n",
           "[llm]\n",
           "[llm]\nmock_script = m.json\n[exec]\nparallel_arms = maybe\n",
           "[llm]\nmock_script = m.json\n[evolution]\nepsilon = 0\n",
           "[llm]\nmock_script = m.json\n[eval]\nks = 1,0\n",
           "[llm]\nmock_script = m.json\n[tools]\nsearch_k = 0\n",
           "[llm\nmock_script = m.json\n",
       })
    EXPECT_EQ(code_of([&] { parse_config(bad, kBase); }), ErrorCode::ConfigError) << bad;
}

TEST(Config, LoadChecksReferencedFiles) {
  auto dir = fixtures::temp_dir("config_files");
  text::write_file(dir / "c.ini", "[llm]\nmock_script = mock.json\n");
  EXPECT_EQ(code_of([&] { load_config(dir / "c.ini"); }), ErrorCode::ConfigError);
  text::write_file(dir / "mock.json", "{}");
  EXPECT_NO_THROW(load_config(dir / "c.ini"));
  EXPECT_EQ(code_of([&] { load_config(dir / "absent.ini"); }), ErrorCode::ConfigError);
}

TEST(Config, StarterAndDemoConfigsParse) {
  EXPECT_NO_THROW(parse_config(default_config_text(), kBase));
  auto cfg = load_config(fixtures::demo_dir() / "agentflow.toml");
  EXPECT_EQ(cfg.analyzer_llm().mock_script, fixtures::demo_dir() / "analyzer_mock.json");
  EXPECT_EQ(cfg.llm.mock_script, fixtures::demo_dir() / "workflow_mock.json");
}
