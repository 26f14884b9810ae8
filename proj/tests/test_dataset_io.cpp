#include "slimbench/dataset_io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"
#include "test_support.hpp"

namespace slimbench::io {
namespace {

using testing::read_lines;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST(LoadSamples, PreservesFileOrderAndSkipsBlankLines) {
  TempDir dir;
  write_text(dir / "d.jsonl",
             "{\"id\":\"a\",\"question\":\"qa\",\"answer\":\"A\"}\n\n"
             "{\"id\":\"b\",\"question\":\"qb\"}\n"
             "{\"id\":\"c\",\"question\":\"qc\",\"answer\":\"C\",\"subject\":\"rrc\"}\n");
  const auto ds = load_samples(dir / "d.jsonl");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0].id, "a");
  EXPECT_EQ(ds[1].id, "b");
  EXPECT_EQ(ds[2].id, "c");
  EXPECT_EQ(ds[0].reference, "A");
  EXPECT_FALSE(ds[1].reference.has_value());
  EXPECT_EQ(ds[2].meta.at("subject"), "rrc");
}

TEST(LoadSamples, DuplicateIdNamesBothLines) {
  TempDir dir;
  write_text(dir / "d.jsonl",
             "{\"id\":\"a\",\"question\":\"q1\"}\n{\"id\":\"b\",\"question\":\"q2\"}\n{\"id\":\"a\",\"question\":\"q3\"}\n");
  const auto msg = error_of([&] { load_samples(dir / "d.jsonl"); });
  EXPECT_NE(msg.find("'a'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("lines 1 and 3"), std::string::npos) << msg;
}

TEST(LoadSamples, MalformedLineReportsLineNumber) {
  TempDir dir;
  write_text(dir / "d.jsonl", "{\"id\":\"a\",\"question\":\"q\"}\n{not json\n");
  const auto msg = error_of([&] { load_samples(dir / "d.jsonl"); });
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
}

TEST(LoadSamples, MissingMappedFieldRejected) {
  TempDir dir;
  write_text(dir / "d.jsonl", "{\"id\":\"a\",\"prompt\":\"q\"}\n");
  EXPECT_THROW(load_samples(dir / "d.jsonl"), ValidationError);
  const auto ds = load_samples(dir / "d.jsonl", FieldMapping{.question = "prompt"});
  EXPECT_EQ(ds[0].question, "q");
}

TEST(LoadSamples, CustomMappingAndNumericIds) {
  TempDir dir;
  write_text(dir / "d.jsonl", "{\"qid\":7,\"text\":\"q\",\"gold\":\"B\",\"meta\":{\"src\":\"38.331\"}}\n");
  const auto ds = load_samples(dir / "d.jsonl", FieldMapping{.id = "qid", .question = "text", .answer = "gold"});
  EXPECT_EQ(ds[0].id, "7");
  EXPECT_EQ(ds[0].reference, "B");
  EXPECT_EQ(ds[0].meta.at("src"), "38.331");
}

TEST(LoadSamples, MissingFileIsIoError) { EXPECT_THROW(load_samples("/nonexistent/x.jsonl"), IoError); }

TEST(LoadSamples, EmptyFileRejected) {
  TempDir dir;
  write_text(dir / "d.jsonl", "\n\n");
  EXPECT_THROW(load_samples(dir / "d.jsonl"), ValidationError);
}

TEST(LoadSamples, ScalesToFullTestSetSize) {
  TempDir dir;
  constexpr std::size_t kLines = 109'043;
  {
    std::ofstream out(dir / "big.jsonl");
    for (std::size_t i = 0; i < kLines; ++i) {
      out << "{\"id\":\"q" << i << "\",\"question\":\"What is the cause of RLF during handover? #" << i
          << "\",\"answer\":\"C\"}\n";
    }
  }
  const auto ds = load_samples(dir / "big.jsonl");
  EXPECT_EQ(ds.size(), kLines);
  EXPECT_EQ(ds[kLines - 1].id, "q109042");
}

TEST(LoadEmbeddings, ReadsRecordsInOrder) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"id\":\"a\",\"embedding\":[1,2,3,4]}\n{\"id\":\"b\",\"embedding\":[0.5,0,0,1]}\n");
  const auto recs = load_embeddings(dir / "e.jsonl");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].id, "a");
  EXPECT_EQ(recs[1].vector.size(), 4u);
}

TEST(LoadEmbeddings, DimensionMismatchCitesBothLines) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"id\":\"a\",\"embedding\":[1,2,3,4]}\n{\"id\":\"b\",\"embedding\":[1,2,3,4,5]}\n");
  const auto msg = error_of([&] { load_embeddings(dir / "e.jsonl"); });
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(LoadEmbeddings, NonFiniteRejected) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"id\":\"a\",\"embedding\":[1,NaN,3]}\n");
  EXPECT_NE(error_of([&] { load_embeddings(dir / "e.jsonl"); }).find("non-finite"), std::string::npos);
  write_text(dir / "f.jsonl", "{\"id\":\"a\",\"embedding\":[1,-Infinity,3]}\n");
  EXPECT_NE(error_of([&] { load_embeddings(dir / "f.jsonl"); }).find("non-finite"), std::string::npos);
  write_text(dir / "g.jsonl", "{\"id\":\"a\",\"embedding\":[1,1e999,3]}\n");
  EXPECT_THROW(load_embeddings(dir / "g.jsonl"), ValidationError);
}

TEST(LoadEmbeddings, DimensionBelowTwoRejected) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"id\":\"a\",\"embedding\":[1]}\n");
  EXPECT_THROW(load_embeddings(dir / "e.jsonl"), ValidationError);
}

Dataset abc(std::initializer_list<const char*> ids) {
  std::vector<Sample> samples;
  for (const char* id : ids) samples.push_back({id, std::string("question ") + id, std::nullopt, {}});
  return Dataset(samples);
}

TEST(Align, ReordersToDatasetOrder) {
  const auto ds = abc({"a", "b"});
  const std::vector<EmbeddingRecord> recs{{"b", {0, 1}}, {"a", {1, 0}}};
  const auto m = align(ds, recs);
  EXPECT_EQ(m.ids(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(m.row(0)[0], 1.0);
  EXPECT_EQ(m.row(1)[1], 1.0);
}

TEST(Align, MissingAndExtraIdsListed) {
  const auto ds = abc({"a", "b"});
  const std::vector<EmbeddingRecord> only_a{{"a", {1, 0}}};
  auto msg = error_of([&] { align(ds, only_a); });
  EXPECT_NE(msg.find("missing id(s): b"), std::string::npos) << msg;

  const auto ds1 = abc({"a"});
  const std::vector<EmbeddingRecord> with_x{{"a", {1, 0}}, {"x", {0, 1}}};
  msg = error_of([&] { align(ds1, with_x); });
  EXPECT_NE(msg.find("extra id(s): x"), std::string::npos) << msg;
}

TEST(Align, PermutationInvariantThroughSidecar) {
  TempDir dir;
  std::vector<Sample> samples;
  std::vector<EmbeddingRecord> recs;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 40; ++i) {
    samples.push_back({"id" + std::to_string(i), "q" + std::to_string(i), std::nullopt, {}});
    recs.push_back({samples.back().id, {u(rng), u(rng), u(rng)}});
  }
  const Dataset ds(samples);
  write_embeddings(recs, dir / "a.jsonl");
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(recs.begin(), recs.end(), rng);
    write_embeddings(recs, dir / "b.jsonl");
    EXPECT_EQ(align(ds, load_embeddings(dir / "a.jsonl")), align(ds, load_embeddings(dir / "b.jsonl")));
  }
}

TEST(ExportSubset, SelectsExactlyThePlan) {
  TempDir dir;
  const auto ds = abc({"a", "b", "c"});
  CompressedSet plan{ds.fingerprint(), {"b"}, 1.0 / 3.0, ""};
  const auto receipt = export_subset(ds, plan, dir / "out.jsonl");
  EXPECT_EQ(receipt.count, 1u);
  const auto lines = read_lines(dir / "out.jsonl");
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], R"({"id":"b","question":"question b"})");
  EXPECT_EQ(receipt.sha256, sha256_file(dir / "out.jsonl"));
}

TEST(ExportSubset, UnknownIdRejected) {
  TempDir dir;
  const auto ds = abc({"a"});
  EXPECT_THROW(export_subset(ds, {ds.fingerprint(), {"zz"}, 1.0, ""}, dir / "o.jsonl"), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "o.jsonl"));
}

TEST(ExportSubset, UnwritablePathIsIoError) {
  const auto ds = abc({"a"});
  EXPECT_THROW(export_subset(ds, {ds.fingerprint(), {"a"}, 1.0, ""}, "/nonexistent/dir/o.jsonl"), IoError);
}

TEST(ExportSubset, FixedKeyOrderIsDeterministic) {
  Sample s{"x1", "What is RLF?", "radio link failure", {{"zeta", "1"}, {"alpha", "2"}}};
  EXPECT_EQ(sample_to_jsonl(s),
            R"({"id":"x1","question":"What is RLF?","answer":"radio link failure","meta":{"alpha":"2","zeta":"1"}})");
}

TEST(ExportSubset, RoundTripPreservesSamples) {
  TempDir dir;
  write_text(dir / "in.jsonl",
             "{\"question\":\"line1\\nline2\",\"id\":\"a\",\"answer\":\"A\",\"topic\":\"mac\"}\n"
             "{\"id\":\"b\",\"question\":\"unicode \\u00e9\\u4e2d\",\"meta\":{\"doc\":\"TS 38.300\"}}\n"
             "{\"id\":\"c\",\"question\":\"q\",\"answer\":\"C\"}\n");
  const auto ds = load_samples(dir / "in.jsonl");
  std::vector<std::string> all;
  for (const auto& s : ds.samples()) all.push_back(s.id);
  export_subset(ds, {ds.fingerprint(), all, 1.0, ""}, dir / "out.jsonl");
  const auto back = load_samples(dir / "out.jsonl");
  EXPECT_EQ(back.samples(), ds.samples());
}

TEST(ExportSubset, TenPercentPlanCountVerifiedByReread) {
  TempDir dir;
  std::vector<Sample> samples;
  for (int i = 0; i < 10'000; ++i) samples.push_back({"s" + std::to_string(i), "q" + std::to_string(i), "A", {}});
  const Dataset ds(samples);
  std::mt19937_64 rng(10);
  std::vector<std::string> pick;
  for (const auto& s : samples) {
    if (rng() % 10 == 0) pick.push_back(s.id);
  }
  const auto receipt = export_subset(ds, {ds.fingerprint(), pick, 0.1, ""}, dir / "o.jsonl");
  const auto lines = read_lines(dir / "o.jsonl");
  EXPECT_EQ(receipt.count, lines.size());
  EXPECT_EQ(lines.size(), pick.size());
  std::set<std::string> got;
  for (const auto& l : lines) got.insert(nlohmann::json::parse(l)["id"].get<std::string>());
  EXPECT_EQ(got, std::set<std::string>(pick.begin(), pick.end()));
}

TEST(ExportGenSeeds, SubstitutesPlaceholder) {
  TempDir dir;
  const auto ds = abc({"a", "b", "c"});
  const auto receipt = export_gen_seeds({ds.fingerprint(), {"a", "c"}, 0.5, ""}, ds, "Paraphrase: {question}",
                                        dir / "g.jsonl");
  EXPECT_EQ(receipt.count, 2u);
  const auto lines = read_lines(dir / "g.jsonl");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], R"({"id":"a","prompt":"Paraphrase: question a"})");
}

TEST(ExportGenSeeds, TemplateNeedsExactlyOnePlaceholder) {
  TempDir dir;
  const auto ds = abc({"a"});
  const CompressedSet plan{ds.fingerprint(), {"a"}, 1.0, ""};
  EXPECT_THROW(export_gen_seeds(plan, ds, "Paraphrase this", dir / "g.jsonl"), ValidationError);
  EXPECT_THROW(export_gen_seeds(plan, ds, "{question} and {question}", dir / "g.jsonl"), ValidationError);
}

TEST(DatasetInvariants, RejectsDuplicatesAndEmpties) {
  EXPECT_THROW(Dataset({}), ValidationError);
  EXPECT_THROW(Dataset({{"a", "q", {}, {}}, {"a", "r", {}, {}}}), ValidationError);
  EXPECT_THROW(Dataset({{"a", "", {}, {}}}), ValidationError);
}

}  // namespace
}  // namespace slimbench::io
