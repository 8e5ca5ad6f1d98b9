#include "doctest.h"

#include "gekln/data_ingest.hpp"
#include "gekln/error.hpp"
#include "gekln/synthetic.hpp"
#include "support/oracles.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace gekln;

namespace {

ParseResult parse_text(const std::string& text, ParseOptions options = {}) {
  std::istringstream in(text);
  return parse_log_stream(in, options);
}

RawLogRecord rec(std::string s, std::string p, std::vector<std::string> concepts, int correct) {
  return {std::move(s), std::move(p), std::move(concepts), correct, std::nullopt};
}

}  // namespace

TEST_CASE("generic-csv row maps fields directly") {
  const auto result = parse_text("student,exercise,concepts,correct\ns1,e9,0.3;0.7,1\n");
  REQUIRE(result.records.size() == 1);
  const auto& r = result.records.front();
  CHECK(r.student_key == "s1");
  CHECK(r.exercise_key == "e9");
  CHECK(r.concept_keys == std::vector<std::string>{"0.3", "0.7"});
  CHECK(r.correct == 1);
  CHECK(result.skipped == 0);
}

TEST_CASE("out-of-domain and malformed rows are skipped and counted") {
  const auto result = parse_text(
      "student,exercise,concepts,correct\r\n"
      "s1,e1,c1,2\r\n"
      "s1,e2,c1,abc\r\n"
      ",e3,c1,1\r\n"
      "s1,e4\r\n"
      "s2,e5,,0\r\n");
  CHECK(result.skipped == 4);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].concept_keys.empty());
}

TEST_CASE("partial credit is thresholded") {
  const auto result = parse_text("student,exercise,concepts,correct\ns,e,c,0.5\ns,e,c,0.49\ns,e,c,0.75\n");
  REQUIRE(result.records.size() == 3);
  CHECK(result.records[0].correct == 1);
  CHECK(result.records[1].correct == 0);
  CHECK(result.records[2].correct == 1);
}

TEST_CASE("header mismatch reports line 1") {
  try {
    parse_text("user,exercise,concepts,correct\ns,e,c,1\n");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("missing file raises FileNotFound") {
  CHECK_THROWS_AS(parse_log_file("/nonexistent/logs.csv", {}), FileNotFound);
}

TEST_CASE("assist and kdd column mappings") {
  SUBCASE("assist export with quoted fields and multi-row attempts") {
    ParseOptions opt;
    opt.format = LogFormat::assist_csv;
    opt.columns = ColumnMapping::defaults(LogFormat::assist_csv);
    const auto result = parse_text(
        "order_id,user_id,problem_id,correct,skill_id,skill_name\n"
        "10,u1,p1,1,5,\"Addition, Whole Numbers\"\n"
        "10,u1,p1,1,7,Subtraction\n"
        "11,u1,p2,0,,\n"
        "12,u2,p1,0,5,\"Addition, Whole Numbers\"\n",
        opt);
    REQUIRE(result.records.size() == 4);
    CHECK(result.records[0].order_hint == 10);
    const Dataset ds = build_dataset(result.records);
    // the two rows of order 10 are one attempt; p2 has no concept and is dropped
    CHECK(ds.logs.size() == 2);
    CHECK(ds.num_exercises == 1);
    CHECK(ds.q_matrix.concepts(0).size() == 2);
  }
  SUBCASE("kdd export joins problem and step into one exercise") {
    ParseOptions opt;
    opt.format = LogFormat::kdd_tsv;
    opt.columns = ColumnMapping::defaults(LogFormat::kdd_tsv);
    const auto result = parse_text(
        "Row\tAnon Student Id\tProblem Name\tStep Name\tCorrect First Attempt\tKC(Default)\n"
        "1\tst1\tLINEQ\tx=3\t1\tSolve~~Isolate\n"
        "2\tst1\tLINEQ\ty=2\t0\t\n",
        opt);
    REQUIRE(result.records.size() == 2);
    CHECK(result.records[0].exercise_key == "LINEQ::x=3");
    CHECK(result.records[0].concept_keys == std::vector<std::string>{"Solve", "Isolate"});
    CHECK(result.records[1].concept_keys.empty());
  }
  SUBCASE("mapped column absent from header") {
    ParseOptions opt;
    opt.format = LogFormat::assist_csv;
    opt.columns = ColumnMapping::defaults(LogFormat::assist_csv);
    CHECK_THROWS_AS(parse_text("user_id,problem_id,correct\n", opt), FormatError);
  }
}

TEST_CASE("merge_concepts_per_exercise canonicalizes concept sets") {
  const std::vector<RawLogRecord> records{rec("s", "a", {"c2", "c1"}, 1), rec("s", "b", {"c1", "c2"}, 0),
                                          rec("s", "c", {"c5"}, 1), rec("s", "d", {}, 1)};
  const auto merged = merge_concepts_per_exercise(records);
  CHECK(merged[0].concept_keys == std::vector<std::string>{"c1|c2"});
  CHECK(merged[1].concept_keys == std::vector<std::string>{"c1|c2"});
  CHECK(merged[2].concept_keys == std::vector<std::string>{"c5"});
  CHECK(merged[3].concept_keys.empty());
  CHECK(merge_concepts_per_exercise(merged) == merged);
}

TEST_CASE("merging is idempotent on generated logs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.students = 20;
    spec.exercises = 30;
    spec.concepts = 6;
    spec.max_concepts_per_exercise = 3;
    spec.seed = seed;
    const auto once = merge_concepts_per_exercise(synthetic_records(spec));
    CHECK(merge_concepts_per_exercise(once) == once);
  }
}

TEST_CASE("build_dataset filters concept-less exercises and indexes by first appearance") {
  const std::vector<RawLogRecord> records{rec("s1", "e1", {"c1"}, 1), rec("s2", "e2", {}, 0),
                                          rec("s2", "e3", {"c2", "c1"}, 0)};
  const Dataset ds = build_dataset(records);
  CHECK(ds.logs.size() == 2);
  CHECK(ds.num_students == 2);
  CHECK(ds.num_exercises == 2);
  CHECK(ds.exercise_keys == std::vector<std::string>{"e1", "e3"});
  CHECK(ds.concept_keys == std::vector<std::string>{"c1", "c2"});
  CHECK(ds.logs[1] == InteractionLog{1, 1, 0});
  CHECK(std::vector<std::size_t>(ds.q_matrix.concepts(1).begin(), ds.q_matrix.concepts(1).end()) ==
        std::vector<std::size_t>{0, 1});
  CHECK(ds.density() == doctest::Approx(2.0 / 4.0));
}

TEST_CASE("build_dataset keeps repeated attempts and rejects empty input") {
  const std::vector<RawLogRecord> repeats{rec("s", "e", {"c"}, 1), rec("s", "e", {"c"}, 0), rec("s", "e", {"c"}, 1)};
  CHECK(build_dataset(repeats).logs.size() == 3);
  const std::vector<RawLogRecord> none{rec("s", "e", {}, 1)};
  CHECK_THROWS_AS(build_dataset(none), EmptyDataset);
}

TEST_CASE("dataset invariants hold on generated logs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.students = 30;
    spec.exercises = 50;
    auto records = synthetic_records(spec);
    // knock out concepts of a few exercises
    for (auto& r : records) {
      if (r.exercise_key == "e3" || r.exercise_key == "e7") r.concept_keys.clear();
    }
    const Dataset a = build_dataset(records);
    CHECK(a == build_dataset(records));
    for (std::size_t p = 0; p < a.num_exercises; ++p) CHECK(!a.q_matrix.concepts(p).empty());
    for (const auto& log : a.logs) {
      CHECK(log.student < a.num_students);
      CHECK(log.exercise < a.num_exercises);
    }
    for (const auto& key : a.exercise_keys) CHECK((key != "e3" && key != "e7"));
  }
}

TEST_CASE("split_dataset sizes, determinism and partition") {
  std::mt19937_64 rng(3);
  const Dataset ten = oracle::random_dataset(rng, 4, 4, 2, 10);
  const Split s = split_dataset(ten, 0.2, 99);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  CHECK(split_dataset(ten, 0.2, 99) == s);
  CHECK_THROWS_AS(split_dataset(ten, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(ten, 1.0, 1), ConfigError);

  const Dataset big = oracle::random_dataset(rng, 50, 80, 5, 2000);
  for (double ratio : {0.1, 0.2, 0.33}) {
    const Split a = split_dataset(big, ratio, 1);
    const Split b = split_dataset(big, ratio, 2);
    CHECK(a.train.size() + a.test.size() == big.logs.size());
    CHECK(std::abs(static_cast<double>(a.test.size()) - ratio * 2000.0) <= 1.0);
    // multiset union equals the original logs
    std::multiset<std::tuple<std::size_t, std::size_t, int>> all, parts;
    for (const auto& l : big.logs) all.emplace(l.student, l.exercise, l.score);
    for (const auto& l : a.train) parts.emplace(l.student, l.exercise, l.score);
    for (const auto& l : a.test) parts.emplace(l.student, l.exercise, l.score);
    CHECK(all == parts);
    CHECK(a.test != b.test);
  }
}

TEST_CASE("dataset cache round-trips exactly") {
  SyntheticSpec spec;
  spec.students = 25;
  const Dataset ds = build_dataset(synthetic_records(spec));
  const Split split = split_dataset(ds, 0.25, 11);
  const auto path = std::filesystem::temp_directory_path() / "gekln_cache_roundtrip.bin";
  save_dataset_cache(path, ds, split);
  const auto [ds2, split2] = load_dataset_cache(path);
  CHECK(ds2 == ds);
  CHECK(split2 == split);
  std::filesystem::remove(path);
}

TEST_CASE("file hash is content-addressed") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "gekln_hash_a.csv";
  const auto b = dir / "gekln_hash_b.csv";
  std::ofstream(a) << oracle::toy_csv();
  std::ofstream(b) << oracle::toy_csv();
  CHECK(hash_file(a) == hash_file(b));
  std::ofstream(b, std::ios::app) << "s9,e9,c9,1\n";
  CHECK(hash_file(a) != hash_file(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}
