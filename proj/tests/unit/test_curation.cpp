#include "doctest.h"
#include "json.hpp"
#include "oger/curation.hpp"
#include "oger/error.hpp"
#include "oger/verifier.hpp"

using namespace oger;

namespace {

Trajectory teacher_record(std::string id, std::string teacher, std::int64_t length, std::string answer,
                          std::optional<std::string> gold = "7") {
  Trajectory t;
  t.id = std::move(id);
  t.query_id = "q";
  t.source = Source::teacher(std::move(teacher));
  t.text = "text";
  t.answer = std::move(answer);
  t.gold_answer = std::move(gold);
  t.length = length;
  return t;
}

}  // namespace

TEST_CASE("verifier normalization") {
  ExactMatchVerifier v;
  CHECK(v.verify("7", "7"));
  CHECK_FALSE(v.verify("7", "8"));
  CHECK(v.verify(" 7 ", "7"));
  CHECK(v.verify("7.", "7"));
  CHECK(v.verify("07", "7"));
  CHECK(v.verify("7.50", "7.5"));
  CHECK(v.verify("-0", "0"));
  CHECK(v.verify("+3", "3"));
  CHECK_FALSE(v.verify("x7", "7"));
  CHECK(normalize_answer(" 1.000 ") == "1");

  ExactMatchVerifier raw(false);
  CHECK_FALSE(raw.verify(" 7 ", "7"));
  CHECK(make_verifier("exact")->verify("7.", "7"));
  CHECK_THROWS_AS(make_verifier("math-verify"), ConfigError);
}

TEST_CASE("length filter is inclusive") {
  auto t = teacher_record("a", "t", 8192, "7");
  CHECK(length_filter(t, 8192));
  t.length = 8193;
  CHECK_FALSE(length_filter(t, 8192));
  t.length = 0;
  CHECK(length_filter(t, 8192));
}

TEST_CASE("correctness filter") {
  ExactMatchVerifier v;
  CHECK(*correctness_filter(teacher_record("a", "t", 1, "7"), v).correct);
  CHECK_FALSE(*correctness_filter(teacher_record("a", "t", 1, "8"), v).correct);
  CHECK_THROWS_AS(correctness_filter(teacher_record("a", "t", 1, "7", std::nullopt), v), VerificationError);
}

TEST_CASE("curate hand tally") {
  std::vector<Trajectory> corpus = {teacher_record("c", "t", 300, "8"), teacher_record("a", "t", 100, "7"),
                                    teacher_record("b", "t", 200, "7")};
  auto r = curate(corpus, CurationConfig{});
  REQUIRE(r.curated.size() == 2);
  CHECK(r.curated[0].id == "a");
  CHECK(r.curated[1].id == "b");
  const auto* row = r.report.find("t");
  REQUIRE(row);
  CHECK(row->valid_samples == 2);
  CHECK(row->avg_length() == doctest::Approx(150.0));
  CHECK(row->accuracy_pct() == doctest::Approx(200.0 / 3.0));
  CHECK(format_fixed2(row->accuracy_pct()) == "66.67");
}

TEST_CASE("curate edge cases") {
  auto empty = curate({}, CurationConfig{});
  CHECK(empty.curated.empty());
  CHECK(empty.report.rows.empty());
  CHECK(empty.report.skipped_records == 0);

  std::vector<Trajectory> corpus = {teacher_record("a", "x", 10, "7"),
                                    teacher_record("b", "x", 10, "7", std::nullopt),
                                    teacher_record("c", "y", 10, "7")};
  Trajectory online;
  online.id = "o";
  online.query_id = "q";
  online.answer = "7";
  online.gold_answer = "7";
  corpus.push_back(online);

  CurationConfig cfg;
  cfg.teachers = {"x", "z"};
  auto r = curate(corpus, cfg);
  CHECK(r.curated.size() == 1);
  CHECK(r.report.skipped_records == 1);
  REQUIRE(r.report.rows.size() == 2);
  CHECK(r.report.find("x")->raw_samples == 1);
  CHECK(r.report.find("x")->skipped == 1);
  CHECK(r.report.find("z")->valid_samples == 0);
  CHECK(r.report.find("z")->accuracy_pct() == 0.0);
  CHECK(r.report.find("y") == nullptr);
}

TEST_CASE("filter order and monotonicity") {
  std::vector<Trajectory> corpus;
  for (int i = 0; i < 40; ++i) {
    corpus.push_back(teacher_record("r" + std::to_string(i), i % 2 ? "a" : "b", (i * 37) % 500,
                                    i % 3 ? "7" : "1"));
  }
  ExactMatchVerifier v;
  std::vector<std::string> len_then_correct, correct_then_len;
  for (const auto& t : corpus) {
    if (length_filter(t, 250) && *correctness_filter(t, v).correct) len_then_correct.push_back(t.id);
    if (*correctness_filter(t, v).correct && length_filter(t, 250)) correct_then_len.push_back(t.id);
  }
  CHECK(len_then_correct == correct_then_len);

  std::size_t prev = 0;
  for (std::int64_t bound : {1, 50, 100, 250, 400, 1000}) {
    CurationConfig cfg;
    cfg.max_tokens = bound;
    auto r = curate(corpus, cfg);
    CHECK(r.curated.size() >= prev);
    prev = r.curated.size();
    for (const auto& t : r.curated) {
      CHECK(*t.correct);
      CHECK(t.length <= bound);
    }
  }
}

TEST_CASE("report formatting") {
  CHECK(with_thousands(45462) == "45,462");
  CHECK(with_thousands(999) == "999");
  CHECK(with_thousands(1000000) == "1,000,000");
  CHECK(format_fixed2(4021.14) == "4,021.14");
  CHECK(format_fixed2(99.28) == "99.28");

  CurationReport report;
  TeacherStats r1;
  r1.teacher = "R1";
  r1.raw_samples = 45791;
  r1.correct_samples = 45462;
  r1.valid_samples = 45462;
  r1.total_valid_length = 4021.14 * 45462;
  report.rows.push_back(r1);
  const auto table = format_report_table(report);
  CHECK(table.find("Model") != std::string::npos);
  CHECK(table.find("45,462") != std::string::npos);
  CHECK(table.find("4,021.14") != std::string::npos);
  CHECK(table.find("99.28") != std::string::npos);

  const auto line = report_to_jsonl(report);
  auto j = nlohmann::json::parse(line.substr(0, line.find('\n')));
  CHECK(j["model"] == "R1");
  CHECK(j["valid_samples"] == 45462);
}
