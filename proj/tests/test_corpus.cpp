#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "argrank/corpus.hpp"
#include "argrank/errors.hpp"
#include "argrank/util.hpp"

using namespace argrank;
namespace fs = std::filesystem;

namespace {

// Offsets below are code points; the essay deliberately contains non-ASCII
// characters ahead of the spans so that byte offsets would be wrong.
const std::string kEssay =
    "Café culture — a debate\n\n"
    "Use of marijuana causes chronic bronchitis and airflow obstruction. "
    "However, cannabis does not need to be smoked to receive its potential health benefits. "
    "Dr. Smith says Obama agreed. "
    "I think it helps many patients.";

std::size_t cp_find(const std::string& text, const std::string& needle) {
  const auto byte = text.find(needle);
  REQUIRE(byte != std::string::npos);
  return utf8_length(std::string_view(text).substr(0, byte));
}

std::string t_line(const std::string& id, const std::string& kind, const std::string& surface) {
  const auto s = cp_find(kEssay, surface);
  return id + "\t" + kind + " " + std::to_string(s) + " " + std::to_string(s + utf8_length(surface)) +
         "\t" + surface + "\n";
}

std::string fixture_ann() {
  return t_line("T1", "Claim", "Use of marijuana causes chronic bronchitis and airflow obstruction") +
         t_line("T2", "Premise", "cannabis does not need to be smoked to receive its potential health benefits") +
         t_line("T3", "Premise", "Obama agreed") + t_line("T4", "MajorClaim", "it helps many patients") +
         "A1\tStance T1 Against\n" + "R1\tattacks Arg1:T2 Arg2:T1\t\n" + "R2\tsupports Arg1:T3 Arg2:T2\n" +
         "#1\tAnnotatorNotes T3\tcheck this\n";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Document synthetic_doc(const std::string& id, std::size_t relations) {
  Document d;
  d.doc_id = id;
  d.text = "a b";
  d.units.push_back({"T1", UnitKind::premise, 0, 1, "a"});
  d.units.push_back({"T2", UnitKind::premise, 2, 3, "b"});
  for (std::size_t r = 0; r < relations; ++r)
    d.relations.push_back({"R" + std::to_string(r + 1), "T2", "T1", Label::support, id});
  return d;
}

}  // namespace

TEST_CASE("standoff parsing") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  CHECK(doc.units.size() == 4);
  REQUIRE(doc.relations.size() == 2);
  CHECK(doc.relations[0].label == Label::attack);
  CHECK(doc.relations[0].source == "T2");
  CHECK(doc.relations[0].target == "T1");
  CHECK(doc.relations[1].label == Label::support);
  CHECK(doc.attributes.size() == 1);
  CHECK(doc.notes.size() == 1);
  CHECK(doc.find_unit("T4")->kind == UnitKind::major_claim);
}

TEST_CASE("worked example: two premises and an attack") {
  const std::string txt = "0123456789use causes harm then no smoke needed here";
  const std::string ann =
      "T1\tPremise 10 25\tuse causes harm\nT2\tPremise 31 46\tno smoke needed\nR1\tattacks Arg1:T2 Arg2:T1";
  const auto doc = parse_standoff(ann, txt, "d");
  CHECK(doc.units.size() == 2);
  REQUIRE(doc.relations.size() == 1);
  CHECK(doc.relations[0].label == Label::attack);
}

TEST_CASE("empty annotation gives an empty document") {
  const auto doc = parse_standoff("", "anything", "d");
  CHECK(doc.units.empty());
  CHECK(doc.relations.empty());
}

TEST_CASE("standoff errors") {
  const std::string txt = "abc def";
  CHECK_THROWS_AS(parse_standoff("T1\tPremise 0 3\tabc\nR1\tsupports Arg1:T9 Arg2:T1", txt, "d"),
                  DanglingReference);
  CHECK_THROWS_AS(parse_standoff("T1\tPremise 0 3\txyz", txt, "d"), OffsetMismatch);
  CHECK_THROWS_AS(parse_standoff("T1\tPremise 0 30\tabc", txt, "d"), OffsetMismatch);
  CHECK_THROWS_AS(parse_standoff("T1 Premise 0 3 abc", txt, "d"), MalformedLine);
  CHECK_THROWS_AS(parse_standoff("T1\tPremise 0 3\tabc\nT1\tPremise 4 7\tdef", txt, "d"), MalformedLine);
  CHECK_THROWS_AS(parse_standoff("T1\tStance 0 3\tabc", txt, "d"), MalformedLine);
  CHECK_THROWS_AS(parse_standoff("T1\tPremise 0 3\tabc\nR1\tsupports Arg1:T1 Arg2:T1", txt, "d"),
                  MalformedLine);
  CHECK_THROWS_AS(parse_standoff("Q1\tfoo", txt, "d"), MalformedLine);
  try {
    parse_standoff("T1\tPremise 0 3\txyz", txt, "d");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::data);
  }
}

TEST_CASE("standoff round trip is lossless") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  const auto again = parse_standoff(serialize_standoff(doc), kEssay, "essay001");
  CHECK(again == doc);
}

TEST_CASE("ESSAY_CONTENT view uses bare spans") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  const auto view = build_view({doc}, ViewMode::essay_content);
  REQUIRE(view.instances.size() == 2);
  const auto& inst = view.instances[0];
  CHECK(inst.rel_id == "essay001:R1");
  CHECK(inst.source_text == "cannabis does not need to be smoked to receive its potential health benefits");
  CHECK(inst.target_text == "Use of marijuana causes chronic bronchitis and airflow obstruction");
  CHECK(inst.label == Label::attack);
  // surfaces are substrings at the recorded offsets
  const auto cps = utf8_decode(kEssay);
  for (const auto& u : doc.units)
    CHECK(utf8_encode(std::u32string_view(cps).substr(u.start, u.end - u.start)) == u.surface);
}

TEST_CASE("ESSAY view widens spans to covering sentences") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  const auto view = build_view({doc}, ViewMode::essay);
  REQUIRE(view.instances.size() == 2);
  CHECK(view.instances[0].source_text ==
        "However, cannabis does not need to be smoked to receive its potential health benefits.");
  // the abbreviation guard keeps "Dr. Smith" in one sentence
  CHECK(view.instances[1].source_text == "Dr. Smith says Obama agreed.");
  CHECK_FALSE(view.instances[0].source_keep_case);
  CHECK(build_view({doc}, ViewMode::essay_content).instances[1].source_keep_case);

  SentencePolicy off;
  off.extend_to_sentence = false;
  const auto bare = build_view({doc}, ViewMode::essay, off);
  CHECK(bare.instances[0].source_text == build_view({doc}, ViewMode::essay_content).instances[0].source_text);
}

TEST_CASE("view without relations is empty; totality holds across modes") {
  auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  auto empty = doc;
  empty.relations.clear();
  CHECK(build_view({empty}, ViewMode::essay).instances.empty());
  CHECK(build_view({doc, empty}, ViewMode::essay).instances.size() ==
        build_view({doc, empty}, ViewMode::essay_content).instances.size());
}

TEST_CASE("view JSONL round trip") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  const auto view = build_view({doc}, ViewMode::essay);
  const auto jsonl = view_to_jsonl(view);
  const auto line = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  for (const char* key : {"rel_id", "doc_id", "source_text", "target_text", "label", "mode"})
    CHECK(line.contains(key));
  CHECK(line["mode"] == "ESSAY");
  const auto back = view_from_jsonl(jsonl);
  CHECK(back.mode == view.mode);
  CHECK(back.instances == view.instances);
}

TEST_CASE("sentence splitter") {
  const std::u32string text = U"First one. Second, e.g. this one! Third? \"Quoted.\" Last";
  const auto s = sentence_ranges(text, {});
  REQUIRE(s.size() == 5);
  CHECK(utf8_encode(text.substr(s[1].start, s[1].size())) == "Second, e.g. this one!");
  CHECK(utf8_encode(text.substr(s[3].start, s[3].size())) == "\"Quoted.\"");
  CHECK(covering_range(s, {s[1].start + 2, s[2].start + 1}) == CharRange{s[1].start, s[2].end});
}

TEST_CASE("split table reader accepts the corpus format") {
  TempDir dir("argrank_split_table");
  const auto path = (dir.path / "train-test-split.csv").string();
  write_file_atomic(path, "\"ID\";\"SET\"\n\"essay001\";\"TRAIN\"\n\"essay002\";\"TEST\"\r\nessay003,train\n");
  const auto table = read_split_table(path);
  CHECK(table.size() == 3);
  CHECK(table.at("essay003") == "TRAIN");
  CHECK(test_documents(table) == std::set<std::string>{"essay002"});
}

TEST_CASE("corpus directory loading") {
  TempDir dir("argrank_corpus_dir");
  for (const char* id : {"essay002", "essay001", "essay003"}) {
    write_file_atomic((dir.path / (std::string(id) + ".txt")).string(), kEssay);
    write_file_atomic((dir.path / (std::string(id) + ".ann")).string(), fixture_ann());
  }
  const auto docs = load_corpus_dir(dir.path.string());
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "essay001");
  CHECK(docs[2].doc_id == "essay003");
  const auto stats = corpus_stats(docs);
  CHECK(stats.essays == 3);
  CHECK(stats.relations == 6);
  CHECK(stats.attack == 3);
  CHECK(stats.support_fraction == doctest::Approx(0.5));

  write_file_atomic((dir.path / "essay004.ann").string(), "T1\tPremise 0 3\twrong\n");
  write_file_atomic((dir.path / "essay004.txt").string(), "abc");
  CHECK_THROWS_AS(load_corpus_dir(dir.path.string()), OffsetMismatch);
  CHECK_THROWS_AS(load_corpus_dir((dir.path / "missing").string()), MissingArtifact);
}

TEST_CASE("document-level split") {
  std::vector<Document> docs;
  Rng sizes(5);
  for (int i = 0; i < 40; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "essay%03d", i);
    docs.push_back(synthetic_doc(id, 1 + sizes.below(12)));
  }
  const std::set<std::string> test = {"essay000", "essay001", "essay002", "essay003", "essay004"};
  std::size_t train_total = 0, max_doc = 0;
  for (const auto& d : docs)
    if (!test.count(d.doc_id)) {
      train_total += d.relations.size();
      max_doc = std::max(max_doc, d.relations.size());
    }

  const auto split = make_split(docs, test, 60, 13);
  CHECK(split.seed == 13);
  const std::size_t dev = split.dev.size();
  CHECK(dev + max_doc >= 60);
  CHECK(dev <= 60 + max_doc);
  CHECK(split.train.size() + split.dev.size() == train_total);
  // disjoint documents across partitions
  std::set<std::string> seen;
  for (const auto* part : {&split.train_docs, &split.dev_docs, &split.test_docs})
    for (const auto& d : *part) CHECK(seen.insert(d).second);
  for (const auto& key : split.test) CHECK(test.count(key.substr(0, key.find(':'))));

  const auto again = make_split(docs, test, 60, 13);
  CHECK(again.dev == split.dev);
  CHECK(again.train == split.train);
  CHECK(make_split(docs, test, 60, 14).dev != split.dev);

  const auto none = make_split(docs, test, 0, 13);
  CHECK(none.dev.empty());
  CHECK(none.train.size() == train_total);

  CHECK_THROWS_AS(make_split(docs, test, train_total + 1, 13), SplitInfeasible);

  const auto json = split_to_json(split);
  const auto back = split_from_json(json);
  CHECK(back.train == split.train);
  CHECK(back.dev == split.dev);
  CHECK(back.test == split.test);
  CHECK(back.dev_docs == split.dev_docs);
  CHECK(back.seed == 13);
}

TEST_CASE("proper-noun guard vocabulary") {
  const auto doc = parse_standoff(fixture_ann(), kEssay, "essay001");
  const auto words = mid_sentence_capitalized(doc);
  CHECK(words.count("Obama"));
  CHECK(words.count("Smith"));
  CHECK_FALSE(words.count("However"));
  CHECK_FALSE(words.count("Use"));
  CHECK_FALSE(words.count("Café"));  // title line
}
