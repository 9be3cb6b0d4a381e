#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/reconstruction.hpp"
#include "argrank/util.hpp"

using namespace argrank;

namespace {

ViewInstance cannabis(Label gold) {
  ViewInstance v;
  v.rel_id = "essay001:R1";
  v.doc_id = "essay001";
  v.target_text = "Use of marijuana causes chronic bronchitis and airflow obstruction";
  v.source_text = "cannabis does not need to be smoked to receive its potential health benefits";
  v.label = gold;
  return v;
}

std::vector<std::string> non_connector_tokens(const Reconstruction& r) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < r.tokens.size(); ++i)
    if (r.tags[i] != SpanTag::connector) out.push_back(r.tokens[i].text);
  return out;
}

}  // namespace

TEST_CASE("connector registry") {
  const auto& reg = connector_registry();
  REQUIRE(reg.size() == 5);
  const auto& mh = find_connector("M/H");
  CHECK(mh.support_marker == "Moreover,");
  CHECK(mh.attack_marker == "However,");
  CHECK(&find_connector("MH") == &mh);
  CHECK(find_connector("AA").support_marker == "Additionally,");
  CHECK(find_connector("AA").attack_marker == "Admittedly,");
  CHECK(find_connector("AD").support_marker == "I agree,");
  CHECK(find_connector("AD").attack_marker == "I disagree,");
  CHECK(find_connector("YN").support_marker == "Yes,");
  CHECK(find_connector("YN").attack_marker == "No,");
  const auto& nodisc = find_connector("NODISC");
  CHECK(nodisc.support_marker == "+");
  CHECK(nodisc.attack_marker == "-");
  CHECK_FALSE(nodisc.linguistic);
  for (const auto& p : reg) CHECK(p.support_marker != p.attack_marker);
  CHECK(linguistic_connector_codes() == std::vector<std::string>{"AA", "AD", "MH", "YN"});
  CHECK_THROWS_AS(find_connector("XY"), ConfigInvalid);
}

TEST_CASE("worked example: attack with A/A") {
  const auto mp = build_minimal_pair(cannabis(Label::attack), find_connector("AA"));
  CHECK(mp.plus.text ==
        "Use of marijuana causes chronic bronchitis and airflow obstruction. Admittedly, cannabis does not "
        "need to be smoked to receive its potential health benefits.");
  CHECK(mp.minus.text ==
        "Use of marijuana causes chronic bronchitis and airflow obstruction. Additionally, cannabis does not "
        "need to be smoked to receive its potential health benefits.");
  CHECK(mp.plus.polarity == Polarity::attack_marked);
  CHECK(&mp.attack_marked() == &mp.plus);
}

TEST_CASE("support with M/H puts Moreover in r+") {
  const auto mp = build_minimal_pair(cannabis(Label::support), find_connector("MH"));
  CHECK(mp.plus.text.find(". Moreover, cannabis") != std::string::npos);
  CHECK(mp.minus.text.find(". However, cannabis") != std::string::npos);
  CHECK(mp.plus.polarity == Polarity::support_marked);
}

TEST_CASE("minimal-pair property, tag contiguity and range partition") {
  for (const auto& pair : connector_registry()) {
    for (Label gold : {Label::support, Label::attack}) {
      const auto mp = build_minimal_pair(cannabis(gold), pair);
      CHECK(non_connector_tokens(mp.plus) == non_connector_tokens(mp.minus));
      for (const auto* r : {&mp.plus, &mp.minus}) {
        CHECK(r->tags.size() == r->tokens.size());
        CHECK(std::is_sorted(r->tags.begin(), r->tags.end()));
        for (auto tag : {SpanTag::target, SpanTag::connector, SpanTag::source})
          CHECK(std::count(r->tags.begin(), r->tags.end(), tag) > 0);
        CHECK(r->ranges[0].start == 0);
        CHECK(r->ranges[0].end == r->ranges[1].start);
        CHECK(r->ranges[1].end == r->ranges[2].start);
        CHECK(r->ranges[2].end == utf8_length(r->text));
      }
    }
  }
}

TEST_CASE("swapping the gold label swaps r+ and r-") {
  for (const auto& pair : connector_registry()) {
    const auto s = build_minimal_pair(cannabis(Label::support), pair);
    const auto a = build_minimal_pair(cannabis(Label::attack), pair);
    CHECK(s.plus == a.minus);
    CHECK(s.minus == a.plus);
  }
}

TEST_CASE("construction is deterministic") {
  const auto a = build_minimal_pair(cannabis(Label::attack), find_connector("YN"));
  const auto b = build_minimal_pair(cannabis(Label::attack), find_connector("YN"));
  CHECK(a == b);
}

TEST_CASE("unit normalization") {
  CHECK(normalize_unit("use of marijuana causes harm", UnitPosition::leading_target) ==
        "Use of marijuana causes harm");
  CHECK(normalize_unit("use of marijuana causes harm. ", UnitPosition::leading_target) ==
        "Use of marijuana causes harm");
  CHECK(normalize_unit("Cannabis does not need to be smoked", UnitPosition::trailing_source) ==
        "cannabis does not need to be smoked.");
  CHECK(normalize_unit("Cannabis helps;", UnitPosition::trailing_source) == "cannabis helps.");
  CHECK(normalize_unit("Is it worth it?", UnitPosition::trailing_source) == "is it worth it?");
  CHECK(normalize_unit("Obama agreed", UnitPosition::trailing_source, true) == "Obama agreed.");
  CHECK(normalize_unit("Élan matters", UnitPosition::trailing_source) == "élan matters.");
  CHECK_THROWS_AS(normalize_unit("", UnitPosition::leading_target), EmptyUnit);
  CHECK_THROWS_AS(normalize_unit(" ... ", UnitPosition::leading_target), EmptyUnit);
  CHECK_THROWS_AS(normalize_unit(";", UnitPosition::trailing_source), EmptyUnit);
  auto empty = cannabis(Label::support);
  empty.source_text = "  ";
  CHECK_THROWS_AS(build_minimal_pair(empty, find_connector("AA")), EmptyUnit);
}

TEST_CASE("keep-case flag reaches the source") {
  auto v = cannabis(Label::support);
  v.source_text = "I think so";
  v.source_keep_case = true;
  const auto mp = build_minimal_pair(v, find_connector("MH"));
  CHECK(mp.plus.text.ends_with("Moreover, I think so."));
}

TEST_CASE("tokenizer") {
  const auto toks = tokenize("It's a well-known fact, isn't it? \"Yes\" (no).");
  std::vector<std::string> texts;
  for (const auto& t : toks) texts.push_back(t.text);
  CHECK(texts == std::vector<std::string>{"It's", "a", "well-known", "fact", ",", "isn't", "it", "?", "\"",
                                          "Yes", "\"", "(", "no", ")", "."});
  CHECK(toks[0].range == CharRange{0, 4});
  // code-point ranges
  const auto u = tokenize("café au lait");
  CHECK(u[1].range == CharRange{5, 7});
}

TEST_CASE("NO-DISC markers are bare single tokens tagged CONNECTOR") {
  const auto mp = build_minimal_pair(cannabis(Label::support), find_connector("NODISC"));
  std::size_t connector = 0;
  for (std::size_t i = 0; i < mp.plus.tokens.size(); ++i)
    if (mp.plus.tags[i] == SpanTag::connector) {
      ++connector;
      CHECK(mp.plus.tokens[i].text == "+");
    }
  CHECK(connector == 1);
  CHECK(mp.minus.text.find("obstruction. - cannabis") != std::string::npos);
}

TEST_CASE("pairs JSONL round trip") {
  std::vector<MinimalPair> pairs = {build_minimal_pair(cannabis(Label::attack), find_connector("AD")),
                                    build_minimal_pair(cannabis(Label::support), find_connector("AD"))};
  const auto jsonl = pairs_to_jsonl(pairs);
  const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first["gold"] == "attack");
  CHECK(first["connector_abbrev"] == "A/D");
  CHECK(first["r_plus"]["tags"][0] == "TARGET");
  CHECK(first["r_plus"]["tags"].size() == pairs[0].plus.tokens.size());
  CHECK(pairs_from_jsonl(jsonl) == pairs);
}
