#include "argrank/synthetic.hpp"

#include <cstdio>
#include <filesystem>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {

namespace {

constexpr const char* kVocabulary[] = {
    "people",  "money",    "school",  "students", "time",    "work",    "city",    "health",
    "family",  "children", "society", "country",  "government", "science", "history", "nature",
    "young",   "older",    "better",  "worse",    "many",    "most",    "often",   "rarely",
    "learn",   "spend",    "build",   "keep",     "lose",    "gain",    "improve", "reduce",
    "the",     "a",        "of",      "for",      "with",    "more",    "less",    "their",
    "games",   "books",    "sports",  "travel",   "music",   "jobs",    "cars",    "food",
};
constexpr std::size_t kVocabularySize = sizeof(kVocabulary) / sizeof(kVocabulary[0]);

std::string random_clause(Rng& rng, const SyntheticConfig& c, bool with_signal) {
  const std::size_t span = c.max_words - c.min_words + 1;
  const std::size_t words = c.min_words + static_cast<std::size_t>(rng.below(span));
  const std::size_t signal_at = with_signal ? static_cast<std::size_t>(rng.below(words)) : words;
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (!out.empty()) out += ' ';
    out += w == signal_at ? c.signal_token : kVocabulary[rng.below(kVocabularySize)];
  }
  return out;
}

void check(const SyntheticConfig& c) {
  if (c.min_words == 0 || c.max_words < c.min_words) throw ConfigInvalid("synthetic clause lengths invalid");
  if (c.signal_token.empty()) throw ConfigInvalid("synthetic signal token is empty");
  if (!(c.attack_fraction >= 0.0 && c.attack_fraction <= 1.0))
    throw ConfigInvalid("attack_fraction must lie in [0, 1]");
}

}  // namespace

std::vector<ViewInstance> synthetic_instances(const SyntheticConfig& config) {
  check(config);
  Rng rng(config.seed);
  const std::string doc_id = "syn" + std::to_string(config.seed);
  std::vector<ViewInstance> out;
  out.reserve(config.instances);
  for (std::size_t k = 0; k < config.instances; ++k) {
    ViewInstance v;
    v.doc_id = doc_id;
    v.rel_id = relation_key(doc_id, "R" + std::to_string(k + 1));
    v.label = rng.uniform() < config.attack_fraction ? Label::attack : Label::support;
    v.target_text = random_clause(rng, config, false);
    v.source_text = random_clause(rng, config, v.label == Label::attack);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Document> synthetic_corpus(std::size_t docs, std::size_t relations_per_doc,
                                       const SyntheticConfig& config) {
  check(config);
  Rng rng(config.seed);
  std::vector<Document> out;
  for (std::size_t d = 0; d < docs; ++d) {
    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "essay%03zu", d + 1);
    doc.doc_id = id;
    doc.text = "Essay " + std::to_string(d + 1) + "\n\n";
    std::size_t unit = 0;
    auto add_sentence = [&](const std::string& clause, UnitKind kind) {
      // "<Clause>." with the unit covering the clause only
      std::string sentence = clause;
      sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
      const std::size_t start = utf8_length(doc.text);
      doc.text += sentence + ". ";
      doc.units.push_back({"T" + std::to_string(++unit), kind, start, start + utf8_length(sentence), sentence});
      return doc.units.back().unit_id;
    };
    for (std::size_t r = 0; r < relations_per_doc; ++r) {
      const Label label = rng.uniform() < config.attack_fraction ? Label::attack : Label::support;
      const std::string target = add_sentence(random_clause(rng, config, false), UnitKind::claim);
      const std::string source =
          add_sentence(random_clause(rng, config, label == Label::attack), UnitKind::premise);
      doc.relations.push_back({"R" + std::to_string(r + 1), source, target, label, doc.doc_id});
    }
    out.push_back(std::move(doc));
  }
  return out;
}

void write_standoff_corpus(const std::vector<Document>& docs, const std::string& dir,
                           const std::set<std::string>& test_docs) {
  std::filesystem::create_directories(dir);
  std::string table = "\"ID\";\"SET\"\n";
  for (const auto& doc : docs) {
    write_file_atomic(dir + "/" + doc.doc_id + ".txt", doc.text);
    write_file_atomic(dir + "/" + doc.doc_id + ".ann", serialize_standoff(doc));
    table += "\"" + doc.doc_id + "\";\"" + (test_docs.contains(doc.doc_id) ? "TEST" : "TRAIN") + "\"\n";
  }
  write_file_atomic(dir + "/train-test-split.csv", table);
}

}  // namespace argrank
