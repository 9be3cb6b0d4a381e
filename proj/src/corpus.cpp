#include "argrank/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cwctype>
#include <exception>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {

using nlohmann::json;

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::major_claim: return "MajorClaim";
    case UnitKind::claim: return "Claim";
    case UnitKind::premise: return "Premise";
  }
  return "?";
}

std::string_view to_string(Label label) { return label == Label::support ? "support" : "attack"; }

std::string_view to_string(ViewMode mode) {
  return mode == ViewMode::essay ? "ESSAY" : "ESSAY_CONTENT";
}

Label parse_label(std::string_view s) {
  if (s == "support" || s == "supports") return Label::support;
  if (s == "attack" || s == "attacks") return Label::attack;
  throw MalformedLine("unknown label '" + std::string(s) + "'");
}

ViewMode parse_view_mode(std::string_view s) {
  if (s == "ESSAY" || s == "essay") return ViewMode::essay;
  if (s == "ESSAY_CONTENT" || s == "ESSAY-CONTENT" || s == "essay_content" || s == "essay-content")
    return ViewMode::essay_content;
  throw ConfigInvalid("unknown view mode '" + std::string(s) + "'");
}

const EauSpan* Document::find_unit(std::string_view unit_id) const {
  for (const auto& u : units)
    if (u.unit_id == unit_id) return &u;
  return nullptr;
}

namespace {

std::size_t parse_offset(std::string_view s, std::string_view line) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw MalformedLine("bad offset in '" + std::string(line) + "'");
  return v;
}

UnitKind parse_kind(std::string_view s, std::string_view line) {
  if (s == "MajorClaim") return UnitKind::major_claim;
  if (s == "Claim") return UnitKind::claim;
  if (s == "Premise") return UnitKind::premise;
  throw MalformedLine("unknown unit type in '" + std::string(line) + "'");
}

std::vector<std::string> fields(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string f;
  while (in >> f) out.push_back(f);
  return out;
}

std::string strip_arg(std::string_view arg, std::string_view prefix, std::string_view line) {
  if (arg.substr(0, prefix.size()) != prefix)
    throw MalformedLine("expected " + std::string(prefix) + " in '" + std::string(line) + "'");
  return std::string(arg.substr(prefix.size()));
}

bool is_word_char(char32_t c) { return std::iswalnum(static_cast<wint_t>(c)) || c == U'\'' || c >= 0x80; }

}  // namespace

Document parse_standoff(std::string_view ann_content, std::string_view txt_content,
                        std::string doc_id) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.text = std::string(txt_content);
  const std::u32string text = utf8_decode(txt_content);

  std::unordered_set<std::string> unit_ids;
  std::size_t pos = 0;
  while (pos <= ann_content.size()) {
    auto eol = ann_content.find('\n', pos);
    if (eol == std::string_view::npos) eol = ann_content.size();
    std::string_view line = ann_content.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      if (eol == ann_content.size()) break;
      continue;
    }

    const auto cols = split(line, '\t');
    const std::string& id = cols[0];
    if (id.empty()) throw MalformedLine("missing id in '" + std::string(line) + "'");

    switch (id[0]) {
      case 'T': {
        if (cols.size() != 3) throw MalformedLine("T-line needs 3 fields: '" + std::string(line) + "'");
        const auto head = fields(cols[1]);
        if (head.size() != 3) throw MalformedLine("T-line header '" + cols[1] + "'");
        EauSpan span;
        span.unit_id = id;
        span.kind = parse_kind(head[0], line);
        span.start = parse_offset(head[1], line);
        span.end = parse_offset(head[2], line);
        span.surface = cols[2];
        if (span.start >= span.end || span.end > text.size())
          throw OffsetMismatch(doc.doc_id + " " + id + ": range [" + head[1] + ", " + head[2] +
                               ") outside text of length " + std::to_string(text.size()));
        const std::string slice = utf8_encode(
            std::u32string_view(text).substr(span.start, span.end - span.start));
        if (slice != span.surface)
          throw OffsetMismatch(doc.doc_id + " " + id + ": annotated '" + span.surface +
                               "' but text has '" + slice + "'");
        if (!unit_ids.insert(id).second) throw MalformedLine("duplicate unit id " + id);
        doc.units.push_back(std::move(span));
        break;
      }
      case 'R': {
        if (cols.size() < 2 || cols.size() > 3 || (cols.size() == 3 && !trim(cols[2]).empty()))
          throw MalformedLine("R-line '" + std::string(line) + "'");
        const auto f = fields(cols[1]);
        if (f.size() != 3) throw MalformedLine("R-line '" + std::string(line) + "'");
        RelationInstance rel;
        rel.rel_id = id;
        if (f[0] != "supports" && f[0] != "attacks")
          throw MalformedLine("unknown relation type '" + f[0] + "'");
        rel.label = parse_label(f[0]);
        rel.source = strip_arg(f[1], "Arg1:", line);
        rel.target = strip_arg(f[2], "Arg2:", line);
        rel.doc_id = doc.doc_id;
        if (rel.source == rel.target) throw MalformedLine("self relation in '" + std::string(line) + "'");
        doc.relations.push_back(std::move(rel));
        break;
      }
      case 'A': {
        if (cols.size() != 2) throw MalformedLine("A-line '" + std::string(line) + "'");
        const auto f = fields(cols[1]);
        if (f.size() < 2 || f.size() > 3) throw MalformedLine("A-line '" + std::string(line) + "'");
        doc.attributes.push_back({id, f[0], f[1], f.size() == 3 ? f[2] : std::string{}});
        break;
      }
      case '#':
        doc.notes.emplace_back(line);
        break;
      default:
        throw MalformedLine("unrecognised line '" + std::string(line) + "'");
    }
    if (eol == ann_content.size()) break;
  }

  for (const auto& rel : doc.relations) {
    for (const auto* ref : {&rel.source, &rel.target})
      if (!unit_ids.contains(*ref))
        throw DanglingReference(doc.doc_id + " " + rel.rel_id + " cites missing " + *ref);
  }
  for (const auto& a : doc.attributes)
    if (!unit_ids.contains(a.unit_id))
      throw DanglingReference(doc.doc_id + " " + a.attr_id + " cites missing " + a.unit_id);
  return doc;
}

std::string serialize_standoff(const Document& doc) {
  std::ostringstream out;
  for (const auto& u : doc.units)
    out << u.unit_id << '\t' << to_string(u.kind) << ' ' << u.start << ' ' << u.end << '\t'
        << u.surface << '\n';
  for (const auto& a : doc.attributes) {
    out << a.attr_id << '\t' << a.name << ' ' << a.unit_id;
    if (!a.value.empty()) out << ' ' << a.value;
    out << '\n';
  }
  for (const auto& r : doc.relations)
    out << r.rel_id << '\t' << (r.label == Label::support ? "supports" : "attacks") << " Arg1:"
        << r.source << " Arg2:" << r.target << '\n';
  for (const auto& n : doc.notes) out << n << '\n';
  return out.str();
}

std::vector<Document> load_corpus_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw MissingArtifact("corpus directory not found: " + dir);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".ann") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());

  std::vector<Document> docs(ids.size());
  std::vector<std::exception_ptr> failures(ids.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) {
    try {
      const fs::path base = fs::path(dir) / ids[i];
      docs[i] = parse_standoff(read_file(base.string() + ".ann"), read_file(base.string() + ".txt"),
                               ids[i]);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return docs;
}

std::map<std::string, std::string> read_split_table(const std::string& path) {
  const std::string content = read_file(path);
  std::map<std::string, std::string> table;
  std::istringstream in(content);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const char delim = line.find(';') != std::string::npos ? ';' : ',';
    auto cols = split(line, delim);
    if (cols.size() < 2) throw MalformedLine("split table row '" + line + "'");
    for (auto& c : cols) {
      c = trim(c);
      if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
    }
    std::string part = cols[1];
    std::transform(part.begin(), part.end(), part.begin(), ::toupper);
    if (first) {
      first = false;
      if (part != "TRAIN" && part != "TEST" && part != "DEV") continue;  // header
    }
    table[cols[0]] = part;
  }
  return table;
}

std::set<std::string> test_documents(const std::map<std::string, std::string>& table) {
  std::set<std::string> out;
  for (const auto& [id, part] : table)
    if (part == "TEST") out.insert(id);
  return out;
}

std::string relation_key(std::string_view doc_id, std::string_view rel_id) {
  return std::string(doc_id) + ":" + std::string(rel_id);
}

std::set<std::string> mid_sentence_capitalized(const Document& doc, const SentencePolicy& policy) {
  const std::u32string text = utf8_decode(doc.text);
  std::set<std::string> out;
  for (const auto& s : sentence_ranges(text, policy)) {
    std::vector<CharRange> words;
    std::size_t capitalized = 0;
    std::size_t i = s.start;
    while (i < s.end) {
      if (!is_word_char(text[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < s.end && is_word_char(text[j])) ++j;
      words.push_back({i, j});
      if (is_upper(text[i])) ++capitalized;
      i = j;
    }
    // title-case lines (essay titles, no terminal mark) say nothing about proper nouns
    std::size_t last = s.end;
    while (last > s.start && std::iswspace(static_cast<wint_t>(text[last - 1]))) --last;
    const bool terminated = last > s.start && std::u32string_view(U".!?\"')]").find(text[last - 1]) != std::u32string_view::npos;
    if (!terminated && words.size() > 2 && 2 * capitalized > words.size()) continue;
    for (std::size_t w = 1; w < words.size(); ++w)
      if (is_upper(text[words[w].start]))
        out.insert(utf8_encode(std::u32string_view(text).substr(words[w].start, words[w].size())));
  }
  return out;
}

namespace {

std::string leading_word(std::string_view s) {
  const std::u32string t = utf8_decode(s);
  std::size_t i = 0;
  while (i < t.size() && !is_word_char(t[i])) ++i;
  std::size_t j = i;
  while (j < t.size() && is_word_char(t[j])) ++j;
  return utf8_encode(std::u32string_view(t).substr(i, j - i));
}

bool keeps_case(const std::string& word, const std::set<std::string>& proper) {
  if (word.empty()) return false;
  if (word == "I" || word.rfind("I'", 0) == 0) return true;
  const std::u32string w = utf8_decode(word);
  if (w.size() > 1 && std::all_of(w.begin(), w.end(), [](char32_t c) {
        return !is_lower(c);
      }))
    return true;  // acronym
  return proper.contains(word);
}

}  // namespace

CorpusView build_view(const std::vector<Document>& docs, ViewMode mode,
                      const SentencePolicy& policy) {
  CorpusView view;
  view.mode = mode;
  for (const auto& doc : docs) {
    if (doc.relations.empty()) continue;
    const std::u32string text = utf8_decode(doc.text);
    const auto sentences = sentence_ranges(text, policy);
    const auto proper = mid_sentence_capitalized(doc, policy);
    auto unit_text = [&](const EauSpan& u) {
      if (mode == ViewMode::essay_content || !policy.extend_to_sentence) return u.surface;
      const CharRange r = covering_range(sentences, {u.start, u.end});
      return utf8_encode(std::u32string_view(text).substr(r.start, r.size()));
    };
    for (const auto& rel : doc.relations) {
      const EauSpan* src = doc.find_unit(rel.source);
      const EauSpan* tgt = doc.find_unit(rel.target);
      if (!src || !tgt) throw DanglingReference(doc.doc_id + " " + rel.rel_id);
      ViewInstance inst;
      inst.rel_id = relation_key(doc.doc_id, rel.rel_id);
      inst.doc_id = doc.doc_id;
      inst.source_text = unit_text(*src);
      inst.target_text = unit_text(*tgt);
      inst.label = rel.label;
      inst.source_keep_case = keeps_case(leading_word(inst.source_text), proper);
      view.instances.push_back(std::move(inst));
    }
  }
  return view;
}

std::string view_to_jsonl(const CorpusView& view) {
  std::string out;
  for (const auto& inst : view.instances) {
    json j = {{"rel_id", inst.rel_id},           {"doc_id", inst.doc_id},
              {"source_text", inst.source_text}, {"target_text", inst.target_text},
              {"label", to_string(inst.label)},  {"mode", to_string(view.mode)}};
    if (inst.source_keep_case) j["source_keep_case"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

CorpusView view_from_jsonl(std::string_view jsonl) {
  CorpusView view;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  bool have_mode = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw MalformedLine(std::string("view line: ") + e.what());
    }
    ViewInstance inst;
    inst.rel_id = j.at("rel_id").get<std::string>();
    inst.doc_id = j.at("doc_id").get<std::string>();
    inst.source_text = j.at("source_text").get<std::string>();
    inst.target_text = j.at("target_text").get<std::string>();
    inst.label = parse_label(j.at("label").get<std::string>());
    inst.source_keep_case = j.value("source_keep_case", false);
    const ViewMode mode = parse_view_mode(j.at("mode").get<std::string>());
    if (have_mode && mode != view.mode) throw MalformedLine("mixed modes in one view file");
    view.mode = mode;
    have_mode = true;
    view.instances.push_back(std::move(inst));
  }
  return view;
}

DataSplit make_split(const std::vector<Document>& docs,
                     const std::set<std::string>& official_test_docs, std::size_t dev_count,
                     std::uint64_t seed) {
  DataSplit split;
  split.seed = seed;
  std::vector<const Document*> train_docs;
  std::size_t train_relations = 0;
  for (const auto& d : docs) {
    if (official_test_docs.contains(d.doc_id)) {
      split.test_docs.push_back(d.doc_id);
    } else {
      train_docs.push_back(&d);
      train_relations += d.relations.size();
    }
  }
  if (dev_count > train_relations)
    throw SplitInfeasible("dev_count " + std::to_string(dev_count) + " exceeds " +
                          std::to_string(train_relations) + " training relations");

  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  // greedy fill without overshoot, then at most one document that overshoots
  // if that lands closer to the target
  std::vector<bool> in_dev(train_docs.size(), false);
  std::size_t total = 0;
  for (std::size_t idx : order) {
    const std::size_t n = train_docs[idx]->relations.size();
    if (n == 0 || total >= dev_count) continue;
    if (total + n <= dev_count) {
      in_dev[idx] = true;
      total += n;
    }
  }
  if (total < dev_count) {
    std::size_t best = order.size();
    std::size_t best_overshoot = 0;
    for (std::size_t idx : order) {
      const std::size_t n = train_docs[idx]->relations.size();
      if (in_dev[idx] || n == 0) continue;
      const std::size_t over = total + n - dev_count;
      if (best == order.size() || over < best_overshoot) {
        best = idx;
        best_overshoot = over;
      }
    }
    if (best != order.size() && best_overshoot < dev_count - total) {
      in_dev[best] = true;
      total += train_docs[best]->relations.size();
    }
  }

  auto add_relations = [](const Document& d, std::vector<std::string>& out) {
    for (const auto& r : d.relations) out.push_back(relation_key(d.doc_id, r.rel_id));
  };
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    const Document& d = *train_docs[i];
    if (in_dev[i]) {
      split.dev_docs.push_back(d.doc_id);
      add_relations(d, split.dev);
    } else {
      split.train_docs.push_back(d.doc_id);
      add_relations(d, split.train);
    }
  }
  for (const auto& d : docs)
    if (official_test_docs.contains(d.doc_id)) add_relations(d, split.test);
  return split;
}

std::string split_to_json(const DataSplit& split) {
  json j = {{"seed", split.seed},           {"train", split.train},
            {"dev", split.dev},             {"test", split.test},
            {"train_docs", split.train_docs}, {"dev_docs", split.dev_docs},
            {"test_docs", split.test_docs}};
  return j.dump(1) + "\n";
}

DataSplit split_from_json(std::string_view text) {
  const json j = json::parse(text);
  DataSplit s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<std::string>>();
  s.dev = j.at("dev").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  s.train_docs = j.value("train_docs", std::vector<std::string>{});
  s.dev_docs = j.value("dev_docs", std::vector<std::string>{});
  s.test_docs = j.value("test_docs", std::vector<std::string>{});
  return s;
}

CorpusStats corpus_stats(const std::vector<Document>& docs) {
  CorpusStats s;
  s.essays = docs.size();
  for (const auto& d : docs) {
    s.units += d.units.size();
    for (const auto& r : d.relations) {
      ++s.relations;
      (r.label == Label::support ? s.support : s.attack) += 1;
    }
  }
  s.support_fraction = s.relations ? static_cast<double>(s.support) / s.relations : 0.0;
  return s;
}

}  // namespace argrank
