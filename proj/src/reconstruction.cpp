#include "argrank/reconstruction.hpp"

#include <algorithm>
#include <cwctype>
#include <sstream>

#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {

using nlohmann::json;

std::string_view to_string(SpanTag tag) {
  switch (tag) {
    case SpanTag::target: return "TARGET";
    case SpanTag::connector: return "CONNECTOR";
    case SpanTag::source: return "SOURCE";
  }
  return "?";
}

SpanTag parse_span_tag(std::string_view s) {
  if (s == "TARGET") return SpanTag::target;
  if (s == "CONNECTOR") return SpanTag::connector;
  if (s == "SOURCE") return SpanTag::source;
  throw MalformedLine("unknown span tag '" + std::string(s) + "'");
}

const std::vector<ConnectorPair>& connector_registry() {
  static const std::vector<ConnectorPair> registry = {
      {"A/A", "AA", "Additionally,", "Admittedly,", true},
      {"A/D", "AD", "I agree,", "I disagree,", true},
      {"M/H", "MH", "Moreover,", "However,", true},
      {"Y/N", "YN", "Yes,", "No,", true},
      {"NO-DISC", "NODISC", "+", "-", false},
  };
  return registry;
}

const ConnectorPair& find_connector(std::string_view name) {
  for (const auto& p : connector_registry())
    if (p.abbreviation == name || p.code == name) return p;
  throw ConfigInvalid("unknown connector pair '" + std::string(name) + "'");
}

std::vector<std::string> linguistic_connector_codes() {
  std::vector<std::string> out;
  for (const auto& p : connector_registry())
    if (p.linguistic) out.push_back(p.code);
  return out;
}

namespace {

bool is_space(char32_t c) { return std::iswspace(static_cast<wint_t>(c)) || c == 0xA0; }
bool is_alnum(char32_t c) { return std::iswalnum(static_cast<wint_t>(c)) || (c >= 0x80 && !is_space(c) && !(c >= 0x2010 && c <= 0x206F)); }
bool is_joiner(char32_t c) { return c == U'\'' || c == U'-' || c == 0x2019; }


}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string t = utf8_decode(text);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < t.size()) {
    if (is_space(t[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_alnum(t[i])) {
      while (j < t.size()) {
        if (is_alnum(t[j])) {
          ++j;
        } else if (is_joiner(t[j]) && j + 1 < t.size() && is_alnum(t[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
    }
    out.push_back({utf8_encode(std::u32string_view(t).substr(i, j - i)), {i, j}});
    i = j;
  }
  return out;
}

std::string normalize_unit(std::string_view text, UnitPosition position, bool keep_case) {
  std::u32string t = utf8_decode(trim(text));
  auto strip_trailing = [&](std::u32string_view chars) {
    while (!t.empty() && (is_space(t.back()) || chars.find(t.back()) != std::u32string_view::npos))
      t.pop_back();
  };
  if (position == UnitPosition::leading_target) {
    strip_trailing(U".!?;:,");
    if (t.empty()) throw EmptyUnit("target is empty after normalization");
    t[0] = to_upper(t[0]);
  } else {
    strip_trailing(U";:,");
    if (t.empty() || std::all_of(t.begin(), t.end(), [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }))
      throw EmptyUnit("source is empty after normalization");
    if (!keep_case) t[0] = to_lower(t[0]);
    const char32_t last = t.back();
    if (last != U'.' && last != U'!' && last != U'?') t.push_back(U'.');
  }
  return utf8_encode(t);
}

Reconstruction reconstruct(std::string_view target, std::string_view marker,
                           std::string_view source, Polarity polarity) {
  Reconstruction r;
  r.polarity = polarity;
  const std::string head = std::string(target) + ". ";
  const std::string mid = std::string(marker) + " ";
  r.text = head + mid + std::string(source);
  const std::size_t t_end = utf8_length(head);
  const std::size_t c_end = t_end + utf8_length(mid);
  const std::size_t s_end = c_end + utf8_length(source);
  r.ranges = {CharRange{0, t_end}, CharRange{t_end, c_end}, CharRange{c_end, s_end}};
  r.tokens = tokenize(r.text);
  r.tags.reserve(r.tokens.size());
  for (const auto& tok : r.tokens) {
    const std::size_t first = tok.range.start;
    r.tags.push_back(first < t_end ? SpanTag::target
                                   : first < c_end ? SpanTag::connector : SpanTag::source);
  }
  return r;
}

MinimalPair build_minimal_pair(const ViewInstance& instance, const ConnectorPair& pair) {
  if (trim(instance.source_text).empty() || trim(instance.target_text).empty())
    throw EmptyUnit(instance.rel_id + ": empty unit text");
  const std::string target = normalize_unit(instance.target_text, UnitPosition::leading_target);
  const std::string source =
      normalize_unit(instance.source_text, UnitPosition::trailing_source, instance.source_keep_case);

  const Reconstruction support =
      reconstruct(target, pair.support_marker, source, Polarity::support_marked);
  const Reconstruction attack =
      reconstruct(target, pair.attack_marker, source, Polarity::attack_marked);

  MinimalPair mp;
  mp.rel_id = instance.rel_id;
  mp.gold = instance.label;
  mp.connector_abbrev = pair.abbreviation;
  mp.plus = instance.label == Label::support ? support : attack;
  mp.minus = instance.label == Label::support ? attack : support;
  return mp;
}

std::vector<MinimalPair> build_minimal_pairs(const CorpusView& view, const ConnectorPair& pair) {
  std::vector<MinimalPair> out;
  out.reserve(view.instances.size());
  for (const auto& inst : view.instances) out.push_back(build_minimal_pair(inst, pair));
  return out;
}

namespace {

json reading_json(const Reconstruction& r) {
  json tags = json::array();
  for (SpanTag t : r.tags) tags.push_back(to_string(t));
  return {{"text", r.text}, {"tags", tags}};
}

Reconstruction reading_from_json(const json& j, Polarity polarity) {
  Reconstruction r;
  r.polarity = polarity;
  r.text = j.at("text").get<std::string>();
  r.tokens = tokenize(r.text);
  for (const auto& t : j.at("tags")) r.tags.push_back(parse_span_tag(t.get<std::string>()));
  if (r.tags.size() != r.tokens.size())
    throw MalformedLine("tag count does not match tokens of '" + r.text + "'");
  const std::size_t n = utf8_length(r.text);
  std::size_t c_start = n, s_start = n;
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    if (r.tags[i] == SpanTag::connector && c_start == n) c_start = r.tokens[i].range.start;
    if (r.tags[i] == SpanTag::source && s_start == n) s_start = r.tokens[i].range.start;
  }
  c_start = std::min(c_start, s_start);
  r.ranges = {CharRange{0, c_start}, CharRange{c_start, s_start}, CharRange{s_start, n}};
  return r;
}

}  // namespace

std::string pairs_to_jsonl(const std::vector<MinimalPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    const json j = {{"rel_id", p.rel_id},
                    {"gold", to_string(p.gold)},
                    {"connector_abbrev", p.connector_abbrev},
                    {"r_plus", reading_json(p.plus)},
                    {"r_minus", reading_json(p.minus)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<MinimalPair> pairs_from_jsonl(std::string_view jsonl) {
  std::vector<MinimalPair> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    MinimalPair p;
    p.rel_id = j.at("rel_id").get<std::string>();
    p.gold = parse_label(j.at("gold").get<std::string>());
    p.connector_abbrev = j.at("connector_abbrev").get<std::string>();
    const Polarity plus_pol =
        p.gold == Label::support ? Polarity::support_marked : Polarity::attack_marked;
    const Polarity minus_pol =
        p.gold == Label::support ? Polarity::attack_marked : Polarity::support_marked;
    p.plus = reading_from_json(j.at("r_plus"), plus_pol);
    p.minus = reading_from_json(j.at("r_minus"), minus_pol);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace argrank
