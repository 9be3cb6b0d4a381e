#include "argrank/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/kernels.hpp"
#include "argrank/util.hpp"

namespace argrank {

using json = nlohmann::json;

Prediction classify(const TrainingPair& pair, const ModelParams& params, const EncoderConfig& config,
                    const std::string& connector_abbrev) {
  Prediction p;
  p.rel_id = pair.rel_id;
  p.score_support = score(pair.support_marked(), params, config);
  p.score_attack = score(pair.attack_marked(), params, config);
  p.predicted = decide(p.score_support, p.score_attack);
  p.connector_abbrev = connector_abbrev;
  return p;
}

std::vector<Prediction> classify_all(std::span<const TrainingPair> pairs, const ModelParams& params,
                                     const EncoderConfig& config, const std::string& connector_abbrev) {
  const auto scores = score_pairs(pairs, params, config);
  std::vector<Prediction> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i].rel_id = pairs[i].rel_id;
    out[i].score_support = scores[i].support;
    out[i].score_attack = scores[i].attack;
    out[i].predicted = decide(scores[i].support, scores[i].attack);
    out[i].connector_abbrev = connector_abbrev;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(TieRule rule) {
  return rule == TieRule::sum_margin ? "sum_margin" : "majority_class";
}

TieRule parse_tie_rule(std::string_view s) {
  if (s == "sum_margin") return TieRule::sum_margin;
  if (s == "majority_class") return TieRule::majority_class;
  throw ConfigInvalid("unknown tie rule '" + std::string(s) + "'");
}

Prediction vote(std::span<const Prediction> members, const EnsembleConfig& config) {
  if (members.size() != config.members.size() || members.empty())
    throw MemberMismatch("vote expects " + std::to_string(config.members.size()) + " members, got " +
                         std::to_string(members.size()));
  std::multiset<std::string> want(config.members.begin(), config.members.end());
  std::multiset<std::string> got;
  for (const auto& m : members) {
    if (m.rel_id != members[0].rel_id)
      throw MemberMismatch("vote over different relations: " + members[0].rel_id + " vs " + m.rel_id);
    got.insert(m.connector_abbrev);
  }
  if (got != want) throw MemberMismatch("vote members do not match the ensemble configuration");

  std::size_t support = 0;
  double margin = 0.0, sum_support = 0.0, sum_attack = 0.0;
  for (const auto& m : members) {
    support += m.predicted == Label::support;
    margin += m.margin();
    sum_support += m.score_support;
    sum_attack += m.score_attack;
  }
  const std::size_t attack = members.size() - support;

  Prediction out;
  out.rel_id = members[0].rel_id;
  out.connector_abbrev = std::string(kVoteName);
  out.score_support = sum_support / static_cast<double>(members.size());
  out.score_attack = sum_attack / static_cast<double>(members.size());
  if (support != attack)
    out.predicted = support > attack ? Label::support : Label::attack;
  else if (config.tie_rule == TieRule::sum_margin)
    out.predicted = margin >= 0.0 ? Label::support : Label::attack;
  else
    out.predicted = Label::support;
  return out;
}

std::vector<Prediction> vote_all(const std::vector<std::vector<Prediction>>& per_member,
                                 const EnsembleConfig& config) {
  if (per_member.size() != config.members.size())
    throw MemberMismatch("expected predictions of " + std::to_string(config.members.size()) + " members");
  std::vector<std::map<std::string, const Prediction*>> index(per_member.size());
  for (std::size_t k = 0; k < per_member.size(); ++k) {
    if (per_member[k].size() != per_member[0].size())
      throw MemberMismatch("members predicted different numbers of relations");
    for (const auto& p : per_member[k]) index[k][p.rel_id] = &p;
  }
  std::vector<Prediction> out;
  out.reserve(per_member.empty() ? 0 : per_member[0].size());
  std::vector<Prediction> row(per_member.size());
  for (const auto& first : per_member[0]) {
    for (std::size_t k = 0; k < per_member.size(); ++k) {
      const auto it = index[k].find(first.rel_id);
      if (it == index[k].end()) throw MemberMismatch("member lacks a prediction for " + first.rel_id);
      row[k] = *it->second;
    }
    out.push_back(vote(row, config));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = percent(tp, tp + fp);
  m.recall = percent(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace

MetricsReport metrics_from_confusion(const std::array<std::array<std::size_t, 2>, 2>& c) {
  constexpr int S = static_cast<int>(Label::support), A = static_cast<int>(Label::attack);
  MetricsReport r;
  r.confusion = c;
  r.total = c[S][S] + c[S][A] + c[A][S] + c[A][A];
  r.support = class_metrics(c[S][S], c[A][S], c[S][A]);
  r.attack = class_metrics(c[A][A], c[S][A], c[A][S]);
  r.macro_f1 = (r.support.f1 + r.attack.f1) / 2.0;
  return r;
}

MetricsReport compute_metrics(std::span<const Prediction> predictions,
                              const std::map<std::string, Label>& gold) {
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    const auto it = gold.find(p.rel_id);
    if (it == gold.end()) throw MissingPrediction("no gold label for prediction " + p.rel_id);
    if (!seen.insert(p.rel_id).second) throw MissingPrediction("duplicate prediction for " + p.rel_id);
    ++confusion[static_cast<int>(it->second)][static_cast<int>(p.predicted)];
  }
  if (seen.size() != gold.size()) {
    for (const auto& [id, label] : gold)
      if (!seen.contains(id)) throw MissingPrediction("no prediction for " + id);
  }
  return metrics_from_confusion(confusion);
}

std::map<std::string, Label> gold_labels(std::span<const TrainingPair> pairs) {
  std::map<std::string, Label> out;
  for (const auto& p : pairs) out[p.rel_id] = p.gold;
  return out;
}

std::map<std::string, Label> gold_labels(const CorpusView& view) {
  std::map<std::string, Label> out;
  for (const auto& i : view.instances) out[i.rel_id] = i.label;
  return out;
}

std::vector<Prediction> majority_predictions(const std::map<std::string, Label>& gold) {
  std::vector<Prediction> out;
  out.reserve(gold.size());
  for (const auto& [id, label] : gold) out.push_back({id, Label::support, 0.0, 0.0, "majority"});
  return out;
}

// ---------------------------------------------------------------------------

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::string format_cell(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f±%.1f", m.mean, m.std);
  return buf;
}

AggregateReport aggregate(std::span<const MetricsReport> runs) {
  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(field(r));
    return mean_std(v);
  };
  AggregateReport a;
  a.macro_f1 = collect([](const MetricsReport& r) { return r.macro_f1; });
  a.support_precision = collect([](const MetricsReport& r) { return r.support.precision; });
  a.support_recall = collect([](const MetricsReport& r) { return r.support.recall; });
  a.support_f1 = collect([](const MetricsReport& r) { return r.support.f1; });
  a.attack_precision = collect([](const MetricsReport& r) { return r.attack.precision; });
  a.attack_recall = collect([](const MetricsReport& r) { return r.attack.recall; });
  a.attack_f1 = collect([](const MetricsReport& r) { return r.attack.f1; });
  return a;
}

// ---------------------------------------------------------------------------

std::string macro_table_csv(std::span<const ReportRow> rows) {
  std::string out = "system,mode,macro_f1\n";
  for (const auto& r : rows) out += r.system + "," + r.mode + "," + format_cell(r.report.macro_f1) + "\n";
  return out;
}

std::string class_table_csv(std::span<const ReportRow> rows) {
  std::string out =
      "system,mode,support_precision,support_recall,support_f1,attack_precision,attack_recall,attack_f1,"
      "macro_f1\n";
  for (const auto& r : rows) {
    const auto& a = r.report;
    out += r.system + "," + r.mode;
    for (const auto* m : {&a.support_precision, &a.support_recall, &a.support_f1, &a.attack_precision,
                          &a.attack_recall, &a.attack_f1, &a.macro_f1})
      out += "," + format_cell(*m);
    out += "\n";
  }
  return out;
}

namespace {

void order_by(std::vector<std::string>& names, const std::vector<std::string>& canonical) {
  std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    const auto ia = std::find(canonical.begin(), canonical.end(), a) - canonical.begin();
    const auto ib = std::find(canonical.begin(), canonical.end(), b) - canonical.begin();
    return ia < ib;
  });
}

}  // namespace

AblationTable ablation_grid(std::span<const AblationResult> results) {
  AblationTable t;
  for (const auto& r : results) {
    if (std::find(t.rows.begin(), t.rows.end(), r.row) == t.rows.end()) t.rows.push_back(r.row);
    if (std::find(t.columns.begin(), t.columns.end(), r.column) == t.columns.end())
      t.columns.push_back(r.column);
    t.cells[{r.row, r.column}] = mean_std(r.macro_f1_runs);
  }
  order_by(t.rows, {"AA", "AD", "MH", "YN", std::string(kVoteName), "NODISC"});
  order_by(t.columns, {"basic", "alt-embedder", "-coeff", "-att"});
  return t;
}

std::string ablation_csv(const AblationTable& table) {
  if (table.rows.empty()) return "";
  std::string out = "system";
  for (const auto& c : table.columns) out += "," + c;
  out += "\n";
  for (const auto& r : table.rows) {
    out += r;
    for (const auto& c : table.columns) {
      const auto it = table.cells.find({r, c});
      out += ",";
      if (it != table.cells.end()) out += format_cell(it->second);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string coefficient_name(SpanTag tag) {
  std::string name = "c_" + std::string(to_string(tag));
  for (char& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return name;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// linear interpolation between order statistics
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string coefficients_csv(const ModelParams& params) {
  const auto& c = params.coefficients;
  constexpr auto T = static_cast<int>(SpanTag::target), C = static_cast<int>(SpanTag::connector),
                 S = static_cast<int>(SpanTag::source);
  std::string out = "dim,c_target,c_source,c_connector\n";
  for (Eigen::Index j = 0; j < c[T].size(); ++j)
    out += std::to_string(j) + "," + num(c[T][j]) + "," + num(c[S][j]) + "," + num(c[C][j]) + "\n";
  return out;
}

std::vector<Distribution> coefficient_summaries(const ModelParams& params) {
  std::vector<Distribution> out;
  for (SpanTag tag : {SpanTag::target, SpanTag::source, SpanTag::connector}) {
    const Vector& c = params.coefficients[static_cast<int>(tag)];
    std::vector<double> v(c.data(), c.data() + c.size());
    const MeanStd ms = mean_std(v);
    std::sort(v.begin(), v.end());
    Distribution d;
    d.name = coefficient_name(tag);
    d.mean = ms.mean;
    d.std = ms.std;
    d.min = v.empty() ? 0.0 : v.front();
    d.max = v.empty() ? 0.0 : v.back();
    d.q25 = quantile(v, 0.25);
    d.median = quantile(v, 0.5);
    d.q75 = quantile(v, 0.75);
    out.push_back(d);
  }
  return out;
}

std::string summaries_csv(const std::vector<Distribution>& summaries) {
  std::string out = "vector,mean,std,min,q25,median,q75,max\n";
  for (const auto& d : summaries)
    out += d.name + "," + num(d.mean) + "," + num(d.std) + "," + num(d.min) + "," + num(d.q25) + "," +
           num(d.median) + "," + num(d.q75) + "," + num(d.max) + "\n";
  return out;
}

std::string coefficient_scatter_svg(const ModelParams& params, SpanTag x, SpanTag y) {
  const Vector& xs = params.coefficients[static_cast<int>(x)];
  const Vector& ys = params.coefficients[static_cast<int>(y)];
  double lo = std::min(xs.minCoeff(), ys.minCoeff());
  double hi = std::max(xs.maxCoeff(), ys.maxCoeff());
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  constexpr double size = 400.0, pad = 40.0;
  auto px = [&](double v) { return pad + (v - lo) / (hi - lo) * (size - 2 * pad); };
  auto py = [&](double v) { return size - pad - (v - lo) / (hi - lo) * (size - 2 * pad); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n"
      << "<rect width=\"400\" height=\"400\" fill=\"white\"/>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << size - pad << "\" x2=\"" << size - pad << "\" y2=\""
      << size - pad << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << size - pad
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"200\" y=\"392\" text-anchor=\"middle\" font-size=\"12\">" << coefficient_name(x) << "</text>\n"
      << "<text x=\"12\" y=\"200\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 200)\">"
      << coefficient_name(y) << "</text>\n"
      << "<text x=\"" << pad << "\" y=\"" << size - pad + 14 << "\" font-size=\"10\">" << num(lo) << "</text>\n"
      << "<text x=\"" << size - pad << "\" y=\"" << size - pad + 14 << "\" font-size=\"10\" text-anchor=\"end\">"
      << num(hi) << "</text>\n";
  for (Eigen::Index j = 0; j < xs.size(); ++j)
    svg << "<circle cx=\"" << num(px(xs[j])) << "\" cy=\"" << num(py(ys[j]))
        << "\" r=\"1.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

// ---------------------------------------------------------------------------

std::string predictions_to_jsonl(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    json j = {{"rel_id", p.rel_id},
              {"predicted", to_string(p.predicted)},
              {"score_support", p.score_support},
              {"score_attack", p.score_attack},
              {"connector_abbrev", p.connector_abbrev}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> predictions_from_jsonl(std::string_view jsonl) {
  std::vector<Prediction> out;
  std::size_t line_no = 0;
  for (const auto& line : split(jsonl, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("rel_id").get<std::string>(), parse_label(j.at("predicted").get<std::string>()),
                     j.at("score_support").get<double>(), j.at("score_attack").get<double>(),
                     j.at("connector_abbrev").get<std::string>()});
    } catch (const json::exception& e) {
      throw MalformedLine("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace argrank
