#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "argrank/corpus.hpp"
#include "argrank/model.hpp"

namespace argrank {

struct Prediction {
  std::string rel_id;
  Label predicted = Label::support;
  double score_support = 0.0;
  double score_attack = 0.0;
  std::string connector_abbrev;

  double margin() const { return score_support - score_attack; }
  bool operator==(const Prediction&) const = default;
};

/// Support wins ties.
inline Label decide(double score_support, double score_attack) {
  return score_support >= score_attack ? Label::support : Label::attack;
}

Prediction classify(const TrainingPair& pair, const ModelParams& params, const EncoderConfig& config,
                    const std::string& connector_abbrev);

/// Scores every pair in parallel; output order follows `pairs`.
std::vector<Prediction> classify_all(std::span<const TrainingPair> pairs, const ModelParams& params,
                                     const EncoderConfig& config, const std::string& connector_abbrev);

// ---------------------------------------------------------------------------
// Ensemble

enum class TieRule { sum_margin, majority_class };
std::string_view to_string(TieRule rule);
TieRule parse_tie_rule(std::string_view s);

struct EnsembleConfig {
  std::vector<std::string> members = {"A/A", "A/D", "M/H", "Y/N"};
  TieRule tie_rule = TieRule::sum_margin;
};

inline constexpr std::string_view kVoteName = "vote";

/// One prediction per configured member, all for the same relation. On a
/// tie, sum_margin sums score_support - score_attack (>= 0 -> support) and
/// majority_class predicts support. Throws MemberMismatch.
Prediction vote(std::span<const Prediction> members, const EnsembleConfig& config);

/// `per_member[k]` holds member k's predictions; relations are matched by id.
std::vector<Prediction> vote_all(const std::vector<std::vector<Prediction>>& per_member,
                                 const EnsembleConfig& config);

// ---------------------------------------------------------------------------
// Metrics (percent)

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct MetricsReport {
  ClassMetrics support;
  ClassMetrics attack;
  double macro_f1 = 0.0;
  // confusion[gold][predicted], indexed by Label
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t total = 0;
};

/// 0/0 conventions: precision 0 with no predicted positives, recall 0 with no
/// gold positives, F1 0 when P + R = 0. Throws MissingPrediction unless the
/// predictions cover the gold ids exactly once each.
MetricsReport compute_metrics(std::span<const Prediction> predictions,
                              const std::map<std::string, Label>& gold);

MetricsReport metrics_from_confusion(const std::array<std::array<std::size_t, 2>, 2>& confusion);

std::map<std::string, Label> gold_labels(std::span<const TrainingPair> pairs);
std::map<std::string, Label> gold_labels(const CorpusView& view);

/// All-support predictions for every gold id.
std::vector<Prediction> majority_predictions(const std::map<std::string, Label>& gold);

// ---------------------------------------------------------------------------
// Aggregation over runs

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

/// "60.7±1.7"
std::string format_cell(const MeanStd& m);

struct AggregateReport {
  MeanStd macro_f1;
  MeanStd support_precision, support_recall, support_f1;
  MeanStd attack_precision, attack_recall, attack_f1;
};

AggregateReport aggregate(std::span<const MetricsReport> runs);

// ---------------------------------------------------------------------------
// Tables

/// One system/mode row of the results tables.
struct ReportRow {
  std::string system;
  std::string mode;
  AggregateReport report;
};

/// system, mode, macro F1 (mean±std).
std::string macro_table_csv(std::span<const ReportRow> rows);

/// system, mode, then P/R/F1 for support and attack, then macro F1.
std::string class_table_csv(std::span<const ReportRow> rows);

struct AblationResult {
  std::string row;     // connector code, "vote" or "NODISC"
  std::string column;  // basic, alt-embedder, -coeff, -att
  std::vector<double> macro_f1_runs;
};

struct AblationTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, MeanStd> cells;
};

/// Rows and columns keep a canonical order (AA, AD, MH, YN, vote, NODISC;
/// basic, alt-embedder, -coeff, -att), unknown names follow in input order.
/// Missing cells are left empty in the CSV.
AblationTable ablation_grid(std::span<const AblationResult> results);
std::string ablation_csv(const AblationTable& table);

// ---------------------------------------------------------------------------
// Coefficient analysis

/// dim, c_target, c_source, c_connector
std::string coefficients_csv(const ModelParams& params);

struct Distribution {
  std::string name;
  double mean = 0.0, std = 0.0, min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

std::vector<Distribution> coefficient_summaries(const ModelParams& params);
std::string summaries_csv(const std::vector<Distribution>& summaries);

/// Standalone SVG scatter of coefficient `x` against coefficient `y`.
std::string coefficient_scatter_svg(const ModelParams& params, SpanTag x, SpanTag y);

// ---------------------------------------------------------------------------
// Serialization

std::string predictions_to_jsonl(std::span<const Prediction> predictions);
std::vector<Prediction> predictions_from_jsonl(std::string_view jsonl);

}  // namespace argrank
