#include "argrank/pipeline.hpp"

#include <exception>
#include <filesystem>
#include <map>
#include <set>

#include <omp.h>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Providers

ProviderSettings ProviderSettings::defaults_for(const std::string& kind) {
  ProviderSettings s;
  s.kind = kind;
  if (kind == "elmo-style") s.layers = 3;
  if (kind == "test") s.dim = 32;
  return s;
}

void ProviderSettings::validate() const {
  if (kind != "reference" && kind != "elmo-style" && kind != "test")
    throw ConfigInvalid("unknown provider '" + kind + "' (expected reference, elmo-style or test)");
  if (dim == 0) throw ConfigInvalid("provider dim must be positive");
  if (kind != "test" && layers == 0) throw ConfigInvalid("provider layers must be positive");
  if (kind != "test" && endpoint.rfind("http://", 0) != 0)
    throw ConfigInvalid("provider endpoint must be an http:// URL");
}

std::string ProviderSettings::label() const {
  return kind == "test" ? "test-s" + std::to_string(seed) : kind;
}

namespace {

// Serves from the cache only; training must not reach the embedding service.
class CacheOnlyProvider final : public EmbeddingProvider {
 public:
  CacheOnlyProvider(std::shared_ptr<const EmbeddingProvider> inner, EmbeddingCache cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  using EmbeddingProvider::embed;
  std::string id() const override { return inner_->id(); }
  std::string layer_policy() const override { return inner_->layer_policy(); }
  std::size_t dim() const override { return inner_->dim(); }
  TokenEmbeddingSequence embed(std::string_view text, const SpanRanges&) const override {
    const CacheKey key = cache_key(id(), layer_policy(), text);
    auto hit = cache_.read(key);
    if (!hit) throw MissingArtifact("no cached embedding for '" + std::string(text.substr(0, 60)) +
                                    "...' in " + cache_.dir() + "; run `argrank embed` first");
    if (hit->dim() != dim()) throw DimensionMismatch("cached entry " + key.hex + " has the wrong width");
    return *std::move(hit);
  }

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  EmbeddingCache cache_;
};

}  // namespace

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderSettings& s) {
  s.validate();
  if (s.kind == "test") return deterministic_test_embedder(s.seed, s.dim, s.signal_token);
  auto client = std::make_shared<HttpLayerClient>(s.endpoint, s.timeout_seconds);
  return std::make_shared<LayeredProvider>(client, s.kind, s.dim, s.layers);
}

std::vector<TrainingPair> embed_pairs(std::span<const MinimalPair> pairs, const EmbeddingProvider& provider) {
  std::vector<TrainingPair> out(pairs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
    try {
      const auto& mp = pairs[static_cast<std::size_t>(i)];
      auto& tp = out[static_cast<std::size_t>(i)];
      tp.rel_id = mp.rel_id;
      tp.gold = mp.gold;
      tp.plus = to_embedded(provider.embed(mp.plus));
      tp.minus = to_embedded(provider.embed(mp.minus));
    } catch (...) {
#pragma omp critical(argrank_embed_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

json provider_json(const ProviderSettings& s) {
  return {{"kind", s.kind},     {"endpoint", s.endpoint}, {"dim", s.dim},
          {"layers", s.layers}, {"timeout_seconds", s.timeout_seconds}, {"seed", s.seed},
          {"signal_token", s.signal_token}};
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigInvalid(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigInvalid("unknown configuration key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ProviderSettings provider_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"kind", "endpoint", "dim", "layers", "timeout_seconds", "seed", "signal_token"}, where);
  ProviderSettings s = ProviderSettings::defaults_for(j.value("kind", std::string("reference")));
  read(j, "endpoint", s.endpoint);
  read(j, "dim", s.dim);
  read(j, "layers", s.layers);
  read(j, "timeout_seconds", s.timeout_seconds);
  read(j, "seed", s.seed);
  read(j, "signal_token", s.signal_token);
  return s;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    reject_unknown(j,
                   {"corpus_dir", "split_table", "output_dir", "mode", "connectors", "provider", "alt_provider",
                    "train", "model", "ensemble", "split", "sentence_policy", "threads"},
                   "");
    read(j, "corpus_dir", c.corpus_dir);
    read(j, "split_table", c.split_table);
    read(j, "output_dir", c.output_dir);
    if (j.contains("mode")) c.mode = parse_view_mode(j.at("mode").get<std::string>());
    read(j, "connectors", c.connectors);
    if (j.contains("provider")) c.provider = provider_from_json(j.at("provider"), "provider.");
    if (j.contains("alt_provider") && !j.at("alt_provider").is_null())
      c.alt_provider = provider_from_json(j.at("alt_provider"), "alt_provider.");
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t,
                     {"learning_rate", "batch_size", "max_epochs", "margin", "runs", "seed_base", "hinge",
                      "beta1", "beta2", "epsilon", "reduction_chunks"},
                     "train.");
      read(t, "learning_rate", c.train.learning_rate);
      read(t, "batch_size", c.train.batch_size);
      read(t, "max_epochs", c.train.max_epochs);
      read(t, "margin", c.train.margin);
      read(t, "runs", c.train.runs);
      read(t, "seed_base", c.train.seed_base);
      read(t, "hinge", c.train.hinge);
      read(t, "beta1", c.train.beta1);
      read(t, "beta2", c.train.beta2);
      read(t, "epsilon", c.train.epsilon);
      read(t, "reduction_chunks", c.train.reduction_chunks);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m, {"hidden", "heads", "use_coefficients", "use_attention"}, "model.");
      read(m, "hidden", c.hidden);
      read(m, "heads", c.heads);
      read(m, "use_coefficients", c.use_coefficients);
      read(m, "use_attention", c.use_attention);
    }
    if (j.contains("ensemble")) {
      const auto& e = j.at("ensemble");
      reject_unknown(e, {"members", "tie_rule"}, "ensemble.");
      read(e, "members", c.ensemble.members);
      if (e.contains("tie_rule")) c.ensemble.tie_rule = parse_tie_rule(e.at("tie_rule").get<std::string>());
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"dev_count", "seed"}, "split.");
      read(s, "dev_count", c.dev_count);
      read(s, "seed", c.split_seed);
    }
    if (j.contains("sentence_policy")) {
      const auto& s = j.at("sentence_policy");
      reject_unknown(s, {"extend_to_sentence", "abbreviations"}, "sentence_policy.");
      read(s, "extend_to_sentence", c.sentence_policy.extend_to_sentence);
      read(s, "abbreviations", c.sentence_policy.abbreviations);
    }
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("configuration: ") + e.what());
  }
  return c;
}

json PipelineConfig::to_json() const {
  return {{"corpus_dir", corpus_dir},
          {"split_table", split_table},
          {"output_dir", output_dir},
          {"mode", to_string(mode)},
          {"connectors", connectors},
          {"provider", provider_json(provider)},
          {"alt_provider", alt_provider ? provider_json(*alt_provider) : json(nullptr)},
          {"train",
           {{"learning_rate", train.learning_rate},
            {"batch_size", train.batch_size},
            {"max_epochs", train.max_epochs},
            {"margin", train.margin},
            {"runs", train.runs},
            {"seed_base", train.seed_base},
            {"hinge", train.hinge},
            {"beta1", train.beta1},
            {"beta2", train.beta2},
            {"epsilon", train.epsilon},
            {"reduction_chunks", train.reduction_chunks}}},
          {"model",
           {{"hidden", hidden},
            {"heads", heads},
            {"use_coefficients", use_coefficients},
            {"use_attention", use_attention}}},
          {"ensemble", {{"members", ensemble.members}, {"tie_rule", to_string(ensemble.tie_rule)}}},
          {"split", {{"dev_count", dev_count}, {"seed", split_seed}}},
          {"sentence_policy",
           {{"extend_to_sentence", sentence_policy.extend_to_sentence},
            {"abbreviations", sentence_policy.abbreviations}}},
          {"threads", threads}};
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

void PipelineConfig::validate() const {
  if (output_dir.empty()) throw ConfigInvalid("output_dir is empty");
  if (connectors.empty()) throw ConfigInvalid("no connectors configured");
  for (const auto& c : connectors) find_connector(c);
  for (const auto& m : ensemble.members) find_connector(m);
  provider.validate();
  if (alt_provider) alt_provider->validate();
  train.validate();
  encoder(provider).validate();
  if (threads < 0) throw ConfigInvalid("threads must be >= 0");
}

EncoderConfig PipelineConfig::encoder(const ProviderSettings& settings) const {
  EncoderConfig e;
  e.d_input = settings.dim;
  e.hidden = hidden;
  e.heads = heads;
  e.use_coefficients = use_coefficients;
  e.use_attention = use_attention;
  return e;
}

std::string PipelineConfig::split_table_path() const {
  if (!split_table.empty()) return split_table;
  return (fs::path(corpus_dir) / "train-test-split.csv").string();
}

std::string PipelineConfig::variant() const {
  if (use_coefficients && use_attention) return "basic";
  std::string v;
  if (!use_coefficients) v += "-coeff";
  if (!use_attention) v += "-att";
  return v;
}

// ---------------------------------------------------------------------------
// Layout

std::string Layout::view(ViewMode mode) const {
  return root + "/prepare/view." + std::string(to_string(mode)) + ".jsonl";
}
std::string Layout::split() const { return root + "/prepare/split.json"; }
std::string Layout::pairs(ViewMode mode, const std::string& connector) const {
  return root + "/pairs/" + std::string(to_string(mode)) + "/" + connector + ".jsonl";
}
std::string Layout::cache(const ProviderSettings& provider) const { return root + "/cache/" + provider.label(); }
std::string Layout::runs(ViewMode mode, const std::string& provider_label, const std::string& variant,
                         const std::string& connector) const {
  return root + "/runs/" + std::string(to_string(mode)) + "/" + provider_label + "/" + variant + "/" + connector;
}
std::string Layout::reports() const { return root + "/reports"; }
std::string Layout::manifest(const std::string& command) const { return root + "/manifests/" + command + ".json"; }

// ---------------------------------------------------------------------------

namespace {

void say(const Logger& log, const std::string& line) {
  if (log) log(line);
}

void apply_threads(const PipelineConfig& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
}

void ensure_parent(const std::string& path) { fs::create_directories(fs::path(path).parent_path()); }

void write_artifact(const std::string& path, std::string_view contents, json& artifacts, const std::string& root) {
  ensure_parent(path);
  write_file_atomic(path, contents);
  artifacts[fs::relative(path, root).generic_string()] = hex64(fnv1a64(contents));
}

void write_manifest(const PipelineConfig& config, const std::string& path, const std::string& command,
                    const json& seeds, const json& artifacts) {
  const json m = {{"command", command},
                  {"config", config.to_json()},
                  {"config_hash", config.hash()},
                  {"seeds", seeds},
                  {"artifacts", artifacts}};
  ensure_parent(path);
  write_file_atomic(path, m.dump(2) + "\n");
}

std::string read_predecessor(const std::string& path, const char* command) {
  if (!fs::exists(path)) throw MissingArtifact(path + " does not exist; run `argrank " + command + "` first");
  return read_file(path);
}

CorpusView load_view(const Layout& layout, ViewMode mode) {
  return view_from_jsonl(read_predecessor(layout.view(mode), "prepare"));
}

DataSplit load_split(const Layout& layout) { return split_from_json(read_predecessor(layout.split(), "prepare")); }

std::vector<MinimalPair> load_pairs(const Layout& layout, ViewMode mode, const std::string& code) {
  return pairs_from_jsonl(read_predecessor(layout.pairs(mode, code), "embed"));
}

struct Partition {
  std::vector<TrainingPair> train, dev, test;
};

Partition partition(std::vector<TrainingPair> pairs, const DataSplit& split) {
  const std::set<std::string> train(split.train.begin(), split.train.end());
  const std::set<std::string> dev(split.dev.begin(), split.dev.end());
  const std::set<std::string> test(split.test.begin(), split.test.end());
  Partition p;
  for (auto& tp : pairs) {
    if (train.contains(tp.rel_id))
      p.train.push_back(std::move(tp));
    else if (dev.contains(tp.rel_id))
      p.dev.push_back(std::move(tp));
    else if (test.contains(tp.rel_id))
      p.test.push_back(std::move(tp));
    else
      throw MissingPrediction("relation " + tp.rel_id + " is in no split partition");
  }
  return p;
}

std::vector<MinimalPair> select(const std::vector<MinimalPair>& pairs, const std::vector<std::string>& keys) {
  const std::set<std::string> want(keys.begin(), keys.end());
  std::vector<MinimalPair> out;
  for (const auto& p : pairs)
    if (want.contains(p.rel_id)) out.push_back(p);
  return out;
}

std::shared_ptr<const EmbeddingProvider> cache_only(const Layout& layout, const ProviderSettings& s) {
  return std::make_shared<CacheOnlyProvider>(make_provider(s), EmbeddingCache(layout.cache(s)));
}

std::vector<std::string> connectors_with_nodisc(const PipelineConfig& config) {
  std::vector<std::string> out;
  for (const auto& c : config.connectors) out.push_back(find_connector(c).code);
  if (std::find(out.begin(), out.end(), "NODISC") == out.end()) out.push_back("NODISC");
  return out;
}

std::string run_stem(const std::string& dir, std::size_t k) { return dir + "/run" + std::to_string(k); }

// Per-run test metrics of one trained system.
struct SystemRuns {
  std::string system;
  std::vector<std::vector<Prediction>> predictions;  // per run
  std::vector<MetricsReport> metrics;
};

std::map<std::string, SystemRuns> evaluate_variant(const PipelineConfig& config, const ProviderSettings& provider,
                                                   const Logger& log) {
  const Layout layout{config.output_dir};
  const DataSplit split = load_split(layout);
  const auto gold = gold_labels(load_view(layout, config.mode));
  std::map<std::string, Label> test_gold;
  for (const auto& key : split.test) test_gold[key] = gold.at(key);
  const auto embedder = cache_only(layout, provider);

  std::map<std::string, SystemRuns> out;
  for (const auto& code : connectors_with_nodisc(config)) {
    const std::string dir = layout.runs(config.mode, provider.label(), config.variant(), code);
    if (!fs::exists(dir + "/summary.json")) {
      say(log, "eval: no trained runs for " + code + " in " + dir + ", skipping");
      continue;
    }
    const auto& pair = find_connector(code);
    const auto test_pairs = embed_pairs(select(load_pairs(layout, config.mode, code), split.test), *embedder);
    const json summary = json::parse(read_file(dir + "/summary.json"));
    const std::size_t runs = summary.at("runs").size();
    SystemRuns sr;
    sr.system = "ArgRanker_" + pair.abbreviation;
    for (std::size_t k = 0; k < runs; ++k) {
      const Checkpoint cp = load_checkpoint(run_stem(dir, k));
      sr.predictions.push_back(classify_all(test_pairs, cp.params, cp.encoder, pair.abbreviation));
      sr.metrics.push_back(compute_metrics(sr.predictions.back(), test_gold));
    }
    say(log, "eval: " + sr.system + " macro F1 " + format_cell(aggregate(sr.metrics).macro_f1));
    out[code] = std::move(sr);
  }
  if (out.empty())
    throw MissingArtifact("no trained connectors under " + layout.root + "/runs; run `argrank train` first");

  // vote over the ensemble members, run by run
  std::vector<std::string> member_codes;
  for (const auto& m : config.ensemble.members) member_codes.push_back(find_connector(m).code);
  bool complete = true;
  std::size_t runs = SIZE_MAX;
  for (const auto& code : member_codes) {
    const auto it = out.find(code);
    if (it == out.end()) {
      complete = false;
      break;
    }
    runs = std::min(runs, it->second.predictions.size());
  }
  if (complete) {
    SystemRuns vr;
    vr.system = std::string(kVoteName);
    for (std::size_t k = 0; k < runs; ++k) {
      std::vector<std::vector<Prediction>> members;
      for (const auto& code : member_codes) members.push_back(out[code].predictions[k]);
      vr.predictions.push_back(vote_all(members, config.ensemble));
      vr.metrics.push_back(compute_metrics(vr.predictions.back(), test_gold));
    }
    say(log, "eval: vote macro F1 " + format_cell(aggregate(vr.metrics).macro_f1));
    out[std::string(kVoteName)] = std::move(vr);
  } else {
    say(log, "eval: ensemble members incomplete, no vote row");
  }

  SystemRuns majority;
  majority.system = "majority";
  majority.predictions.push_back(majority_predictions(test_gold));
  majority.metrics.push_back(compute_metrics(majority.predictions.back(), test_gold));
  out["majority"] = std::move(majority);
  return out;
}

// Display order: majority, connectors in configured order, NO-DISC, vote.
std::vector<std::string> system_order(const PipelineConfig& config) {
  std::vector<std::string> order = {"majority"};
  for (const auto& c : connectors_with_nodisc(config)) order.push_back(c);
  order.push_back(std::string(kVoteName));
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

PrepareSummary cmd_prepare(const PipelineConfig& config, const Logger& log) {
  config.validate();
  apply_threads(config);
  if (config.corpus_dir.empty()) throw ConfigInvalid("corpus_dir is not set");
  if (!fs::is_directory(config.corpus_dir))
    throw ConfigInvalid("corpus_dir '" + config.corpus_dir + "' is not a directory");
  if (!fs::exists(config.split_table_path()))
    throw ConfigInvalid("split table '" + config.split_table_path() + "' does not exist");

  const Layout layout{config.output_dir};
  const auto docs = load_corpus_dir(config.corpus_dir);
  const auto table = read_split_table(config.split_table_path());
  for (const auto& d : docs)
    if (!table.contains(d.doc_id)) throw MissingArtifact("split table has no row for " + d.doc_id);
  const DataSplit split = make_split(docs, test_documents(table), config.dev_count, config.split_seed);

  json artifacts = json::object();
  for (ViewMode mode : {ViewMode::essay, ViewMode::essay_content})
    write_artifact(layout.view(mode), view_to_jsonl(build_view(docs, mode, config.sentence_policy)), artifacts,
                   layout.root);
  write_artifact(layout.split(), split_to_json(split), artifacts, layout.root);

  PrepareSummary s{corpus_stats(docs), split.train.size(), split.dev.size(), split.test.size()};
  const json stats = {{"essays", s.stats.essays},       {"units", s.stats.units},
                      {"relations", s.stats.relations}, {"support", s.stats.support},
                      {"attack", s.stats.attack},       {"support_fraction", s.stats.support_fraction},
                      {"train", s.train},               {"dev", s.dev},
                      {"test", s.test}};
  write_artifact(layout.root + "/prepare/stats.json", stats.dump(2) + "\n", artifacts, layout.root);
  write_manifest(config, layout.manifest("prepare"), "prepare", {{"split", config.split_seed}}, artifacts);
  say(log, "prepare: " + std::to_string(s.stats.essays) + " essays, " + std::to_string(s.stats.relations) +
               " relations (train " + std::to_string(s.train) + ", dev " + std::to_string(s.dev) + ", test " +
               std::to_string(s.test) + ")");
  return s;
}

EmbedSummary cmd_embed(const PipelineConfig& config, const Logger& log,
                       const std::optional<ProviderSettings>& provider_override) {
  config.validate();
  apply_threads(config);
  const Layout layout{config.output_dir};
  const ProviderSettings settings = provider_override.value_or(config.provider);
  const CorpusView view = load_view(layout, config.mode);
  auto provider = std::make_shared<CachedProvider>(make_provider(settings), EmbeddingCache(layout.cache(settings)));

  EmbedSummary s;
  json artifacts = json::object();
  for (const auto& code : connectors_with_nodisc(config)) {
    const auto pairs = build_minimal_pairs(view, find_connector(code));
    write_artifact(layout.pairs(config.mode, code), pairs_to_jsonl(pairs), artifacts, layout.root);
    embed_pairs(pairs, *provider);
    s.texts += 2 * pairs.size();
    say(log, "embed: " + code + " " + std::to_string(pairs.size()) + " pairs with " + settings.label());
  }
  write_manifest(config, layout.manifest("embed." + std::string(to_string(config.mode)) + "." + settings.label()),
                 "embed", {{"provider_seed", settings.seed}}, artifacts);
  return s;
}

std::string cmd_train(const PipelineConfig& config, const std::string& connector, const Logger& log,
                      const std::optional<ProviderSettings>& provider_override) {
  config.validate();
  apply_threads(config);
  const Layout layout{config.output_dir};
  const ProviderSettings settings = provider_override.value_or(config.provider);
  const ConnectorPair& pair = find_connector(connector);
  const DataSplit split = load_split(layout);
  const auto minimal = load_pairs(layout, config.mode, pair.code);
  Partition data = partition(embed_pairs(minimal, *cache_only(layout, settings)), split);
  if (data.train.empty() || data.dev.empty() || data.test.empty())
    throw SplitInfeasible("train, dev and test must all be non-empty (" + std::to_string(data.train.size()) +
                          "/" + std::to_string(data.dev.size()) + "/" + std::to_string(data.test.size()) + ")");

  const std::string dir = layout.runs(config.mode, settings.label(), config.variant(), pair.code);
  fs::create_directories(dir);
  say(log, "train: " + pair.abbreviation + " " + std::string(to_string(config.mode)) + " " + settings.label() +
               " " + config.variant() + ", " + std::to_string(data.train.size()) + " train pairs, " +
               std::to_string(config.train.runs) + " runs");

  const RunResult result = multi_run(
      data.train, data.dev, data.test, config.encoder(settings), config.train, pair.abbreviation,
      [&](std::size_t run, const EpochRecord& r) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "train: run %zu epoch %zu loss %.5f dev F1 %.2f (%.1fs)", run, r.epoch,
                      r.train_loss, r.dev_macro_f1, r.wall_seconds);
        say(log, buf);
      });

  json artifacts = json::object();
  json runs = json::array();
  json seeds = json::array();
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    const auto& run = result.runs[k];
    const std::string stem = run_stem(dir, k);
    save_checkpoint(run.checkpoint, stem);
    for (const char* ext : {".bin", ".json"})
      artifacts[fs::relative(stem + ext, layout.root).generic_string()] = hex64(fnv1a64(read_file(stem + ext)));
    // wall-clock column: the only artifact that is not bitwise reproducible
    ensure_parent(stem);
    write_file_atomic(stem + ".log.csv", training_log_csv(run.history));
    write_artifact(stem + ".test.jsonl", predictions_to_jsonl(run.test_predictions), artifacts, layout.root);
    runs.push_back({{"seed", run.seed},
                    {"epoch", run.checkpoint.epoch},
                    {"dev_macro_f1", run.checkpoint.dev_macro_f1},
                    {"test_macro_f1", run.test.macro_f1}});
    seeds.push_back(run.seed);
  }
  const json summary = {{"connector", pair.abbreviation},
                        {"mode", to_string(config.mode)},
                        {"provider", settings.label()},
                        {"variant", config.variant()},
                        {"runs", runs},
                        {"test_macro_f1", format_cell(result.aggregate.macro_f1)}};
  write_artifact(dir + "/summary.json", summary.dump(2) + "\n", artifacts, layout.root);
  write_manifest(config, dir + "/manifest.json", "train " + pair.code, seeds, artifacts);
  say(log, "train: " + pair.abbreviation + " test macro F1 " + format_cell(result.aggregate.macro_f1));
  return dir;
}

std::vector<ReportRow> cmd_eval(const PipelineConfig& config, const Logger& log) {
  config.validate();
  apply_threads(config);
  const Layout layout{config.output_dir};
  auto systems = evaluate_variant(config, config.provider, log);

  const std::string dir = layout.reports() + "/" + std::string(to_string(config.mode)) + "/" +
                          config.provider.label() + "/" + config.variant();
  json artifacts = json::object();
  std::vector<ReportRow> rows;
  json metrics = json::array();
  for (const auto& key : system_order(config)) {
    const auto it = systems.find(key);
    if (it == systems.end()) continue;
    const auto& sr = it->second;
    rows.push_back({sr.system, std::string(to_string(config.mode)), aggregate(sr.metrics)});
    json per_run = json::array();
    for (std::size_t k = 0; k < sr.metrics.size(); ++k) {
      const auto& m = sr.metrics[k];
      per_run.push_back({{"macro_f1", m.macro_f1},
                         {"support", {m.support.precision, m.support.recall, m.support.f1}},
                         {"attack", {m.attack.precision, m.attack.recall, m.attack.f1}},
                         {"confusion", m.confusion}});
      if (key != "majority")
        write_artifact(dir + "/predictions/" + key + ".run" + std::to_string(k) + ".jsonl",
                       predictions_to_jsonl(sr.predictions[k]), artifacts, layout.root);
    }
    metrics.push_back({{"system", sr.system}, {"runs", per_run}});
  }
  write_artifact(dir + "/macro_f1.csv", macro_table_csv(rows), artifacts, layout.root);
  write_artifact(dir + "/class_metrics.csv", class_table_csv(rows), artifacts, layout.root);
  write_artifact(dir + "/metrics.json", metrics.dump(2) + "\n", artifacts, layout.root);
  write_manifest(config,
                 layout.manifest("eval." + std::string(to_string(config.mode)) + "." + config.provider.label() +
                                 "." + config.variant()),
                 "eval", {{"seed_base", config.train.seed_base}, {"runs", config.train.runs}}, artifacts);
  return rows;
}

AblationTable cmd_ablate(const PipelineConfig& config, const Logger& log) {
  config.validate();
  struct Column {
    std::string name;
    PipelineConfig cfg;
  };
  std::vector<Column> columns;
  PipelineConfig basic = config;
  basic.use_coefficients = basic.use_attention = true;
  columns.push_back({"basic", basic});
  if (config.alt_provider) {
    PipelineConfig alt = basic;
    alt.provider = *config.alt_provider;
    columns.push_back({"alt-embedder", alt});
  } else {
    say(log, "ablate: no alt_provider configured, skipping the alt-embedder column");
  }
  PipelineConfig no_coeff = basic;
  no_coeff.use_coefficients = false;
  columns.push_back({"-coeff", no_coeff});
  PipelineConfig no_att = basic;
  no_att.use_attention = false;
  columns.push_back({"-att", no_att});

  std::vector<AblationResult> results;
  for (const auto& col : columns) {
    cmd_embed(col.cfg, log);  // cache hits unless the provider is new
    for (const auto& code : connectors_with_nodisc(col.cfg)) cmd_train(col.cfg, code, log);
    const auto systems = evaluate_variant(col.cfg, col.cfg.provider, log);
    for (const auto& [key, sr] : systems) {
      if (key == "majority") continue;
      AblationResult r{key, col.name, {}};
      for (const auto& m : sr.metrics) r.macro_f1_runs.push_back(m.macro_f1);
      results.push_back(std::move(r));
    }
  }
  const AblationTable table = ablation_grid(results);
  const Layout layout{config.output_dir};
  json artifacts = json::object();
  write_artifact(layout.reports() + "/ablation." + std::string(to_string(config.mode)) + ".csv",
                 ablation_csv(table), artifacts, layout.root);
  write_manifest(config, layout.manifest("ablate." + std::string(to_string(config.mode))), "ablate",
                 {{"seed_base", config.train.seed_base}, {"runs", config.train.runs}}, artifacts);
  return table;
}

void cmd_report(const PipelineConfig& config, const Logger& log) {
  config.validate();
  const Layout layout{config.output_dir};
  if (!fs::is_directory(layout.reports()))
    throw MissingArtifact("no reports under " + layout.reports() + "; run `argrank eval` first");

  // Table CSVs of every evaluated mode / provider / variant, in path order.
  std::vector<fs::path> tables;
  for (const auto& e : fs::recursive_directory_iterator(layout.reports()))
    if (e.is_regular_file() && e.path().filename() == "macro_f1.csv" &&
        fs::relative(e.path(), layout.reports()).begin()->string() != "macro_f1.csv")
      tables.push_back(e.path());
  std::sort(tables.begin(), tables.end());

  json artifacts = json::object();
  for (const char* name : {"macro_f1.csv", "class_metrics.csv"}) {
    std::string merged;
    for (const auto& t : tables) {
      const auto rel = fs::relative(t.parent_path(), layout.reports());
      std::string provider_variant;
      auto it = rel.begin();
      ++it;  // mode
      for (; it != rel.end(); ++it) provider_variant += (provider_variant.empty() ? "" : "/") + it->string();
      const auto lines = split(read_file((t.parent_path() / name).string()), '\n');
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        if (i == 0) {
          if (merged.empty()) merged = "setup," + lines[i] + "\n";
          continue;
        }
        merged += provider_variant + "," + lines[i] + "\n";
      }
    }
    write_artifact(layout.reports() + "/" + name, merged, artifacts, layout.root);
  }

  // coefficient exports: run 0 of every trained system
  std::size_t exported = 0;
  if (fs::is_directory(layout.root + "/runs")) {
    std::vector<fs::path> checkpoints;
    for (const auto& e : fs::recursive_directory_iterator(layout.root + "/runs"))
      if (e.is_regular_file() && e.path().filename() == "run0.bin") checkpoints.push_back(e.path());
    std::sort(checkpoints.begin(), checkpoints.end());
    for (const auto& bin : checkpoints) {
      const Checkpoint cp = load_checkpoint((bin.parent_path() / "run0").string());
      std::string tag;
      for (const auto& part : fs::relative(bin.parent_path(), layout.root + "/runs"))
        tag += (tag.empty() ? "" : "_") + part.string();
      const std::string base = layout.reports() + "/coefficients/" + tag;
      write_artifact(base + ".csv", coefficients_csv(cp.params), artifacts, layout.root);
      write_artifact(base + ".summary.csv", summaries_csv(coefficient_summaries(cp.params)), artifacts,
                     layout.root);
      write_artifact(base + ".target_source.svg",
                     coefficient_scatter_svg(cp.params, SpanTag::target, SpanTag::source), artifacts, layout.root);
      write_artifact(base + ".target_connector.svg",
                     coefficient_scatter_svg(cp.params, SpanTag::target, SpanTag::connector), artifacts,
                     layout.root);
      ++exported;
    }
  }
  write_manifest(config, layout.manifest("report"), "report", json::object(), artifacts);
  say(log, "report: " + std::to_string(tables.size()) + " evaluated setups, " + std::to_string(exported) +
               " coefficient exports");
}

}  // namespace argrank
