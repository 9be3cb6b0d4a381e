#pragma once

// End-to-end orchestration behind the command line tool. Every command reads
// its predecessor's artifacts from the output directory and writes its own,
// together with a manifest recording the configuration hash and seeds.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "argrank/corpus.hpp"
#include "argrank/embedding.hpp"
#include "argrank/evaluation.hpp"
#include "argrank/reconstruction.hpp"
#include "argrank/training.hpp"

namespace argrank {

struct ProviderSettings {
  std::string kind = "reference";  // reference | elmo-style | test
  std::string endpoint = "http://127.0.0.1:8501/embed";
  std::size_t dim = 1024;
  std::size_t layers = 4;  // layers averaged by layered providers
  int timeout_seconds = 60;
  // test embedder
  std::uint64_t seed = 0;
  std::string signal_token;

  // Provider defaults for `kind` (elmo-style averages 3 layers, test uses d=32).
  static ProviderSettings defaults_for(const std::string& kind);
  void validate() const;
  /// Directory-safe name: the kind, plus the seed for the test embedder.
  std::string label() const;
};

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderSettings& settings);

/// Embeds both readings of every pair (OpenMP over pairs).
std::vector<TrainingPair> embed_pairs(std::span<const MinimalPair> pairs, const EmbeddingProvider& provider);

struct PipelineConfig {
  std::string corpus_dir;
  std::string split_table;  // defaults to <corpus_dir>/train-test-split.csv
  std::string output_dir = "out";
  ViewMode mode = ViewMode::essay_content;
  std::vector<std::string> connectors = {"AA", "AD", "MH", "YN"};
  ProviderSettings provider;
  std::optional<ProviderSettings> alt_provider;  // alt-embedder ablation column
  TrainConfig train;
  std::size_t hidden = 256;
  std::size_t heads = 4;
  bool use_coefficients = true;
  bool use_attention = true;
  EnsembleConfig ensemble;
  std::size_t dev_count = kDefaultDevCount;
  std::uint64_t split_seed = 13;
  SentencePolicy sentence_policy;
  int threads = 0;  // 0: OpenMP default

  /// Built-in defaults overlaid with a JSON document; unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string hash() const;  // of to_json()
  void validate() const;     // throws ConfigInvalid

  EncoderConfig encoder(const ProviderSettings& settings) const;
  std::string split_table_path() const;
  std::string variant() const;  // basic, -coeff, -att, -coeff-att
};

/// Progress lines go here (stderr in the tool, silent in tests).
using Logger = std::function<void(const std::string&)>;

struct PrepareSummary {
  CorpusStats stats;
  std::size_t train = 0, dev = 0, test = 0;
};
PrepareSummary cmd_prepare(const PipelineConfig& config, const Logger& log = {});

struct EmbedSummary {
  std::size_t texts = 0;  // readings embedded (cache hits included)
};
/// Builds minimal pairs for every configured connector (plus NO-DISC) and
/// fills the embedding cache of `provider` (the configured one by default).
EmbedSummary cmd_embed(const PipelineConfig& config, const Logger& log = {},
                       const std::optional<ProviderSettings>& provider = std::nullopt);

/// Trains `config.train.runs` runs for one connector from cached embeddings
/// only. Returns the run directory.
std::string cmd_train(const PipelineConfig& config, const std::string& connector, const Logger& log = {},
                      const std::optional<ProviderSettings>& provider = std::nullopt);

/// Evaluates every trained connector of the configured mode/provider/variant
/// and the vote ensemble; writes table CSVs and predictions.
std::vector<ReportRow> cmd_eval(const PipelineConfig& config, const Logger& log = {});

/// Ablation grid: connectors, vote and NO-DISC against basic / alt-embedder /
/// -coeff / -att.
AblationTable cmd_ablate(const PipelineConfig& config, const Logger& log = {});

/// Consolidates tables across modes and exports coefficient distributions.
void cmd_report(const PipelineConfig& config, const Logger& log = {});

// Artifact locations, relative to the output directory.
struct Layout {
  std::string root;
  std::string view(ViewMode mode) const;
  std::string split() const;
  std::string pairs(ViewMode mode, const std::string& connector) const;
  std::string cache(const ProviderSettings& provider) const;
  std::string runs(ViewMode mode, const std::string& provider_label, const std::string& variant,
                   const std::string& connector) const;
  std::string reports() const;
  std::string manifest(const std::string& command) const;
};

}  // namespace argrank
