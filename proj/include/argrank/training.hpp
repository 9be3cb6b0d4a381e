#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "argrank/evaluation.hpp"
#include "argrank/kernels.hpp"
#include "argrank/model.hpp"

namespace argrank {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 25;
  double margin = 1.0;
  std::size_t runs = 5;
  std::uint64_t seed_base = 13;
  bool hinge = true;
  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // slices of the parallel gradient reduction; part of the numeric contract
  std::size_t reduction_chunks = 8;

  RankLossOptions loss_options() const { return {margin, hinge}; }
  void validate() const;  // throws ConfigInvalid
};

/// Mean of max(0, margin - s+ + s-) (or the unclamped term). Throws
/// LengthMismatch on unequal or empty batches.
double rank_loss(std::span<const double> plus, std::span<const double> minus, double margin, bool hinge);

class Adam {
 public:
  Adam(const ModelParams& like, const TrainConfig& config);
  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return steps_; }

 private:
  ModelParams m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  std::size_t steps_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;    // mean per-pair loss seen during the epoch (epoch 0: at init)
  double dev_macro_f1 = 0.0;  // percent
  double wall_seconds = 0.0;
};

struct Checkpoint {
  ModelParams params;  // float32-rounded, as stored on disk
  EncoderConfig encoder;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double dev_macro_f1 = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochRecord> history;  // epochs 0..max_epochs
};

using EpochObserver = std::function<void(const EpochRecord&, const ModelParams&)>;

/// Seeded Adam training on the rank loss; after every epoch the dev set is
/// classified and the epoch with the highest dev macro F1 is kept (earliest
/// on ties; epoch 0 is the initialization). Throws NonFiniteLoss.
TrainResult train_run(std::span<const TrainingPair> train, std::span<const TrainingPair> dev,
                      const EncoderConfig& encoder, const TrainConfig& config, std::uint64_t seed,
                      const EpochObserver& observer = {});

/// epoch,train_loss,dev_macro_f1,wall_seconds for epochs >= 1.
std::string training_log_csv(std::span<const EpochRecord> history);

/// Fraction (0..1) of pairs with score(r+) > score(r-).
double pair_ranking_accuracy(std::span<const TrainingPair> pairs, const ModelParams& params,
                             const EncoderConfig& config);

struct RunOutcome {
  std::uint64_t seed = 0;
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
  std::vector<Prediction> test_predictions;
  MetricsReport test;
};

struct RunResult {
  std::vector<RunOutcome> runs;
  AggregateReport aggregate;
};

/// `config.runs` runs with seeds seed_base, seed_base + 1, ...; each selected
/// checkpoint is evaluated on `test`.
RunResult multi_run(std::span<const TrainingPair> train, std::span<const TrainingPair> dev,
                    std::span<const TrainingPair> test, const EncoderConfig& encoder,
                    const TrainConfig& config, const std::string& connector_abbrev,
                    const std::function<void(std::size_t run, const EpochRecord&)>& progress = {});

// ---------------------------------------------------------------------------
// Checkpoint files: `<stem>.bin` holds one tensor container record per
// parameter tensor (ModelParams::tensors() order), `<stem>.json` the manifest.

void save_checkpoint(const Checkpoint& checkpoint, const std::string& stem);
/// Throws MissingArtifact, CorruptEntry, ShapeMismatch.
Checkpoint load_checkpoint(const std::string& stem);

}  // namespace argrank
