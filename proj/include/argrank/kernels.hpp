#pragma once

#include <span>
#include <vector>

#include "argrank/model.hpp"

namespace argrank {

struct RankLossOptions {
  double margin = 1.0;
  // false: the unclamped form 1/n * sum(margin - s+ + s-)
  bool hinge = true;
};

struct BatchResult {
  double loss = 0.0;  // mean over the batch
  std::vector<double> plus_scores;
  std::vector<double> minus_scores;
};

/// Serial reference: mean rank loss of `batch` and its gradient, accumulated
/// pair by pair into `grads` (which is overwritten).
BatchResult rank_loss_gradient_serial(std::span<const TrainingPair* const> batch,
                                      const ModelParams& params, const EncoderConfig& config,
                                      const RankLossOptions& options, ModelParams& grads);

/// OpenMP version. The batch is cut into `chunks` fixed slices, each reduced
/// serially and then summed in slice order, so the result is bitwise
/// independent of the thread count.
BatchResult rank_loss_gradient(std::span<const TrainingPair* const> batch,
                               const ModelParams& params, const EncoderConfig& config,
                               const RankLossOptions& options, ModelParams& grads,
                               std::size_t chunks = 8);

std::vector<double> score_readings_serial(std::span<const EmbeddedReading* const> readings,
                                          const ModelParams& params, const EncoderConfig& config);

std::vector<double> score_readings(std::span<const EmbeddedReading* const> readings,
                                   const ModelParams& params, const EncoderConfig& config);

struct PairScores {
  double support = 0.0;  // score of the support-marked reading
  double attack = 0.0;
};

/// Scores both readings of every pair (OpenMP over pairs).
std::vector<PairScores> score_pairs(std::span<const TrainingPair> pairs, const ModelParams& params,
                                    const EncoderConfig& config);

}  // namespace argrank
