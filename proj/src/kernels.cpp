#include "argrank/kernels.hpp"

#include <algorithm>
#include <exception>

#include "argrank/errors.hpp"

namespace argrank {
namespace {

// Loss of one pair and d(loss)/d(s+) (d/d(s-) is its negation).
std::pair<double, double> pair_term(double plus, double minus, const RankLossOptions& o) {
  const double raw = o.margin - plus + minus;
  if (o.hinge && raw <= 0.0) return {0.0, 0.0};
  return {raw, -1.0};
}

// Forward + backward of one pair, scaled by 1/batch_size.
double accumulate_pair(const TrainingPair& pair, const ModelParams& params,
                       const EncoderConfig& config, const RankLossOptions& options,
                       double inv_batch, ModelParams& grads, double& plus_score,
                       double& minus_score) {
  const auto [plus, minus] = forward_pair(pair, params, config);
  plus_score = plus.score;
  minus_score = minus.score;
  const auto [loss, d_plus] = pair_term(plus.score, minus.score, options);
  if (d_plus != 0.0) {
    backward_reading(plus, d_plus * inv_batch, config, grads);
    backward_reading(minus, -d_plus * inv_batch, config, grads);
  }
  return loss;
}

}  // namespace

BatchResult rank_loss_gradient_serial(std::span<const TrainingPair* const> batch,
                                      const ModelParams& params, const EncoderConfig& config,
                                      const RankLossOptions& options, ModelParams& grads) {
  if (batch.empty()) throw LengthMismatch("empty batch");
  grads.set_zero();
  BatchResult r;
  r.plus_scores.resize(batch.size());
  r.minus_scores.resize(batch.size());
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += accumulate_pair(*batch[i], params, config, options, inv, grads, r.plus_scores[i],
                             r.minus_scores[i]);
  r.loss = total * inv;
  return r;
}

BatchResult rank_loss_gradient(std::span<const TrainingPair* const> batch,
                               const ModelParams& params, const EncoderConfig& config,
                               const RankLossOptions& options, ModelParams& grads,
                               std::size_t chunks) {
  if (batch.empty()) throw LengthMismatch("empty batch");
  const std::size_t n = batch.size();
  chunks = std::clamp<std::size_t>(chunks, 1, n);
  BatchResult r;
  r.plus_scores.resize(n);
  r.minus_scores.resize(n);
  const double inv = 1.0 / static_cast<double>(n);

  std::vector<ModelParams> partial_grads(chunks, ModelParams::zeros_like(params));
  std::vector<double> partial_loss(chunks, 0.0);
  std::vector<std::exception_ptr> failures(chunks);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = n * static_cast<std::size_t>(c) / chunks;
    const std::size_t hi = n * (static_cast<std::size_t>(c) + 1) / chunks;
    try {
      for (std::size_t i = lo; i < hi; ++i)
        partial_loss[c] += accumulate_pair(*batch[i], params, config, options, inv,
                                           partial_grads[c], r.plus_scores[i], r.minus_scores[i]);
    } catch (...) {
      failures[c] = std::current_exception();
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  grads = std::move(partial_grads[0]);
  double total = partial_loss[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    grads += partial_grads[c];
    total += partial_loss[c];
  }
  r.loss = total * inv;
  return r;
}

std::vector<double> score_readings_serial(std::span<const EmbeddedReading* const> readings,
                                          const ModelParams& params, const EncoderConfig& config) {
  std::vector<double> out;
  out.reserve(readings.size());
  for (const auto* r : readings) out.push_back(score(*r, params, config));
  return out;
}

std::vector<double> score_readings(std::span<const EmbeddedReading* const> readings,
                                   const ModelParams& params, const EncoderConfig& config) {
  std::vector<double> out(readings.size());
  std::vector<std::exception_ptr> failures(readings.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(readings.size()); ++i) {
    try {
      out[i] = score(*readings[i], params, config);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

std::vector<PairScores> score_pairs(std::span<const TrainingPair> pairs, const ModelParams& params,
                                    const EncoderConfig& config) {
  std::vector<const EmbeddedReading*> readings;
  readings.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    readings.push_back(&p.support_marked());
    readings.push_back(&p.attack_marked());
  }
  const auto scores = score_readings(readings, params, config);
  std::vector<PairScores> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = {scores[2 * i], scores[2 * i + 1]};
  return out;
}

}  // namespace argrank
