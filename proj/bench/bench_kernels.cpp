// Serial reference against the OpenMP kernels on one minibatch.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "argrank/kernels.hpp"
#include "argrank/util.hpp"

using namespace argrank;

namespace {

struct Setup {
  EncoderConfig config;
  ModelParams params;
  std::vector<TrainingPair> pairs;
  std::vector<const TrainingPair*> batch;
  std::vector<const EmbeddedReading*> readings;

  // model width and sentence lengths scaled down from the full model so one run stays short
  Setup(std::size_t d, std::size_t hidden, std::size_t count) {
    config.d_input = d;
    config.hidden = hidden;
    config.heads = 4;
    config.seed = 3;
    params = ModelParams::initialize(config);
    Rng rng(17);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t n = 12 + rng.below(20);
      TrainingPair p;
      p.rel_id = "b:" + std::to_string(i);
      p.gold = i % 3 ? Label::support : Label::attack;
      p.plus.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < p.plus.matrix.size(); ++k)
        p.plus.matrix.data()[k] = static_cast<float>(rng.uniform(-1.0, 1.0));
      for (std::size_t t = 0; t < n; ++t)
        p.plus.tags.push_back(t < n / 2 ? SpanTag::target : t == n / 2 ? SpanTag::connector : SpanTag::source);
      p.minus = p.plus;
      p.minus.matrix.row(static_cast<Eigen::Index>(n / 2)).setConstant(0.5f);
      pairs.push_back(std::move(p));
    }
    for (const auto& p : pairs) {
      batch.push_back(&p);
      readings.push_back(&p.plus);
      readings.push_back(&p.minus);
    }
  }
};

const Setup& setup() {
  static const Setup s(128, 64, 64);
  return s;
}

void BM_RankLossGradientSerial(benchmark::State& state) {
  const auto& s = setup();
  ModelParams grads = ModelParams::zeros_like(s.params);
  for (auto _ : state) {
    auto r = rank_loss_gradient_serial(s.batch, s.params, s.config, {}, grads);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.batch.size()));
}

void BM_RankLossGradientParallel(benchmark::State& state) {
  const auto& s = setup();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  ModelParams grads = ModelParams::zeros_like(s.params);
  for (auto _ : state) {
    auto r = rank_loss_gradient(s.batch, s.params, s.config, {}, grads);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.batch.size()));
}

void BM_ScoreReadingsSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(score_readings_serial(s.readings, s.params, s.config));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.readings.size()));
}

void BM_ScoreReadingsParallel(benchmark::State& state) {
  const auto& s = setup();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(score_readings(s.readings, s.params, s.config));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.readings.size()));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int max = omp_get_num_procs();
  for (int t = 1; t <= max; t *= 2) b->Arg(t);
  if ((max & (max - 1)) != 0) b->Arg(max);
}

}  // namespace

BENCHMARK(BM_RankLossGradientSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RankLossGradientParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScoreReadingsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScoreReadingsParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
