#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include "argrank/kernels.hpp"
#include "oracle/finite_difference.hpp"
#include "test_support.hpp"

using namespace argrank;

namespace {

struct Fixture {
  EncoderConfig config;
  ModelParams params;
  std::vector<TrainingPair> pairs;
  std::vector<const TrainingPair*> batch;

  Fixture(std::size_t count, std::uint64_t seed, std::size_t d = 6, std::size_t hidden = 4,
          std::size_t heads = 2) {
    config.d_input = d;
    config.hidden = hidden;
    config.heads = heads;
    config.seed = seed;
    params = ModelParams::initialize(config);
    Rng rng(seed);
    testing::perturb(params, rng, 0.5);
    for (std::size_t i = 0; i < count; ++i)
      pairs.push_back(testing::random_pair(rng, 2 + rng.below(8), d,
                                           i % 3 == 0 ? Label::attack : Label::support));
    for (const auto& p : pairs) batch.push_back(&p);
  }
};

double max_abs_diff(const ModelParams& a, const ModelParams& b) {
  const auto ta = const_cast<ModelParams&>(a).tensors();
  const auto tb = const_cast<ModelParams&>(b).tensors();
  double m = 0.0;
  for (std::size_t g = 0; g < ta.size(); ++g)
    for (std::size_t k = 0; k < ta[g].size(); ++k) m = std::max(m, std::abs(ta[g].data[k] - tb[g].data[k]));
  return m;
}

}  // namespace

TEST_CASE("parallel loss and gradient agree with the serial reference") {
  for (std::size_t count : {1u, 5u, 17u, 64u}) {
    Fixture f(count, 100 + count);
    ModelParams gs = ModelParams::zeros_like(f.params), gp = gs;
    const auto rs = rank_loss_gradient_serial(f.batch, f.params, f.config, {}, gs);
    const auto rp = rank_loss_gradient(f.batch, f.params, f.config, {}, gp);
    CHECK(std::abs(rs.loss - rp.loss) < 1e-12);
    CHECK(rs.plus_scores == rp.plus_scores);
    CHECK(rs.minus_scores == rp.minus_scores);
    CHECK(max_abs_diff(gs, gp) < 1e-12);
  }
}

TEST_CASE("parallel gradient is bitwise independent of the thread count") {
  Fixture f(33, 7);
  const int saved = omp_get_max_threads();
  ModelParams reference;
  double reference_loss = 0.0;
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    ModelParams g = ModelParams::zeros_like(f.params);
    const auto r = rank_loss_gradient(f.batch, f.params, f.config, {}, g);
    if (threads == 1) {
      reference = g;
      reference_loss = r.loss;
    } else {
      CHECK(r.loss == reference_loss);
      CHECK(bitwise_equal(g, reference));
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("gradient buffer is overwritten, not accumulated") {
  Fixture f(4, 8);
  ModelParams g1 = ModelParams::zeros_like(f.params);
  rank_loss_gradient(f.batch, f.params, f.config, {}, g1);
  ModelParams g2 = g1;
  rank_loss_gradient(f.batch, f.params, f.config, {}, g2);
  CHECK(bitwise_equal(g1, g2));
}

TEST_CASE("hinge loss is zero with zero gradient once every pair clears the margin") {
  Fixture f(6, 9);
  RankLossOptions options;
  options.margin = -10.0;  // selu is bounded below by -1.758, so every pair clears this
  ModelParams g = ModelParams::zeros_like(f.params);
  const auto r = rank_loss_gradient(f.batch, f.params, f.config, options, g);
  CHECK(r.loss == 0.0);
  CHECK(max_abs_diff(g, ModelParams::zeros_like(f.params)) == 0.0);
}

TEST_CASE("loss values match the definition") {
  Fixture f(9, 10);
  for (bool hinge : {true, false}) {
    RankLossOptions options{1.0, hinge};
    ModelParams g = ModelParams::zeros_like(f.params);
    const auto r = rank_loss_gradient(f.batch, f.params, f.config, options, g);
    double expected = 0.0;
    for (std::size_t i = 0; i < f.pairs.size(); ++i) {
      CHECK(r.plus_scores[i] == score(f.pairs[i].plus, f.params, f.config));
      CHECK(r.minus_scores[i] == score(f.pairs[i].minus, f.params, f.config));
      const double raw = 1.0 - r.plus_scores[i] + r.minus_scores[i];
      expected += hinge ? std::max(0.0, raw) : raw;
    }
    CHECK(std::abs(r.loss - expected / 9.0) < 1e-14);
  }
}

TEST_CASE("multi-head gradients match central differences") {
  Fixture f(3, 11, 4, 4, 4);
  const auto errors = oracle::gradient_check(f.batch, f.params, f.config, {1.0, true});
  for (const auto& e : errors) {
    INFO(e.name << " rel " << e.relative_error << " abs " << e.absolute_error);
    CHECK(e.ok(1e-5));
  }
}

TEST_CASE("reading and pair scoring agree with single scores") {
  Fixture f(12, 12);
  std::vector<const EmbeddedReading*> readings;
  for (const auto& p : f.pairs) readings.push_back(&p.plus);
  const auto s = score_readings_serial(readings, f.params, f.config);
  const auto p = score_readings(readings, f.params, f.config);
  CHECK(s == p);
  const auto ps = score_pairs(f.pairs, f.params, f.config);
  for (std::size_t i = 0; i < f.pairs.size(); ++i) {
    const auto& pair = f.pairs[i];
    const double sup = score(pair.support_marked(), f.params, f.config);
    const double att = score(pair.attack_marked(), f.params, f.config);
    CHECK(ps[i].support == sup);
    CHECK(ps[i].attack == att);
  }
}
