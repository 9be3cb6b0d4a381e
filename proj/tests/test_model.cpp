#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "argrank/errors.hpp"
#include "argrank/model.hpp"
#include "oracle/finite_difference.hpp"
#include "oracle/reference_model.hpp"
#include "test_support.hpp"

using namespace argrank;

namespace {

EncoderConfig tiny_config(std::size_t d = 4, std::size_t hidden = 3, std::size_t heads = 1) {
  EncoderConfig c;
  c.d_input = d;
  c.hidden = hidden;
  c.heads = heads;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("coefficients at initialization are the identity") {
  Rng rng(1);
  const auto cfg = tiny_config();
  const auto params = ModelParams::initialize(cfg);
  const auto reading = testing::random_reading(rng, 5, cfg.d_input);
  const Matrix x = testing::to_double(reading);
  CHECK((apply_coefficients(x, reading.tags, params).array() == x.array()).all());
}

TEST_CASE("source coefficient scales source rows elementwise") {
  Rng rng(2);
  const auto cfg = tiny_config();
  auto params = ModelParams::initialize(cfg);
  params.coefficients[static_cast<int>(SpanTag::source)] *= 2.0;
  const auto reading = testing::random_reading(rng, 6, cfg.d_input);
  const Matrix x = testing::to_double(reading);
  const Matrix y = apply_coefficients(x, reading.tags, params);
  for (std::size_t t = 0; t < reading.tags.size(); ++t) {
    const double factor = reading.tags[t] == SpanTag::source ? 2.0 : 1.0;
    CHECK(((y.row(t) - factor * x.row(t)).array() == 0.0).all());
  }
  std::vector<SpanTag> short_tags(3, SpanTag::target);
  CHECK_THROWS_AS(apply_coefficients(x, short_tags, params), ShapeMismatch);
}

TEST_CASE("recurrent encoder shapes") {
  Rng rng(3);
  EncoderConfig cfg = tiny_config(8, 256, 4);
  const auto params = ModelParams::initialize(cfg);
  const auto one = testing::random_reading(rng, 1, 8);
  const Matrix h = encode_recurrent(testing::to_double(one), params);
  CHECK(h.rows() == 1);
  CHECK(h.cols() == 512);
}

TEST_CASE("zero recurrent weights give zero states") {
  Rng rng(4);
  const auto cfg = tiny_config();
  auto params = ModelParams::initialize(cfg);
  for (auto* l : {&params.forward_lstm, &params.backward_lstm}) {
    l->input_weights.setZero();
    l->recurrent_weights.setZero();
    l->bias.setZero();
  }
  const Matrix h = encode_recurrent(testing::to_double(testing::random_reading(rng, 5, 4)), params);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reversing the input and swapping directions reverses the states") {
  Rng rng(5);
  const auto cfg = tiny_config(4, 3, 1);
  for (int trial = 0; trial < 5; ++trial) {
    auto params = ModelParams::initialize(cfg);
    testing::perturb(params, rng);
    const Matrix x = testing::to_double(testing::random_reading(rng, 2 + trial, 4));
    const Matrix xr = x.colwise().reverse();
    ModelParams swapped = params;
    std::swap(swapped.forward_lstm, swapped.backward_lstm);
    const Matrix h = encode_recurrent(x, params);
    const Matrix hr = encode_recurrent(xr, swapped);
    const Eigen::Index n = x.rows(), half = 3;
    for (Eigen::Index t = 0; t < n; ++t) {
      CHECK((hr.row(t).head(half) - h.row(n - 1 - t).tail(half)).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((hr.row(t).tail(half) - h.row(n - 1 - t).head(half)).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("self-attention over a single position copies the value projection") {
  Rng rng(6);
  const auto cfg = tiny_config(4, 4, 2);
  auto params = ModelParams::initialize(cfg);
  Matrix h(1, 8);
  for (Eigen::Index j = 0; j < 8; ++j) h(0, j) = rng.uniform(-1, 1);
  const auto tr = self_attention(h, params);
  Matrix expected(1, 8);
  expected << h * params.value[0], h * params.value[1];
  CHECK(tr.weights[0](0, 0) == 1.0);
  CHECK((tr.output - expected * params.output_projection).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero query projections give uniform attention") {
  Rng rng(7);
  const auto cfg = tiny_config(4, 4, 2);
  auto params = ModelParams::initialize(cfg);
  for (auto& q : params.query) q.setZero();
  Matrix h(5, 8);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.uniform(-1, 1);
  const auto tr = self_attention(h, params);
  for (std::size_t k = 0; k < 2; ++k) {
    const Matrix v = h * params.value[k];
    const RowVector mean = v.colwise().mean();
    for (Eigen::Index i = 0; i < 5; ++i)
      CHECK((tr.concatenated.row(i).segment(static_cast<Eigen::Index>(k) * 4, 4) - mean).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("self-attention matches the dense oracle (n=3, width 4, 2 heads)") {
  Rng rng(8);
  const auto cfg = tiny_config(4, 2, 2);  // d_model = 4
  auto params = ModelParams::initialize(cfg);
  testing::perturb(params, rng, 0.5);
  Matrix h(3, 4);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.uniform(-2, 2);
  const auto got = self_attention(h, params).output;
  const auto want = oracle::attention_ref(oracle::to_mat(h), params);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(got(i, j) - want[i][j]) < 1e-10);
}

TEST_CASE("attention and pooling rows are stochastic") {
  Rng rng(9);
  const auto cfg = tiny_config(6, 4, 4);
  for (int trial = 0; trial < 20; ++trial) {
    auto params = ModelParams::initialize(cfg);
    testing::perturb(params, rng, 1.0);
    const auto reading = testing::random_reading(rng, 1 + rng.below(9), 6);
    const auto tr = forward_reading(testing::to_double(reading), reading.tags, params, cfg);
    for (const auto& w : tr.attention.weights)
      for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-9);
    CHECK(std::abs(tr.pool.weights.sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("attention pooling") {
  Rng rng(10);
  Matrix s(4, 3);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-1, 1);
  SUBCASE("equal logits average the rows") {
    const auto r = attention_pool(s, Vector::Zero(3));
    CHECK((r.pooled.transpose() - s.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("single row passes through") {
    const Matrix one = s.topRows(1);
    const auto r = attention_pool(one, Vector::Ones(3));
    CHECK((r.pooled.transpose() - one).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("selu plausibility") {
  Vector v(2), w(2);
  v << 0.0, 0.0;
  w << 1.0, 1.0;
  CHECK(plausibility(v, w) == 0.0);
  v << 0.25, 0.75;
  CHECK(std::abs(plausibility(v, w) - kSeluLambda) < 1e-12);
  CHECK(std::abs(selu(1.0) - 1.0507009873554805) < 1e-15);
  CHECK(std::abs(selu(-50.0) + kSeluLambda * kSeluAlpha) < 1e-12);
  CHECK(std::abs(kSeluLambda * kSeluAlpha - 1.7580993408473766) < 1e-12);
  CHECK(selu(-std::numeric_limits<double>::infinity()) == doctest::Approx(-1.7580993408473766));
}

TEST_CASE("full forward pass matches the straight-line oracle") {
  Rng rng(12);
  for (bool att : {true, false}) {
    for (bool coeff : {true, false}) {
      EncoderConfig cfg = tiny_config(5, 3, 2);
      cfg.use_attention = att;
      cfg.use_coefficients = coeff;
      auto params = ModelParams::initialize(cfg);
      testing::perturb(params, rng, 0.4);
      const auto reading = testing::random_reading(rng, 3, 5);
      const Matrix x = testing::to_double(reading);
      const double got = forward_reading(x, reading.tags, params, cfg).score;
      const double want = oracle::score_ref(oracle::to_mat(x), reading.tags, params, coeff, att);
      CHECK(std::abs(got - want) < 1e-12);
    }
  }
}

TEST_CASE("scoring is deterministic and stateless") {
  Rng rng(13);
  const auto cfg = tiny_config(6, 4, 2);
  const auto params = ModelParams::initialize(cfg);
  const auto pair = testing::random_pair(rng, 7, 6);
  const double a1 = score(pair.plus, params, cfg);
  const double b1 = score(pair.minus, params, cfg);
  const double b2 = score(pair.minus, params, cfg);
  const double a2 = score(pair.plus, params, cfg);
  CHECK(a1 == a2);
  CHECK(b1 == b2);
}

TEST_CASE("both readings of a pair use the same parameter object") {
  Rng rng(14);
  const auto cfg = tiny_config();
  const auto params = ModelParams::initialize(cfg);
  const auto pair = testing::random_pair(rng, 5, 4);
  const auto tr = forward_pair(pair, params, cfg);
  CHECK(tr.plus.params == &params);
  CHECK(tr.minus.params == &params);
}

TEST_CASE("without attention the head reads the last states of both directions") {
  Rng rng(15);
  EncoderConfig cfg = tiny_config(4, 3, 1);
  cfg.use_attention = false;
  auto params = ModelParams::initialize(cfg);
  const auto reading = testing::random_reading(rng, 6, 4);
  const auto tr = forward_reading(testing::to_double(reading), reading.tags, params, cfg);
  Vector expected(6);
  expected << tr.states.row(5).head(3).transpose(), tr.states.row(0).tail(3).transpose();
  CHECK((tr.reading - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.score == selu(expected.dot(params.output)));
}

TEST_CASE("coefficient ablation is invisible at initialization") {
  Rng rng(16);
  EncoderConfig basic = tiny_config(8, 4, 2);
  EncoderConfig no_coeff = basic;
  no_coeff.use_coefficients = false;
  const auto params = ModelParams::initialize(basic);
  for (int i = 0; i < 10; ++i) {
    const auto r = testing::random_reading(rng, 2 + i, 8);
    CHECK(score(r, params, basic) == score(r, params, no_coeff));
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(17);
  for (bool att : {true, false}) {
    for (bool hinge : {true, false}) {
      EncoderConfig cfg = tiny_config(4, 3, 1);
      cfg.use_attention = att;
      auto params = ModelParams::initialize(cfg);
      testing::perturb(params, rng, 0.6);
      std::vector<TrainingPair> pairs;
      for (std::size_t n = 3; n <= 5; ++n) pairs.push_back(testing::random_pair(rng, n, 4));
      std::vector<const TrainingPair*> batch;
      for (const auto& p : pairs) batch.push_back(&p);
      const auto errors = oracle::gradient_check(batch, params, cfg, {1.0, hinge});
      for (const auto& e : errors) {
        if (!att && (e.name.rfind("attn", 0) == 0 || e.name == "pool")) {
          CHECK(e.analytic_norm == 0.0);
          continue;
        }
        INFO(e.name << " rel err " << e.relative_error << " norm " << e.analytic_norm);
        CHECK(e.analytic_norm > 0.0);
        CHECK(e.ok(1e-5));
      }
    }
  }
}

TEST_CASE("invalid shapes are rejected") {
  EncoderConfig cfg = tiny_config(4, 3, 4);  // width 6 over 4 heads
  CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
}
