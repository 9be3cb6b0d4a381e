#include "argrank/model.hpp"

#include <cmath>
#include <cstring>

#include "argrank/errors.hpp"
#include "argrank/util.hpp"

namespace argrank {

double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double selu_derivative(double x) {
  return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

void EncoderConfig::validate() const {
  if (d_input == 0) throw ConfigInvalid("d_input must be positive");
  if (hidden == 0) throw ConfigInvalid("hidden size must be positive");
  if (heads == 0 || d_model() % heads != 0)
    throw ConfigInvalid("model width " + std::to_string(d_model()) + " is not divisible by " +
                        std::to_string(heads) + " heads");
}

namespace {

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Vector uniform_vector(Rng& rng, std::size_t n, double bound) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
  return v;
}

LstmParams init_lstm(Rng& rng, std::size_t d, std::size_t h) {
  LstmParams p;
  p.input_weights = uniform_matrix(rng, d, 4 * h, 1.0 / std::sqrt(static_cast<double>(d)));
  p.recurrent_weights = uniform_matrix(rng, h, 4 * h, 1.0 / std::sqrt(static_cast<double>(h)));
  p.bias = Vector::Zero(static_cast<Eigen::Index>(4 * h));
  return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ModelParams ModelParams::initialize(const EncoderConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t d = config.d_input, h = config.hidden, dm = config.d_model(),
                    dk = config.d_head();
  ModelParams p;
  for (auto& c : p.coefficients) c = Vector::Ones(static_cast<Eigen::Index>(d));
  p.forward_lstm = init_lstm(rng, d, h);
  p.backward_lstm = init_lstm(rng, d, h);
  const double proj = 1.0 / std::sqrt(static_cast<double>(dm));
  for (std::size_t k = 0; k < config.heads; ++k) {
    p.query.push_back(uniform_matrix(rng, dm, dk, proj));
    p.key.push_back(uniform_matrix(rng, dm, dk, proj));
    p.value.push_back(uniform_matrix(rng, dm, dk, proj));
  }
  p.output_projection = uniform_matrix(rng, dm, dm, proj);
  p.pooling = uniform_vector(rng, dm, proj);
  p.output = uniform_vector(rng, dm, proj);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p = other;
  p.set_zero();
  return p;
}

std::vector<ModelParams::TensorView> ModelParams::tensors() {
  std::vector<TensorView> out;
  auto add_m = [&](std::string name, Matrix& m) { out.push_back({std::move(name), m.data(), m.rows(), m.cols()}); };
  auto add_v = [&](std::string name, Vector& v) { out.push_back({std::move(name), v.data(), 1, v.size()}); };
  add_v("coeff.target", coefficients[0]);
  add_v("coeff.connector", coefficients[1]);
  add_v("coeff.source", coefficients[2]);
  for (auto* dir : {&forward_lstm, &backward_lstm}) {
    const std::string prefix = dir == &forward_lstm ? "lstm.fwd." : "lstm.bwd.";
    add_m(prefix + "input", dir->input_weights);
    add_m(prefix + "recurrent", dir->recurrent_weights);
    add_v(prefix + "bias", dir->bias);
  }
  for (std::size_t k = 0; k < query.size(); ++k) {
    const std::string head = "attn.head" + std::to_string(k) + ".";
    add_m(head + "query", query[k]);
    add_m(head + "key", key[k]);
    add_m(head + "value", value[k]);
  }
  add_m("attn.output", output_projection);
  add_v("pool", pooling);
  add_v("score", output);
  return out;
}

std::vector<ModelParams::ConstTensorView> ModelParams::tensors() const {
  std::vector<ConstTensorView> out;
  for (const auto& t : const_cast<ModelParams*>(this)->tensors())
    out.push_back({t.name, t.data, t.rows, t.cols});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), 0.0);
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  auto mine = tensors();
  const auto theirs = other.tensors();
  if (mine.size() != theirs.size()) throw ShapeMismatch("parameter sets differ");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].size() != theirs[i].size()) throw ShapeMismatch("tensor " + mine[i].name);
    for (std::size_t k = 0; k < mine[i].size(); ++k) mine[i].data[k] += theirs[i].data[k];
  }
  return *this;
}

void ModelParams::round_to_float() {
  for (auto& t : tensors())
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] = static_cast<float>(t.data[k]);
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].rows != tb[i].rows || ta[i].cols != tb[i].cols) return false;
    if (std::memcmp(ta[i].data, tb[i].data, ta[i].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Matrix apply_coefficients(const Matrix& embeddings, std::span<const SpanTag> tags,
                          const ModelParams& params) {
  if (static_cast<Eigen::Index>(tags.size()) != embeddings.rows())
    throw ShapeMismatch(std::to_string(tags.size()) + " tags for " +
                        std::to_string(embeddings.rows()) + " rows");
  Matrix out(embeddings.rows(), embeddings.cols());
  for (Eigen::Index t = 0; t < embeddings.rows(); ++t) {
    const Vector& c = params.coefficients[static_cast<std::size_t>(tags[static_cast<std::size_t>(t)])];
    if (c.size() != embeddings.cols())
      throw ShapeMismatch("coefficient width " + std::to_string(c.size()) + " vs embedding width " +
                          std::to_string(embeddings.cols()));
    out.row(t) = embeddings.row(t).cwiseProduct(c.transpose());
  }
  return out;
}

LstmTrace run_lstm(const Matrix& inputs, const LstmParams& params, bool reverse) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index h = params.recurrent_weights.rows();
  if (inputs.cols() != params.input_weights.rows())
    throw ShapeMismatch("LSTM input width " + std::to_string(inputs.cols()) + ", expected " +
                        std::to_string(params.input_weights.rows()));
  LstmTrace tr;
  tr.gates.resize(n, 4 * h);
  tr.cells.resize(n, h);
  tr.cell_tanh.resize(n, h);
  tr.hidden.resize(n, h);
  Matrix projected = inputs * params.input_weights;
  projected.rowwise() += params.bias.transpose();

  RowVector h_prev = RowVector::Zero(h), c_prev = RowVector::Zero(h);
  RowVector z(4 * h);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    z.noalias() = projected.row(t) + h_prev * params.recurrent_weights;
    auto gates = tr.gates.row(t);
    for (Eigen::Index j = 0; j < h; ++j) {
      gates(j) = sigmoid(z(j));
      gates(h + j) = sigmoid(z(h + j));
      gates(2 * h + j) = std::tanh(z(2 * h + j));
      gates(3 * h + j) = sigmoid(z(3 * h + j));
    }
    for (Eigen::Index j = 0; j < h; ++j) {
      const double c = gates(h + j) * c_prev(j) + gates(j) * gates(2 * h + j);
      const double tc = std::tanh(c);
      tr.cells(t, j) = c;
      tr.cell_tanh(t, j) = tc;
      tr.hidden(t, j) = gates(3 * h + j) * tc;
    }
    h_prev = tr.hidden.row(t);
    c_prev = tr.cells.row(t);
  }
  return tr;
}

Matrix encode_recurrent(const Matrix& inputs, const ModelParams& params) {
  const LstmTrace f = run_lstm(inputs, params.forward_lstm, false);
  const LstmTrace b = run_lstm(inputs, params.backward_lstm, true);
  Matrix out(inputs.rows(), f.hidden.cols() + b.hidden.cols());
  out << f.hidden, b.hidden;
  return out;
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

namespace {

void softmax_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

}  // namespace

AttentionTrace self_attention(const Matrix& states, const ModelParams& params) {
  const std::size_t heads = params.query.size();
  if (heads == 0) throw ShapeMismatch("attention without heads");
  const Eigen::Index dk = params.query[0].cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  AttentionTrace tr;
  tr.concatenated.resize(states.rows(), static_cast<Eigen::Index>(heads) * dk);
  for (std::size_t k = 0; k < heads; ++k) {
    tr.queries.push_back(states * params.query[k]);
    tr.keys.push_back(states * params.key[k]);
    tr.values.push_back(states * params.value[k]);
    Matrix w = scale * (tr.queries[k] * tr.keys[k].transpose());
    softmax_rows(w);
    tr.concatenated.middleCols(static_cast<Eigen::Index>(k) * dk, dk) = w * tr.values[k];
    tr.weights.push_back(std::move(w));
  }
  tr.output = tr.concatenated * params.output_projection;
  return tr;
}

PoolResult attention_pool(const Matrix& states, const Vector& pooling) {
  PoolResult r;
  r.weights = softmax(states * pooling);
  r.pooled = states.transpose() * r.weights;
  return r;
}

double plausibility(const Vector& reading, const Vector& output_weights) {
  return selu(reading.dot(output_weights));
}

ReadingTrace forward_reading(const Matrix& embeddings, std::span<const SpanTag> tags,
                             const ModelParams& params, const EncoderConfig& config) {
  if (embeddings.rows() == 0) throw ShapeMismatch("empty reading");
  ReadingTrace tr;
  tr.params = &params;
  tr.tags.assign(tags.begin(), tags.end());
  tr.inputs = embeddings;
  if (config.use_coefficients) {
    tr.scaled_inputs = apply_coefficients(embeddings, tags, params);
  } else {
    if (static_cast<Eigen::Index>(tags.size()) != embeddings.rows())
      throw ShapeMismatch("tag count does not match reading length");
    tr.scaled_inputs = embeddings;
  }
  tr.forward = run_lstm(tr.scaled_inputs, params.forward_lstm, false);
  tr.backward = run_lstm(tr.scaled_inputs, params.backward_lstm, true);
  const Eigen::Index n = embeddings.rows();
  const Eigen::Index h = tr.forward.hidden.cols();
  tr.states.resize(n, 2 * h);
  tr.states << tr.forward.hidden, tr.backward.hidden;

  if (config.use_attention) {
    tr.attention = self_attention(tr.states, params);
    tr.pool = attention_pool(tr.attention.output, params.pooling);
    tr.reading = tr.pool.pooled;
  } else {
    tr.reading.resize(2 * h);
    tr.reading << tr.forward.hidden.row(n - 1).transpose(), tr.backward.hidden.row(0).transpose();
  }
  tr.pre_activation = tr.reading.dot(params.output);
  tr.score = selu(tr.pre_activation);
  return tr;
}

namespace {

// Accumulates parameter gradients of one LSTM direction and returns d/d(inputs).
Matrix lstm_backward(const Matrix& inputs, const LstmTrace& tr, const LstmParams& p,
                     const Matrix& d_hidden, bool reverse, LstmParams& g) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index h = p.recurrent_weights.rows();
  Matrix dz_all(n, 4 * h);
  RowVector dh_next = RowVector::Zero(h), dc_next = RowVector::Zero(h);
  RowVector dz(4 * h);
  for (Eigen::Index s = n - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;  // previous step, valid when s > 0
    const auto gates = tr.gates.row(t);
    for (Eigen::Index j = 0; j < h; ++j) {
      const double i = gates(j), f = gates(h + j), gg = gates(2 * h + j), o = gates(3 * h + j);
      const double tc = tr.cell_tanh(t, j);
      const double c_prev = s > 0 ? tr.cells(tp, j) : 0.0;
      const double dh = d_hidden(t, j) + dh_next(j);
      const double d_o = dh * tc;
      const double dc = dh * o * (1.0 - tc * tc) + dc_next(j);
      dz(j) = dc * gg * i * (1.0 - i);
      dz(h + j) = dc * c_prev * f * (1.0 - f);
      dz(2 * h + j) = dc * i * (1.0 - gg * gg);
      dz(3 * h + j) = d_o * o * (1.0 - o);
      dc_next(j) = dc * f;
    }
    dz_all.row(t) = dz;
    if (s > 0) g.recurrent_weights.noalias() += tr.hidden.row(tp).transpose() * dz;
    dh_next.noalias() = dz * p.recurrent_weights.transpose();
  }
  g.input_weights.noalias() += inputs.transpose() * dz_all;
  g.bias += dz_all.colwise().sum().transpose();
  return dz_all * p.input_weights.transpose();
}

}  // namespace

void backward_reading(const ReadingTrace& tr, double d_score, const EncoderConfig& config,
                      ModelParams& grads) {
  const ModelParams& p = *tr.params;
  const double ds = d_score * selu_derivative(tr.pre_activation);
  grads.output += ds * tr.reading;
  const Vector dv = ds * p.output;

  const Eigen::Index n = tr.states.rows();
  const Eigen::Index h = tr.forward.hidden.cols();
  Matrix d_states = Matrix::Zero(n, 2 * h);

  if (config.use_attention) {
    const Matrix& S = tr.attention.output;
    const Vector& a = tr.pool.weights;
    // v = S^T a,  a = softmax(S wa)
    const Vector s_dot_dv = S * dv;
    const Vector de = a.cwiseProduct((s_dot_dv.array() - a.dot(s_dot_dv)).matrix());
    Matrix dS = a * dv.transpose();
    dS.noalias() += de * p.pooling.transpose();
    grads.pooling.noalias() += S.transpose() * de;

    grads.output_projection.noalias() += tr.attention.concatenated.transpose() * dS;
    const Matrix d_concat = dS * p.output_projection.transpose();
    const Eigen::Index dk = p.query[0].cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    for (std::size_t k = 0; k < p.query.size(); ++k) {
      const Matrix& A = tr.attention.weights[k];
      const Matrix d_head = d_concat.middleCols(static_cast<Eigen::Index>(k) * dk, dk);
      const Matrix dA = d_head * tr.attention.values[k].transpose();
      const Matrix dV = A.transpose() * d_head;
      Matrix d_logits = A.cwiseProduct(dA);
      const Vector row_dot = d_logits.rowwise().sum();
      d_logits = A.cwiseProduct(dA.colwise() - row_dot) * scale;
      const Matrix dQ = d_logits * tr.attention.keys[k];
      const Matrix dK = d_logits.transpose() * tr.attention.queries[k];
      grads.query[k].noalias() += tr.states.transpose() * dQ;
      grads.key[k].noalias() += tr.states.transpose() * dK;
      grads.value[k].noalias() += tr.states.transpose() * dV;
      d_states.noalias() += dQ * p.query[k].transpose();
      d_states.noalias() += dK * p.key[k].transpose();
      d_states.noalias() += dV * p.value[k].transpose();
    }
  } else {
    d_states.row(n - 1).head(h) += dv.head(h).transpose();
    d_states.row(0).tail(h) += dv.tail(h).transpose();
  }

  Matrix d_inputs = lstm_backward(tr.scaled_inputs, tr.forward, p.forward_lstm, d_states.leftCols(h),
                                  false, grads.forward_lstm);
  d_inputs += lstm_backward(tr.scaled_inputs, tr.backward, p.backward_lstm, d_states.rightCols(h),
                            true, grads.backward_lstm);

  if (config.use_coefficients) {
    for (Eigen::Index t = 0; t < n; ++t) {
      auto& gc = grads.coefficients[static_cast<std::size_t>(tr.tags[static_cast<std::size_t>(t)])];
      gc += d_inputs.row(t).cwiseProduct(tr.inputs.row(t)).transpose();
    }
  }
}

EmbeddedReading to_embedded(const TokenEmbeddingSequence& seq) {
  if (seq.tags.size() != seq.size()) throw ShapeMismatch("tags do not match embedding rows");
  return {seq.matrix, seq.tags};
}

double score(const EmbeddedReading& reading, const ModelParams& params, const EncoderConfig& config) {
  return forward_reading(reading.matrix.cast<double>(), reading.tags, params, config).score;
}

PairTrace forward_pair(const TrainingPair& pair, const ModelParams& params, const EncoderConfig& config) {
  return {forward_reading(pair.plus.matrix.cast<double>(), pair.plus.tags, params, config),
          forward_reading(pair.minus.matrix.cast<double>(), pair.minus.tags, params, config)};
}

}  // namespace argrank
