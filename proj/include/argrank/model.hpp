#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "argrank/embedding.hpp"
#include "argrank/reconstruction.hpp"

namespace argrank {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// selu(x) = lambda * x                    for x > 0
//         = lambda * alpha * (e^x - 1)    otherwise
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double selu(double x);
double selu_derivative(double x);

struct EncoderConfig {
  std::size_t d_input = 1024;
  std::size_t hidden = 256;  // per direction; the model width is 2 * hidden
  std::size_t heads = 4;
  bool use_coefficients = true;
  // false: score the concatenated last forward / last backward states instead
  bool use_attention = true;
  std::uint64_t seed = 0;

  std::size_t d_model() const { return 2 * hidden; }
  std::size_t d_head() const { return d_model() / heads; }
  void validate() const;  // throws ConfigInvalid
};

struct LstmParams {
  Matrix input_weights;      // d_input x 4h, gate blocks i | f | g | o
  Matrix recurrent_weights;  // h x 4h
  Vector bias;               // 4h
};

/// Every trainable tensor. Readings of one pair are scored with the same
/// instance (Siamese weight sharing).
struct ModelParams {
  std::array<Vector, kSpanTagCount> coefficients;  // indexed by SpanTag
  LstmParams forward_lstm;
  LstmParams backward_lstm;
  std::vector<Matrix> query;  // per head, d_model x d_head
  std::vector<Matrix> key;
  std::vector<Matrix> value;
  Matrix output_projection;  // d_model x d_model
  Vector pooling;            // d_model, scores each attended state
  Vector output;             // d_model, plausibility weights

  /// Coefficients start at one, biases at zero, weights uniform in
  /// +-1/sqrt(fan_in), all drawn from `config.seed`.
  static ModelParams initialize(const EncoderConfig& config);
  static ModelParams zeros_like(const ModelParams& other);

  struct TensorView {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
  };
  struct ConstTensorView {
    std::string name;
    const double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
  };
  // Stable order; used by the optimizer, checkpoints and gradient checks.
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;

  void set_zero();
  ModelParams& operator+=(const ModelParams& other);
  // Round every value to float32 precision (what checkpoints store).
  void round_to_float();
};

bool bitwise_equal(const ModelParams& a, const ModelParams& b);

// ---------------------------------------------------------------------------
// Individual stages. Rows are time steps.

Matrix apply_coefficients(const Matrix& embeddings, std::span<const SpanTag> tags,
                          const ModelParams& params);

struct LstmTrace {
  Matrix gates;      // n x 4h, activated
  Matrix cells;      // n x h
  Matrix cell_tanh;  // n x h
  Matrix hidden;     // n x h
};

LstmTrace run_lstm(const Matrix& inputs, const LstmParams& params, bool reverse);

/// [forward state ; backward state] per step, n x 2h.
Matrix encode_recurrent(const Matrix& inputs, const ModelParams& params);

struct AttentionTrace {
  std::vector<Matrix> queries, keys, values;
  std::vector<Matrix> weights;  // per head, n x n, row-stochastic
  Matrix concatenated;          // n x d_model
  Matrix output;                // n x d_model
};

AttentionTrace self_attention(const Matrix& states, const ModelParams& params);

struct PoolResult {
  Vector weights;  // n, sums to one
  Vector pooled;   // d_model
};

PoolResult attention_pool(const Matrix& states, const Vector& pooling);

double plausibility(const Vector& reading, const Vector& output_weights);

/// Numerically stable softmax of one vector.
Vector softmax(const Vector& logits);

// ---------------------------------------------------------------------------
// Whole reading

struct ReadingTrace {
  const ModelParams* params = nullptr;  // identity of the weights used
  std::vector<SpanTag> tags;
  Matrix inputs;
  Matrix scaled_inputs;
  LstmTrace forward, backward;
  Matrix states;  // n x 2h
  AttentionTrace attention;
  PoolResult pool;
  Vector reading;  // v
  double pre_activation = 0.0;
  double score = 0.0;
};

ReadingTrace forward_reading(const Matrix& embeddings, std::span<const SpanTag> tags,
                             const ModelParams& params, const EncoderConfig& config);

/// Adds d(score)/d(theta) * d_score into `grads`.
void backward_reading(const ReadingTrace& trace, double d_score, const EncoderConfig& config,
                      ModelParams& grads);

// ---------------------------------------------------------------------------
// Embedded training data

struct EmbeddedReading {
  EmbeddingMatrix matrix;
  std::vector<SpanTag> tags;
};

struct TrainingPair {
  std::string rel_id;
  Label gold = Label::support;
  EmbeddedReading plus;   // marker agrees with gold
  EmbeddedReading minus;

  const EmbeddedReading& support_marked() const { return gold == Label::support ? plus : minus; }
  const EmbeddedReading& attack_marked() const { return gold == Label::support ? minus : plus; }
};

EmbeddedReading to_embedded(const TokenEmbeddingSequence& seq);

double score(const EmbeddedReading& reading, const ModelParams& params, const EncoderConfig& config);

/// Both readings of a pair, run through one parameter set.
struct PairTrace {
  ReadingTrace plus;
  ReadingTrace minus;
};

PairTrace forward_pair(const TrainingPair& pair, const ModelParams& params, const EncoderConfig& config);

}  // namespace argrank
