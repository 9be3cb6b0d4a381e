#pragma once

// Straight-line scalar re-implementation of the scorer. Plain loops over
// std::vector; shares nothing with the Eigen code path except reading the
// parameter values.

#include <cmath>
#include <vector>

#include "argrank/model.hpp"

namespace argrank::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[row][col]

inline Mat to_mat(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Vec to_vec(const Vector& v) { return Vec(v.data(), v.data() + v.size()); }

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double selu_ref(double x) {
  const double lambda = 1.0507009873554804934193349852946;
  const double alpha = 1.6732632423543772848170429916717;
  return x > 0 ? lambda * x : lambda * alpha * (std::exp(x) - 1.0);
}

// out[j] = sum_i x[i] * W[i][j]
inline Vec vec_mat(const Vec& x, const Mat& w) {
  Vec out(w.empty() ? 0 : w[0].size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
  return out;
}

inline Vec softmax_ref(const Vec& z) {
  double mx = z[0];
  for (double v : z) mx = v > mx ? v : mx;
  Vec e(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    e[i] = std::exp(z[i] - mx);
    sum += e[i];
  }
  for (double& v : e) v /= sum;
  return e;
}

inline Mat lstm_ref(const Mat& x, const LstmParams& p, bool reverse) {
  const Mat w = to_mat(p.input_weights);
  const Mat u = to_mat(p.recurrent_weights);
  const Vec b = to_vec(p.bias);
  const std::size_t n = x.size(), h = u.size();
  Mat out(n, Vec(h));
  Vec hp(h, 0.0), cp(h, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    Vec z = vec_mat(x[t], w);
    const Vec zr = vec_mat(hp, u);
    for (std::size_t j = 0; j < 4 * h; ++j) z[j] += zr[j] + b[j];
    Vec hn(h), cn(h);
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sig(z[j]), f = sig(z[h + j]), g = std::tanh(z[2 * h + j]), o = sig(z[3 * h + j]);
      cn[j] = f * cp[j] + i * g;
      hn[j] = o * std::tanh(cn[j]);
    }
    out[t] = hn;
    hp = hn;
    cp = cn;
  }
  return out;
}

inline Mat attention_ref(const Mat& hs, const ModelParams& p) {
  const std::size_t n = hs.size();
  const std::size_t heads = p.query.size();
  const std::size_t dk = static_cast<std::size_t>(p.query[0].cols());
  Mat concat(n, Vec(heads * dk, 0.0));
  for (std::size_t k = 0; k < heads; ++k) {
    const Mat wq = to_mat(p.query[k]), wk = to_mat(p.key[k]), wv = to_mat(p.value[k]);
    Mat q(n), kk(n), v(n);
    for (std::size_t t = 0; t < n; ++t) {
      q[t] = vec_mat(hs[t], wq);
      kk[t] = vec_mat(hs[t], wk);
      v[t] = vec_mat(hs[t], wv);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Vec logits(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < dk; ++c) logits[j] += q[i][c] * kk[j][c];
        logits[j] /= std::sqrt(static_cast<double>(dk));
      }
      const Vec a = softmax_ref(logits);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < dk; ++c) concat[i][k * dk + c] += a[j] * v[j][c];
    }
  }
  const Mat wo = to_mat(p.output_projection);
  Mat out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = vec_mat(concat[t], wo);
  return out;
}

inline double score_ref(const Mat& x_in, const std::vector<SpanTag>& tags, const ModelParams& p,
                        bool use_coefficients, bool use_attention) {
  Mat x = x_in;
  if (use_coefficients)
    for (std::size_t t = 0; t < x.size(); ++t) {
      const Vector& c = p.coefficients[static_cast<std::size_t>(tags[t])];
      for (std::size_t j = 0; j < x[t].size(); ++j) x[t][j] *= c[static_cast<Eigen::Index>(j)];
    }
  const Mat f = lstm_ref(x, p.forward_lstm, false);
  const Mat b = lstm_ref(x, p.backward_lstm, true);
  const std::size_t n = x.size();
  Mat hs(n);
  for (std::size_t t = 0; t < n; ++t) {
    hs[t] = f[t];
    hs[t].insert(hs[t].end(), b[t].begin(), b[t].end());
  }
  Vec v;
  if (use_attention) {
    const Mat s = attention_ref(hs, p);
    const Vec wa = to_vec(p.pooling);
    Vec e(n, 0.0);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t j = 0; j < wa.size(); ++j) e[t] += s[t][j] * wa[j];
    const Vec a = softmax_ref(e);
    v.assign(s[0].size(), 0.0);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += a[t] * s[t][j];
  } else {
    v = f[n - 1];
    v.insert(v.end(), b[0].begin(), b[0].end());
  }
  double dot = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * p.output[static_cast<Eigen::Index>(j)];
  return selu_ref(dot);
}

}  // namespace argrank::oracle
