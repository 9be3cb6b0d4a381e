#pragma once

// Random fixtures shared by the unit tests and the acceptance suite.

#include <vector>

#include "argrank/model.hpp"
#include "argrank/util.hpp"

namespace argrank::testing {

inline EmbeddedReading random_reading(Rng& rng, std::size_t n, std::size_t d) {
  EmbeddedReading r;
  r.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < r.matrix.size(); ++i)
    r.matrix.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  // contiguous TARGET / CONNECTOR / SOURCE blocks, each non-empty when n >= 3
  const std::size_t t_end = std::max<std::size_t>(1, n / 3);
  const std::size_t c_end = std::min(n, t_end + 1);
  for (std::size_t t = 0; t < n; ++t)
    r.tags.push_back(t < t_end ? SpanTag::target : t < c_end ? SpanTag::connector : SpanTag::source);
  return r;
}

inline TrainingPair random_pair(Rng& rng, std::size_t n, std::size_t d, Label gold = Label::support) {
  TrainingPair p;
  p.rel_id = "pair" + std::to_string(rng.below(1000000));
  p.gold = gold;
  p.plus = random_reading(rng, n, d);
  p.minus = p.plus;
  // differ only in the connector rows
  for (std::size_t t = 0; t < n; ++t)
    if (p.minus.tags[t] == SpanTag::connector)
      for (Eigen::Index j = 0; j < p.minus.matrix.cols(); ++j)
        p.minus.matrix(static_cast<Eigen::Index>(t), j) = static_cast<float>(rng.uniform(-1.0, 1.0));
  return p;
}

// Moves every parameter (coefficients included) away from its initial value.
inline void perturb(ModelParams& params, Rng& rng, double scale = 0.3) {
  for (auto& t : params.tensors())
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] += rng.uniform(-scale, scale);
}

inline Matrix to_double(const EmbeddedReading& r) { return r.matrix.cast<double>(); }

}  // namespace argrank::testing
