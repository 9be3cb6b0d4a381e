#pragma once

// Per-class precision / recall / F1 counted directly from label lists, with
// the same 0/0 conventions as the library (0 when undefined). Percent.

#include <vector>

#include "argrank/corpus.hpp"

namespace argrank::oracle {

struct ClassScores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline ClassScores class_scores(const std::vector<Label>& gold, const std::vector<Label>& predicted, Label cls) {
  double tp = 0, predicted_pos = 0, gold_pos = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == cls) predicted_pos += 1;
    if (gold[i] == cls) gold_pos += 1;
    if (predicted[i] == cls && gold[i] == cls) tp += 1;
  }
  ClassScores s;
  s.precision = predicted_pos > 0 ? 100.0 * tp / predicted_pos : 0.0;
  s.recall = gold_pos > 0 ? 100.0 * tp / gold_pos : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline double macro_f1(const std::vector<Label>& gold, const std::vector<Label>& predicted) {
  return (class_scores(gold, predicted, Label::support).f1 + class_scores(gold, predicted, Label::attack).f1) / 2.0;
}

}  // namespace argrank::oracle
