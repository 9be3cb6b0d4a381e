#pragma once

// Synthetic argument data whose label is decided by a single token, for
// separability tests and for exercising the pipeline without the essay
// corpus.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "argrank/corpus.hpp"

namespace argrank {

struct SyntheticConfig {
  std::size_t instances = 600;
  std::uint64_t seed = 1;
  // present in the source unit iff the relation is an attack
  std::string signal_token = "zorblax";
  std::size_t min_words = 3;
  std::size_t max_words = 7;
  double attack_fraction = 0.5;
};

/// Relation instances with ids "syn<seed>:R<k>".
std::vector<ViewInstance> synthetic_instances(const SyntheticConfig& config);

/// Essays of `relations_per_doc` relations each: every relation contributes a
/// target and a source sentence; labels follow the signal-token rule.
std::vector<Document> synthetic_corpus(std::size_t docs, std::size_t relations_per_doc,
                                       const SyntheticConfig& config);

/// Writes `<id>.txt` / `<id>.ann` pairs plus `train-test-split.csv`.
void write_standoff_corpus(const std::vector<Document>& docs, const std::string& dir,
                           const std::set<std::string>& test_docs);

}  // namespace argrank
