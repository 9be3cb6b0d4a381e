#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "argrank/reconstruction.hpp"

namespace argrank {

using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpanRanges = std::array<CharRange, kSpanTagCount>;

/// Frozen per-token features of one reconstruction.
struct TokenEmbeddingSequence {
  std::vector<std::string> tokens;  // empty when restored from the binary cache
  EmbeddingMatrix matrix;           // n x d
  std::vector<SpanTag> tags;        // n
  std::string provider_id;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Tag of a token occupying `token`: the range holding its first character.
SpanTag tag_for(CharRange token, const SpanRanges& ranges);

/// Elementwise mean of the last `count` layers (each n x d).
Eigen::MatrixXd average_last_layers(const std::vector<Eigen::MatrixXd>& layers, std::size_t count);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string id() const = 0;
  // Everything besides the text that determines the vectors (layers, seed, ...).
  virtual std::string layer_policy() const = 0;
  virtual std::size_t dim() const = 0;
  // Must be safe to call concurrently.
  virtual TokenEmbeddingSequence embed(std::string_view text, const SpanRanges& ranges) const = 0;

  TokenEmbeddingSequence embed(const Reconstruction& r) const { return embed(r.text, r.ranges); }
};

/// Offline embedder for tests: each token vector is a seeded hash of
/// (token string, position parity), uniform in [-1, 1]. When `signal_token`
/// is set, coordinate 0 is 2.0 for that token and stays in [-1, 1] for all
/// others, so the signal token is linearly separable.
std::unique_ptr<EmbeddingProvider> deterministic_test_embedder(std::uint64_t seed, std::size_t dim,
                                                               std::string signal_token = {});

// ---------------------------------------------------------------------------
// External layered models (BERT / ELMo style services).

struct LayerPiece {
  std::string text;
  CharRange range;  // code points; empty range for special pieces ([CLS], ...)
};

struct LayerResponse {
  std::vector<LayerPiece> pieces;
  std::vector<Eigen::MatrixXd> layers;  // each pieces.size() x d
};

/// Client contract: text in, per-layer per-piece vectors out.
class LayerClient {
 public:
  virtual ~LayerClient() = default;
  virtual LayerResponse request(std::string_view text) const = 0;
};

/// POSTs {"text": ...} to `url` and expects
/// {"pieces": [{"text", "start", "end"}...], "layers": [[[f, ...], ...], ...]}.
/// Throws ProviderUnavailable when the service cannot be reached.
class HttpLayerClient final : public LayerClient {
 public:
  explicit HttpLayerClient(std::string url, int timeout_seconds = 60);
  LayerResponse request(std::string_view text) const override;

 private:
  std::string host_;
  std::string path_;
  int timeout_seconds_;
};

LayerResponse parse_layer_response(std::string_view body);

/// Averages the last `layers_to_average` layers, then averages the pieces
/// falling into each whitespace/punctuation token, so the sequence is word
/// level and aligned with reconstruction tokens.
class LayeredProvider final : public EmbeddingProvider {
 public:
  LayeredProvider(std::shared_ptr<const LayerClient> client, std::string id, std::size_t dim,
                  std::size_t layers_to_average = 4);

  using EmbeddingProvider::embed;
  std::string id() const override { return id_; }
  std::string layer_policy() const override;
  std::size_t dim() const override { return dim_; }
  TokenEmbeddingSequence embed(std::string_view text, const SpanRanges& ranges) const override;

 private:
  std::shared_ptr<const LayerClient> client_;
  std::string id_;
  std::size_t dim_;
  std::size_t layers_to_average_;
};

// ---------------------------------------------------------------------------
// Disk cache

struct CacheKey {
  std::string hex;
};

CacheKey cache_key(std::string_view provider_id, std::string_view layer_policy, std::string_view text);

/// Content-addressed store of `<dir>/<key>.plrk` files in the tensor
/// container format. Writes are atomic (write + rename).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::string dir);

  void write(const CacheKey& key, const TokenEmbeddingSequence& seq) const;
  // Unknown key -> nullopt. Corrupt file -> nullopt plus a warning on stderr.
  std::optional<TokenEmbeddingSequence> read(const CacheKey& key) const;
  std::string path_for(const CacheKey& key) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

std::string encode_sequence(const TokenEmbeddingSequence& seq);
/// Throws CorruptEntry.
TokenEmbeddingSequence decode_sequence(std::string_view bytes);

/// Consults the cache before the wrapped provider and stores misses.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, EmbeddingCache cache);

  using EmbeddingProvider::embed;
  std::string id() const override { return inner_->id(); }
  std::string layer_policy() const override { return inner_->layer_policy(); }
  std::size_t dim() const override { return inner_->dim(); }
  TokenEmbeddingSequence embed(std::string_view text, const SpanRanges& ranges) const override;

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  EmbeddingCache cache_;
};

// Portable alternative: one {key, tokens, tags, vectors} object per line.
std::string sequence_to_json_line(const CacheKey& key, const TokenEmbeddingSequence& seq);
std::pair<CacheKey, TokenEmbeddingSequence> sequence_from_json_line(std::string_view line);

}  // namespace argrank
