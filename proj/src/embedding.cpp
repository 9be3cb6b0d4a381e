#include "argrank/embedding.hpp"

#include <filesystem>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/tensor_io.hpp"
#include "argrank/util.hpp"

namespace argrank {

using nlohmann::json;

SpanTag tag_for(CharRange token, const SpanRanges& ranges) {
  for (std::size_t i = 0; i < kSpanTagCount; ++i)
    if (ranges[i].contains(token.start)) return static_cast<SpanTag>(i);
  // outside every range: attach to the nearest preceding one
  SpanTag best = SpanTag::target;
  for (std::size_t i = 0; i < kSpanTagCount; ++i)
    if (ranges[i].start <= token.start) best = static_cast<SpanTag>(i);
  return best;
}

Eigen::MatrixXd average_last_layers(const std::vector<Eigen::MatrixXd>& layers, std::size_t count) {
  if (count == 0 || layers.size() < count)
    throw DimensionMismatch("need " + std::to_string(count) + " layers, provider returned " +
                            std::to_string(layers.size()));
  const std::size_t first = layers.size() - count;
  Eigen::MatrixXd sum = layers[first];
  for (std::size_t l = first + 1; l < layers.size(); ++l) {
    if (layers[l].rows() != sum.rows() || layers[l].cols() != sum.cols())
      throw DimensionMismatch("layer shapes differ");
    sum += layers[l];
  }
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class TestEmbedder final : public EmbeddingProvider {
 public:
  TestEmbedder(std::uint64_t seed, std::size_t dim, std::string signal)
      : seed_(seed), dim_(dim), signal_(std::move(signal)) {
    if (dim_ == 0) throw ConfigInvalid("test embedder needs d >= 1");
  }

  std::string id() const override { return "test"; }
  std::string layer_policy() const override {
    return "seed=" + std::to_string(seed_) + ";d=" + std::to_string(dim_) + ";signal=" + signal_;
  }
  std::size_t dim() const override { return dim_; }

  TokenEmbeddingSequence embed(std::string_view text, const SpanRanges& ranges) const override {
    TokenEmbeddingSequence seq;
    seq.provider_id = id();
    const auto tokens = tokenize(text);
    seq.matrix.resize(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::uint64_t base = splitmix64(seed_ ^ fnv1a64(tokens[t].text)) ^ (t % 2 ? 0x5851f42d4c957f2dULL : 0);
      for (std::size_t j = 0; j < dim_; ++j) {
        const std::uint64_t h = splitmix64(base + j * 0x9e3779b97f4a7c15ULL);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        seq.matrix(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
            static_cast<float>(2.0 * u - 1.0);
      }
      if (!signal_.empty() && tokens[t].text == signal_)
        seq.matrix(static_cast<Eigen::Index>(t), 0) = 2.0f;
      seq.tokens.push_back(tokens[t].text);
      seq.tags.push_back(tag_for(tokens[t].range, ranges));
    }
    return seq;
  }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::string signal_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> deterministic_test_embedder(std::uint64_t seed, std::size_t dim,
                                                               std::string signal_token) {
  return std::make_unique<TestEmbedder>(seed, dim, std::move(signal_token));
}

// ---------------------------------------------------------------------------

HttpLayerClient::HttpLayerClient(std::string url, int timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.substr(0, scheme) != "http")
    throw ConfigInvalid("provider endpoint must be an http:// URL, got '" + url + "'");
  const auto path_at = url.find('/', scheme + 3);
  host_ = url.substr(0, path_at);
  path_ = path_at == std::string::npos ? "/" : url.substr(path_at);
}

LayerResponse parse_layer_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderUnavailable(std::string("unparseable provider response: ") + e.what());
  }
  LayerResponse r;
  try {
    for (const auto& p : j.at("pieces"))
      r.pieces.push_back({p.at("text").get<std::string>(),
                          {p.at("start").get<std::size_t>(), p.at("end").get<std::size_t>()}});
    for (const auto& layer : j.at("layers")) {
      const auto rows = static_cast<Eigen::Index>(layer.size());
      const auto cols = rows ? static_cast<Eigen::Index>(layer[0].size()) : 0;
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(layer[i].size()) != cols)
          throw DimensionMismatch("ragged layer rows");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = layer[i][k].get<double>();
      }
      r.layers.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ProviderUnavailable(std::string("malformed provider response: ") + e.what());
  }
  return r;
}

LayerResponse HttpLayerClient::request(std::string_view text) const {
  httplib::Client client(host_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  const json body = {{"text", std::string(text)}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw ProviderUnavailable(host_ + path_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ProviderUnavailable(host_ + path_ + ": HTTP " + std::to_string(res->status));
  return parse_layer_response(res->body);
}

LayeredProvider::LayeredProvider(std::shared_ptr<const LayerClient> client, std::string id,
                                 std::size_t dim, std::size_t layers_to_average)
    : client_(std::move(client)), id_(std::move(id)), dim_(dim),
      layers_to_average_(layers_to_average) {}

std::string LayeredProvider::layer_policy() const {
  return "mean-last-" + std::to_string(layers_to_average_) + ";word-avg;d=" + std::to_string(dim_);
}

TokenEmbeddingSequence LayeredProvider::embed(std::string_view text, const SpanRanges& ranges) const {
  const LayerResponse response = client_->request(text);
  for (const auto& layer : response.layers) {
    if (static_cast<std::size_t>(layer.rows()) != response.pieces.size())
      throw DimensionMismatch("layer rows do not match piece count");
    if (static_cast<std::size_t>(layer.cols()) != dim_)
      throw DimensionMismatch(id_ + " returned d=" + std::to_string(layer.cols()) + ", expected " +
                              std::to_string(dim_));
  }
  const Eigen::MatrixXd pieces = average_last_layers(response.layers, layers_to_average_);

  const auto tokens = tokenize(text);
  Eigen::MatrixXd words = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()),
                                                static_cast<Eigen::Index>(dim_));
  std::vector<int> counts(tokens.size(), 0);
  std::size_t t = 0;
  for (std::size_t p = 0; p < response.pieces.size(); ++p) {
    const CharRange r = response.pieces[p].range;
    if (r.size() == 0) continue;  // special pieces
    while (t < tokens.size() && tokens[t].range.end <= r.start) ++t;
    if (t >= tokens.size()) break;
    // a piece starting in whitespace belongs to the first token it overlaps
    if (!tokens[t].range.contains(r.start) && tokens[t].range.start >= r.end) continue;
    const std::size_t owner = t;
    words.row(static_cast<Eigen::Index>(owner)) += pieces.row(static_cast<Eigen::Index>(p));
    ++counts[owner];
  }

  TokenEmbeddingSequence seq;
  seq.provider_id = id_;
  std::vector<Eigen::Index> keep;
  for (std::size_t k = 0; k < tokens.size(); ++k)
    if (counts[k] > 0) keep.push_back(static_cast<Eigen::Index>(k));
  seq.matrix.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto k = keep[i];
    seq.matrix.row(static_cast<Eigen::Index>(i)) = (words.row(k) / counts[k]).cast<float>();
    seq.tokens.push_back(tokens[k].text);
    seq.tags.push_back(tag_for(tokens[k].range, ranges));
  }
  if (seq.size() == 0) throw DimensionMismatch(id_ + " produced no token vectors");
  return seq;
}

// ---------------------------------------------------------------------------

CacheKey cache_key(std::string_view provider_id, std::string_view layer_policy, std::string_view text) {
  Fnv1a64 h;
  h.update(provider_id);
  h.update("\0", 1);
  h.update(layer_policy);
  h.update("\0", 1);
  h.update(text);
  return {hex64(h.digest())};
}

std::string encode_sequence(const TokenEmbeddingSequence& seq) {
  TensorRecord rec;
  rec.rows = static_cast<std::uint32_t>(seq.size());
  rec.cols = static_cast<std::uint32_t>(seq.dim());
  rec.values.assign(seq.matrix.data(), seq.matrix.data() + seq.matrix.size());
  for (SpanTag t : seq.tags) rec.tags.push_back(static_cast<std::uint8_t>(t));
  return encode_record(rec);
}

TokenEmbeddingSequence decode_sequence(std::string_view bytes) {
  std::size_t offset = 0;
  TensorRecord rec = decode_record(bytes, offset);
  if (offset != bytes.size()) throw CorruptEntry("trailing bytes after record");
  TokenEmbeddingSequence seq;
  seq.matrix = Eigen::Map<const EmbeddingMatrix>(rec.values.data(), rec.rows, rec.cols);
  for (std::uint8_t t : rec.tags) {
    if (t >= kSpanTagCount) throw CorruptEntry("span tag out of range");
    seq.tags.push_back(static_cast<SpanTag>(t));
  }
  return seq;
}

EmbeddingCache::EmbeddingCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string EmbeddingCache::path_for(const CacheKey& key) const {
  return (std::filesystem::path(dir_) / (key.hex + ".plrk")).string();
}

void EmbeddingCache::write(const CacheKey& key, const TokenEmbeddingSequence& seq) const {
  write_file_atomic(path_for(key), encode_sequence(seq));
}

std::optional<TokenEmbeddingSequence> EmbeddingCache::read(const CacheKey& key) const {
  const std::string path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return decode_sequence(read_file(path));
  } catch (const CorruptEntry& e) {
    std::cerr << "warning: ignoring cache entry " << path << " (" << e.what() << ")\n";
    return std::nullopt;
  }
}

CachedProvider::CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, EmbeddingCache cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

TokenEmbeddingSequence CachedProvider::embed(std::string_view text, const SpanRanges& ranges) const {
  const CacheKey key = cache_key(inner_->id(), inner_->layer_policy(), text);
  if (auto hit = cache_.read(key)) {
    if (hit->dim() != inner_->dim())
      throw DimensionMismatch("cached entry " + key.hex + " has d=" + std::to_string(hit->dim()));
    hit->provider_id = inner_->id();
    return *std::move(hit);
  }
  TokenEmbeddingSequence seq = inner_->embed(text, ranges);
  if (seq.dim() != inner_->dim())
    throw DimensionMismatch(inner_->id() + " returned d=" + std::to_string(seq.dim()));
  cache_.write(key, seq);
  return seq;
}

std::string sequence_to_json_line(const CacheKey& key, const TokenEmbeddingSequence& seq) {
  json vectors = json::array();
  for (Eigen::Index i = 0; i < seq.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < seq.matrix.cols(); ++k) row.push_back(seq.matrix(i, k));
    vectors.push_back(std::move(row));
  }
  json tags = json::array();
  for (SpanTag t : seq.tags) tags.push_back(static_cast<int>(t));
  const json j = {{"key", key.hex}, {"tokens", seq.tokens}, {"tags", tags}, {"vectors", vectors}};
  return j.dump() + "\n";
}

std::pair<CacheKey, TokenEmbeddingSequence> sequence_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  TokenEmbeddingSequence seq;
  seq.tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto& vectors = j.at("vectors");
  const auto rows = static_cast<Eigen::Index>(vectors.size());
  const auto cols = rows ? static_cast<Eigen::Index>(vectors[0].size()) : 0;
  seq.matrix.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(vectors[i].size()) != cols) throw DimensionMismatch("ragged vectors");
    for (Eigen::Index k = 0; k < cols; ++k) seq.matrix(i, k) = vectors[i][k].get<float>();
  }
  for (const auto& t : j.at("tags")) {
    const int v = t.get<int>();
    if (v < 0 || v >= static_cast<int>(kSpanTagCount)) throw CorruptEntry("span tag out of range");
    seq.tags.push_back(static_cast<SpanTag>(v));
  }
  if (seq.tags.size() != seq.size()) throw ShapeMismatch("tags do not match vectors");
  return {CacheKey{j.at("key").get<std::string>()}, std::move(seq)};
}

}  // namespace argrank
