#include "argrank/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "argrank/errors.hpp"
#include "argrank/tensor_io.hpp"
#include "argrank/util.hpp"

namespace argrank {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigInvalid("learning_rate must be positive");
  if (batch_size == 0) throw ConfigInvalid("batch_size must be at least 1");
  if (runs == 0) throw ConfigInvalid("runs must be at least 1");
  if (!std::isfinite(margin)) throw ConfigInvalid("margin must be finite");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw ConfigInvalid("invalid Adam hyperparameters");
  if (reduction_chunks == 0) throw ConfigInvalid("reduction_chunks must be at least 1");
}

double rank_loss(std::span<const double> plus, std::span<const double> minus, double margin, bool hinge) {
  if (plus.size() != minus.size() || plus.empty())
    throw LengthMismatch("rank loss needs equal, non-empty batches (got " + std::to_string(plus.size()) +
                         " and " + std::to_string(minus.size()) + ")");
  double total = 0.0;
  for (std::size_t i = 0; i < plus.size(); ++i) {
    const double raw = margin - plus[i] + minus[i];
    total += hinge ? std::max(0.0, raw) : raw;
  }
  return total / static_cast<double>(plus.size());
}

// ---------------------------------------------------------------------------

Adam::Adam(const ModelParams& like, const TrainConfig& config)
    : m_(ModelParams::zeros_like(like)),
      v_(ModelParams::zeros_like(like)),
      lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon) {}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t k = 0; k < p[t].size(); ++k) {
      const double gk = g[t].data[k];
      m[t].data[k] = beta1_ * m[t].data[k] + (1.0 - beta1_) * gk;
      v[t].data[k] = beta2_ * v[t].data[k] + (1.0 - beta2_) * gk * gk;
      const double mhat = m[t].data[k] / c1;
      const double vhat = v[t].data[k] / c2;
      p[t].data[k] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

double mean_pair_loss(std::span<const TrainingPair> pairs, const ModelParams& params,
                      const EncoderConfig& encoder, const TrainConfig& config) {
  const auto scores = score_pairs(pairs, params, encoder);
  std::vector<double> plus(pairs.size()), minus(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool support = pairs[i].gold == Label::support;
    plus[i] = support ? scores[i].support : scores[i].attack;
    minus[i] = support ? scores[i].attack : scores[i].support;
  }
  return rank_loss(plus, minus, config.margin, config.hinge);
}

double dev_f1(std::span<const TrainingPair> dev, const ModelParams& params, const EncoderConfig& encoder) {
  const auto predictions = classify_all(dev, params, encoder, "");
  return compute_metrics(predictions, gold_labels(dev)).macro_f1;
}

bool all_finite(const ModelParams& p) {
  for (const auto& t : p.tensors())
    for (std::size_t k = 0; k < t.size(); ++k)
      if (!std::isfinite(t.data[k])) return false;
  return true;
}

}  // namespace

TrainResult train_run(std::span<const TrainingPair> train, std::span<const TrainingPair> dev,
                      const EncoderConfig& encoder, const TrainConfig& config, std::uint64_t seed,
                      const EpochObserver& observer) {
  config.validate();
  encoder.validate();
  if (train.empty()) throw ConfigInvalid("training set is empty");
  if (dev.empty()) throw ConfigInvalid("development set is empty");

  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - started).count(); };

  EncoderConfig enc = encoder;
  enc.seed = seed;
  ModelParams params = ModelParams::initialize(enc);
  Adam adam(params, config);
  Rng rng(seed ^ 0xa0761d6478bd642fULL);

  TrainResult result;
  auto finish_epoch = [&](std::size_t epoch, double train_loss) {
    ModelParams snapshot = params;
    snapshot.round_to_float();
    EpochRecord rec{epoch, train_loss, dev_f1(dev, snapshot, enc), elapsed()};
    result.history.push_back(rec);
    if (epoch == 0 || rec.dev_macro_f1 > result.best.dev_macro_f1)
      result.best = Checkpoint{std::move(snapshot), enc, seed, epoch, rec.dev_macro_f1};
    if (observer) observer(rec, params);
  };

  finish_epoch(0, mean_pair_loss(train, params, enc, config));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ModelParams grads = ModelParams::zeros_like(params);
  std::vector<const TrainingPair*> batch;
  const RankLossOptions options = config.loss_options();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
      const BatchResult br = rank_loss_gradient(batch, params, enc, options, grads, config.reduction_chunks);
      if (!std::isfinite(br.loss) || !all_finite(grads)) {
        std::string ids;
        for (std::size_t i = 0; i < batch.size() && i < 5; ++i) ids += (i ? ", " : "") + batch[i]->rel_id;
        throw NonFiniteLoss("non-finite loss or gradient at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(start / config.batch_size) + " (seed " + std::to_string(seed) +
                            ", loss " + std::to_string(br.loss) + ", first pairs: " + ids + ")");
      }
      adam.step(params, grads);
      loss_sum += br.loss * static_cast<double>(batch.size());
    }
    finish_epoch(epoch, loss_sum / static_cast<double>(train.size()));
  }
  return result;
}

std::string training_log_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,dev_macro_f1,wall_seconds\n";
  char buf[128];
  for (const auto& r : history) {
    if (r.epoch == 0) continue;
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.4f,%.3f\n", r.epoch, r.train_loss, r.dev_macro_f1,
                  r.wall_seconds);
    out += buf;
  }
  return out;
}

double pair_ranking_accuracy(std::span<const TrainingPair> pairs, const ModelParams& params,
                             const EncoderConfig& config) {
  if (pairs.empty()) return 0.0;
  const auto scores = score_pairs(pairs, params, config);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool support = pairs[i].gold == Label::support;
    const double plus = support ? scores[i].support : scores[i].attack;
    const double minus = support ? scores[i].attack : scores[i].support;
    correct += plus > minus;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

RunResult multi_run(std::span<const TrainingPair> train, std::span<const TrainingPair> dev,
                    std::span<const TrainingPair> test, const EncoderConfig& encoder,
                    const TrainConfig& config, const std::string& connector_abbrev,
                    const std::function<void(std::size_t, const EpochRecord&)>& progress) {
  config.validate();
  if (test.empty()) throw ConfigInvalid("test set is empty");
  const auto gold = gold_labels(test);
  RunResult out;
  std::vector<MetricsReport> reports;
  for (std::size_t k = 0; k < config.runs; ++k) {
    RunOutcome run;
    run.seed = config.seed_base + k;
    EpochObserver observer;
    if (progress) observer = [&](const EpochRecord& r, const ModelParams&) { progress(k, r); };
    TrainResult tr = train_run(train, dev, encoder, config, run.seed, observer);
    run.checkpoint = std::move(tr.best);
    run.history = std::move(tr.history);
    run.test_predictions = classify_all(test, run.checkpoint.params, run.checkpoint.encoder, connector_abbrev);
    run.test = compute_metrics(run.test_predictions, gold);
    reports.push_back(run.test);
    out.runs.push_back(std::move(run));
  }
  out.aggregate = aggregate(reports);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

json encoder_json(const EncoderConfig& e) {
  return {{"d_input", e.d_input},
          {"hidden", e.hidden},
          {"heads", e.heads},
          {"use_coefficients", e.use_coefficients},
          {"use_attention", e.use_attention},
          {"seed", e.seed}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig e;
  e.d_input = j.at("d_input").get<std::size_t>();
  e.hidden = j.at("hidden").get<std::size_t>();
  e.heads = j.at("heads").get<std::size_t>();
  e.use_coefficients = j.at("use_coefficients").get<bool>();
  e.use_attention = j.at("use_attention").get<bool>();
  e.seed = j.at("seed").get<std::uint64_t>();
  return e;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& stem) {
  std::string bin;
  json tensors = json::array();
  for (const auto& t : checkpoint.params.tensors()) {
    TensorRecord rec;
    rec.rows = static_cast<std::uint32_t>(t.rows);
    rec.cols = static_cast<std::uint32_t>(t.cols);
    rec.values.resize(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) rec.values[k] = static_cast<float>(t.data[k]);
    rec.tags.assign(rec.rows, 0);
    bin += encode_record(rec);
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  const json manifest = {{"format", "argrank-checkpoint"},
                         {"version", 1},
                         {"encoder", encoder_json(checkpoint.encoder)},
                         {"seed", checkpoint.seed},
                         {"epoch", checkpoint.epoch},
                         {"dev_macro_f1", checkpoint.dev_macro_f1},
                         {"parameter_count", checkpoint.params.parameter_count()},
                         {"tensors", tensors},
                         {"bin_checksum", hex64(fnv1a64(bin))}};
  write_file_atomic(stem + ".bin", bin);
  write_file_atomic(stem + ".json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& stem) {
  const std::string manifest_text = read_file(stem + ".json");
  const std::string bin = read_file(stem + ".bin");
  json manifest;
  Checkpoint cp;
  std::string checksum;
  try {
    manifest = json::parse(manifest_text);
    if (manifest.at("format") != "argrank-checkpoint") throw CorruptEntry(stem + ".json: not a checkpoint");
    cp.encoder = encoder_from_json(manifest.at("encoder"));
    cp.seed = manifest.at("seed").get<std::uint64_t>();
    cp.epoch = manifest.at("epoch").get<std::size_t>();
    cp.dev_macro_f1 = manifest.at("dev_macro_f1").get<double>();
    checksum = manifest.at("bin_checksum").get<std::string>();
    if (!manifest.at("tensors").is_array()) throw CorruptEntry(stem + ".json: tensors is not a list");
  } catch (const json::exception& e) {
    throw CorruptEntry(stem + ".json: " + e.what());
  }
  if (checksum != hex64(fnv1a64(bin)))
    throw CorruptEntry(stem + ".bin does not match its manifest checksum");

  cp.encoder.validate();
  cp.params = ModelParams::zeros_like(ModelParams::initialize(cp.encoder));
  auto views = cp.params.tensors();
  const auto& listed = manifest.at("tensors");
  if (listed.size() != views.size())
    throw ShapeMismatch(stem + ": manifest lists " + std::to_string(listed.size()) + " tensors, model has " +
                        std::to_string(views.size()));
  std::size_t offset = 0;
  for (std::size_t t = 0; t < views.size(); ++t) {
    const TensorRecord rec = decode_record(bin, offset);
    const std::string name = listed[t].is_object() ? listed[t].value("name", std::string()) : std::string();
    if (name != views[t].name || rec.rows != views[t].rows || rec.cols != views[t].cols)
      throw ShapeMismatch(stem + ": tensor " + views[t].name + " has an unexpected shape or position");
    for (std::size_t k = 0; k < views[t].size(); ++k) views[t].data[k] = static_cast<double>(rec.values[k]);
  }
  if (offset != bin.size()) throw CorruptEntry(stem + ".bin has trailing bytes");
  return cp;
}

}  // namespace argrank
