// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/train.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "plgat/error.hpp"
#include "plgat/featurize.hpp"

namespace plgat {

namespace {

using nlohmann::json;

constexpr std::string_view kCheckpointFormat = "plgat-checkpoint";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string trim_copy(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string &key, const std::string &value) {
  T out{};
  auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError(fmt::format("config {}: cannot parse '{}'", key, value));
  }
  return out;
}

bool parse_bool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError(fmt::format("config {}: expected true/false, got '{}'", key,
                               value));
}

void check_labels(const std::vector<ComplexGraph> &data, HeadKind head,
                  std::string_view what) {
  if (data.empty()) throw DataError(fmt::format("{} set is empty", what));
  const LabelKind kind = data.front().label.kind;
  for (const ComplexGraph &g : data) {
    if (g.label.kind != kind) {
      throw DataError(fmt::format("{} set mixes label kinds '{}' and '{}'", what,
                                  label_kind_name(kind),
                                  label_kind_name(g.label.kind)));
    }
  }
  const bool activity = kind == LabelKind::kActivity;
  if (activity != (head == HeadKind::kClassification)) {
    throw DataError(fmt::format("{} labels '{}' do not fit the {} head", what,
                                label_kind_name(kind), head_kind_name(head)));
  }
}

void append_metrics(EpochLog &entry, const std::string &prefix,
                    const std::vector<PredictionRecord> &preds, HeadKind head,
                    double threshold) {
  if (head == HeadKind::kClassification) {
    MetricReport r = classification_metrics(preds, threshold);
    entry.metrics.emplace_back(prefix + "accuracy", r.accuracy);
    entry.metrics.emplace_back(prefix + "auroc", r.auroc);
  } else {
    MetricReport r = regression_metrics(preds);
    entry.metrics.emplace_back(prefix + "rmse", r.rmse);
    entry.metrics.emplace_back(prefix + "pearson", r.pearson);
  }
}

void put_le(std::string &out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double get_le(const std::string &in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b]))
            << (8 * b);
  }
  return std::bit_cast<double>(bits);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.model_kind = model_kind;
  mc.head_kind = head_kind;
  mc.dim = dim;
  mc.n_blocks = n_blocks;
  return mc;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be a non-negative number");
  }
  if (dim == 0 || n_blocks == 0 || batch_size == 0) {
    throw UsageError("dim, n_blocks and batch_size must be positive");
  }
}

std::vector<std::pair<std::string, std::string>> TrainConfig::entries() const {
  return {
      {"lr", format_number(learning_rate)},
      {"blocks", std::to_string(n_blocks)},
      {"dim", std::to_string(dim)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"seed", std::to_string(seed)},
      {"head", std::string(head_kind_name(head_kind))},
      {"model", std::string(model_kind_name(model_kind))},
      {"shuffle", shuffle ? "true" : "false"},
      {"threshold", format_number(threshold)},
  };
}

void TrainConfig::set(const std::string &key, const std::string &value) {
  if (key == "lr" || key == "learning_rate") {
    learning_rate = parse_number<double>(key, value);
  } else if (key == "blocks" || key == "n_blocks") {
    n_blocks = parse_number<std::size_t>(key, value);
  } else if (key == "dim") {
    dim = parse_number<std::size_t>(key, value);
  } else if (key == "epochs") {
    epochs = parse_number<std::size_t>(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "head") {
    head_kind = head_kind_from_name(value);
  } else if (key == "model") {
    model_kind = model_kind_from_name(value);
  } else if (key == "shuffle") {
    shuffle = parse_bool(key, value);
  } else if (key == "threshold") {
    threshold = parse_number<double>(key, value);
  } else {
    throw UsageError(fmt::format("unknown config key '{}'", key));
  }
}

void apply_config_file(const std::filesystem::path &path, TrainConfig &cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string body = trim_copy(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(fmt::format("{}:{}: expected key=value",
                                   path.string(), line_number));
    }
    cfg.set(trim_copy(body.substr(0, eq)), trim_copy(body.substr(eq + 1)));
  }
}

double bce_with_logits(double x, double y) {
  return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
}

ad::Var bce_with_logits(ad::Var logit, double label) {
  ad::Tape &tape = *logit.tape();
  const double x = logit.item();
  return tape.record("bce_with_logits", Matrix::scalar(bce_with_logits(x, label)),
                     {logit}, [logit, label](ad::Tape &t, const Matrix &g) {
                       const double x = logit.item();
                       t.accumulate(logit, Matrix::scalar(
                                               g.values[0] * (ad::sigmoid(x) - label)));
                     });
}

double mse(double pred, double label) {
  const double d = pred - label;
  return d * d;
}

ad::Var mse(ad::Var pred, double label) {
  return ad::square(ad::add_scalar(pred, -label));
}

void adam_step(const std::vector<Matrix *> &params,
               const std::vector<Matrix> &grads, AdamState &state,
               const AdamOptions &opt) {
  if (params.size() != grads.size()) {
    throw ShapeError(fmt::format("adam_step: {} parameters but {} gradients",
                                 params.size(), grads.size()));
  }
  if (state.first_moment.empty()) {
    for (const Matrix *p : params) {
      state.first_moment.emplace_back(p->rows, p->cols);
      state.second_moment.emplace_back(p->rows, p->cols);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix &p = *params[k];
    if (grads[k].rows != p.rows || grads[k].cols != p.cols ||
        state.first_moment[k].rows != p.rows ||
        state.first_moment[k].cols != p.cols) {
      throw ShapeError(fmt::format("adam_step: tensor {} shape {} vs gradient {}",
                                   k, p.shape_string(), grads[k].shape_string()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix &p = *params[k];
    Matrix &m = state.first_moment[k];
    Matrix &v = state.second_moment[k];
    const Matrix &g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.values[i] = opt.beta1 * m.values[i] + (1.0 - opt.beta1) * g.values[i];
      v.values[i] = opt.beta2 * v.values[i] +
                    (1.0 - opt.beta2) * g.values[i] * g.values[i];
      const double m_hat = m.values[i] / correction1;
      const double v_hat = v.values[i] / correction2;
      p.values[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
}

void adam_step(ModelParams &params, const std::vector<Matrix> &grads,
               AdamState &state, const AdamOptions &options) {
  std::vector<Matrix *> ptrs;
  for (auto &[name, m] : params.tensors()) ptrs.push_back(m);
  adam_step(ptrs, grads, state, options);
  clamp_params(params);
}

ad::Var sample_loss(ad::Var score, const ComplexGraph &g, HeadKind head) {
  return head == HeadKind::kClassification ? bce_with_logits(score, g.label.value)
                                           : mse(score, g.label.value);
}

SampleGradient loss_and_gradient(const ComplexGraph &g,
                                 const ModelParams &params) {
  ad::Tape tape;
  BoundParams bound = bind(tape, params, true);
  ad::Var score = forward(tape, g, bound);
  ad::Var loss = sample_loss(score, g, params.config.head_kind);
  tape.backward(loss);
  SampleGradient out;
  out.loss = loss.item();
  out.score = score.item();
  out.grads.reserve(bound.all.size());
  for (ad::Var v : bound.all) out.grads.push_back(tape.grad(v));
  return out;
}

std::vector<PredictionRecord> predict_all(const std::vector<ComplexGraph> &data,
                                          const ModelParams &params) {
  std::vector<PredictionRecord> out;
  out.reserve(data.size());
  for (const ComplexGraph &g : data) {
    PredictionRecord r;
    r.sample_id = g.sample_id;
    r.target_id = g.target_id;
    r.pose_rank = g.pose_rank;
    r.score = predict(score(g, params), params.config.head_kind);
    r.label = g.label.value;
    r.rmsd = g.rmsd;
    if (params.config.model_kind == ModelKind::kFused && g.interactions.empty()) {
      r.warnings = "no_interactions";
    }
    out.push_back(std::move(r));
  }
  return out;
}

TrainResult train_loop(const std::vector<ComplexGraph> &data,
                       const TrainConfig &cfg,
                       const std::vector<ComplexGraph> *eval,
                       const TrainState *resume, const EpochCallback &on_epoch) {
  cfg.validate();
  check_labels(data, cfg.head_kind, "training");
  if (eval != nullptr && !eval->empty()) check_labels(*eval, cfg.head_kind, "eval");

  TrainResult result;
  TrainState &state = result.state;
  if (resume != nullptr) {
    const ModelConfig &rc = resume->params.config;
    if (rc.model_kind != cfg.model_kind || rc.head_kind != cfg.head_kind ||
        rc.dim != cfg.dim || rc.n_blocks != cfg.n_blocks) {
      throw UsageError("resume checkpoint does not match the training config");
    }
    state = *resume;
  } else {
    state.params = init_params(cfg.model_config(), cfg.seed);
    if (cfg.head_kind == HeadKind::kRegression) {
      double mean = 0.0;
      for (const ComplexGraph &g : data) mean += g.label.value;
      state.params.mlp.back().bias.values[0] =
          mean / static_cast<double>(data.size());
    }
  }

  AdamOptions opt;
  opt.learning_rate = cfg.learning_rate;
  const std::size_t n = data.size();
  const std::size_t n_tensors = state.params.tensors().size();

  for (std::size_t epoch = state.epochs_completed + 1; epoch <= cfg.epochs;
       ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (cfg.shuffle) {
      std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
    }

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, n);
      std::vector<Matrix> grads;
      for (std::size_t k = begin; k < end; ++k) {
        SampleGradient sg = loss_and_gradient(data[order[k]], state.params);
        loss_sum += sg.loss;
        if (grads.empty()) {
          grads = std::move(sg.grads);
          continue;
        }
        for (std::size_t t = 0; t < n_tensors; ++t) {
          for (std::size_t i = 0; i < grads[t].size(); ++i) {
            grads[t].values[i] += sg.grads[t].values[i];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (Matrix &g : grads) {
        for (double &v : g.values) v *= inv;
      }
      adam_step(state.params, grads, state.optimizer, opt);
    }
    state.epochs_completed = epoch;

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(n);
    append_metrics(entry, "train_", predict_all(data, state.params),
                   cfg.head_kind, cfg.threshold);
    if (eval != nullptr && !eval->empty()) {
      append_metrics(entry, "eval_", predict_all(*eval, state.params),
                     cfg.head_kind, cfg.threshold);
    }
    if (on_epoch) on_epoch(entry);
    result.log.push_back(std::move(entry));
  }
  return result;
}

void write_train_log(std::ostream &out, const TrainConfig &cfg,
                     const std::vector<EpochLog> &log) {
  for (const auto &[key, value] : cfg.entries()) {
    out << "# " << key << '=' << value << '\n';
  }
  out << "epoch,train_loss";
  if (!log.empty()) {
    for (const auto &[name, value] : log.front().metrics) out << ',' << name;
  }
  out << '\n';
  for (const EpochLog &e : log) {
    out << e.epoch << ',' << format_number(e.train_loss);
    for (const auto &[name, value] : e.metrics) out << ',' << format_optional(value);
    out << '\n';
  }
}

void save_checkpoint(const std::filesystem::path &dir, const Checkpoint &ckpt) {
  std::filesystem::create_directories(dir);
  const ModelParams &params = ckpt.state.params;

  std::vector<std::pair<std::string, const Matrix *>> tensors = params.tensors();
  std::vector<Matrix> zero_moments;
  if (ckpt.has_optimizer) {
    const AdamState &adam = ckpt.state.optimizer;
    const bool sized = !adam.first_moment.empty();
    if (!sized) {
      for (const auto &[name, m] : params.tensors()) zero_moments.emplace_back(m->rows, m->cols);
    }
    const auto base = params.tensors();
    for (std::size_t k = 0; k < base.size(); ++k) {
      tensors.emplace_back("adam.m/" + base[k].first,
                           sized ? &adam.first_moment[k] : &zero_moments[k]);
    }
    for (std::size_t k = 0; k < base.size(); ++k) {
      tensors.emplace_back("adam.v/" + base[k].first,
                           sized ? &adam.second_moment[k] : &zero_moments[k]);
    }
  }

  json directory = json::array();
  std::string payload;
  std::size_t offset = 0;
  for (const auto &[name, m] : tensors) {
    directory.push_back({{"name", name},
                         {"shape", json::array({m->rows, m->cols})},
                         {"offset", offset}});
    for (double v : m->values) put_le(payload, v);
    offset += m->size();
  }

  json config = json::object();
  for (const auto &[key, value] : ckpt.config.entries()) config[key] = value;

  json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["schema_version"] = kCheckpointSchemaVersion;
  manifest["feature_schema"] = feature_schema::kVersion;
  manifest["model_kind"] = model_kind_name(params.config.model_kind);
  manifest["head_kind"] = head_kind_name(params.config.head_kind);
  manifest["dim"] = params.config.dim;
  manifest["n_blocks"] = params.config.n_blocks;
  manifest["hidden"] = params.config.hidden;
  manifest["epochs_completed"] = ckpt.state.epochs_completed;
  manifest["optimizer"] = ckpt.has_optimizer
                              ? json{{"kind", "adam"},
                                     {"step", ckpt.state.optimizer.step}}
                              : json(nullptr);
  manifest["train_config"] = std::move(config);
  manifest["tensors"] = std::move(directory);
  manifest["payload_length"] = offset;

  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("failed writing " + (dir / "manifest.json").string());
  }
  std::ofstream out(dir / "weights.bin", std::ios::binary);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed writing " + (dir / "weights.bin").string());
}

Checkpoint load_checkpoint(const std::filesystem::path &dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception &e) {
    throw DataError(fmt::format("checkpoint manifest: {}", e.what()));
  }

  try {
    if (manifest.at("format").get<std::string>() != kCheckpointFormat) {
      throw DataError("not a plgat checkpoint");
    }
    const int version = manifest.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw DataError(fmt::format(
          "checkpoint schema version {} does not match supported version {}",
          version, kCheckpointSchemaVersion));
    }
    const std::string features = manifest.at("feature_schema").get<std::string>();
    if (features != feature_schema::kVersion) {
      throw DataError(fmt::format(
          "checkpoint feature schema '{}' does not match this build's '{}'",
          features, feature_schema::kVersion));
    }

    Checkpoint ckpt;
    for (const auto &[key, value] : manifest.at("train_config").items()) {
      ckpt.config.set(key, value.get<std::string>());
    }
    ModelConfig mc = ckpt.config.model_config();
    if (model_kind_name(mc.model_kind) != manifest.at("model_kind").get<std::string>() ||
        head_kind_name(mc.head_kind) != manifest.at("head_kind").get<std::string>() ||
        mc.dim != manifest.at("dim").get<std::size_t>() ||
        mc.n_blocks != manifest.at("n_blocks").get<std::size_t>() ||
        mc.hidden != manifest.at("hidden").get<std::vector<std::size_t>>()) {
      throw DataError("checkpoint manifest model fields disagree with its config");
    }

    ckpt.state.params = init_params(mc, 0);
    ckpt.state.epochs_completed = manifest.at("epochs_completed").get<std::size_t>();
    ckpt.has_optimizer = !manifest.at("optimizer").is_null();

    std::vector<std::pair<std::string, Matrix *>> expected =
        ckpt.state.params.tensors();
    if (ckpt.has_optimizer) {
      ckpt.state.optimizer.step = manifest.at("optimizer").at("step").get<std::uint64_t>();
      for (const auto &[name, m] : ckpt.state.params.tensors()) {
        ckpt.state.optimizer.first_moment.emplace_back(m->rows, m->cols);
        ckpt.state.optimizer.second_moment.emplace_back(m->rows, m->cols);
      }
      const auto base = ckpt.state.params.tensors();
      for (std::size_t k = 0; k < base.size(); ++k) {
        expected.emplace_back("adam.m/" + base[k].first,
                              &ckpt.state.optimizer.first_moment[k]);
      }
      for (std::size_t k = 0; k < base.size(); ++k) {
        expected.emplace_back("adam.v/" + base[k].first,
                              &ckpt.state.optimizer.second_moment[k]);
      }
    }

    const json &directory = manifest.at("tensors");
    if (directory.size() != expected.size()) {
      throw DataError(fmt::format("checkpoint lists {} tensors, expected {}",
                                  directory.size(), expected.size()));
    }
    const std::size_t payload_length = manifest.at("payload_length").get<std::size_t>();
    const std::string payload = read_file(dir / "weights.bin");
    if (payload.size() != 8 * payload_length) {
      throw DataError(fmt::format(
          "checkpoint payload has {} bytes, manifest declares {} values",
          payload.size(), payload_length));
    }

    std::size_t offset = 0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const json &entry = directory.at(k);
      const auto &[name, target] = expected[k];
      if (entry.at("name").get<std::string>() != name) {
        throw DataError(fmt::format("checkpoint tensor {} is '{}', expected '{}'",
                                    k, entry.at("name").get<std::string>(), name));
      }
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != target->rows ||
          shape[1] != target->cols) {
        throw DataError(fmt::format("checkpoint tensor '{}' has wrong shape", name));
      }
      if (entry.at("offset").get<std::size_t>() != offset) {
        throw DataError(fmt::format("checkpoint tensor '{}' offset {} != {}",
                                    name, entry.at("offset").get<std::size_t>(),
                                    offset));
      }
      for (double &v : target->values) {
        v = get_le(payload, 8 * offset);
        ++offset;
      }
    }
    if (offset != payload_length) {
      throw DataError("checkpoint payload length disagrees with tensor sizes");
    }
    return ckpt;
  } catch (const json::exception &e) {
    throw DataError(fmt::format("checkpoint manifest: {}", e.what()));
  }
}

void require_head(const Checkpoint &ckpt, HeadKind head) {
  const HeadKind have = ckpt.state.params.config.head_kind;
  if (have != head) {
    throw DataError(fmt::format(
        "checkpoint has a '{}' head but '{}' was requested",
        head_kind_name(have), head_kind_name(head)));
  }
}

}  // namespace plgat
