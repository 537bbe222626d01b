// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef PLGAT_TRAIN_HPP_
#define PLGAT_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plgat/complexbuild.hpp"
#include "plgat/gat.hpp"
#include "plgat/metrics.hpp"
#include "plgat/tensor.hpp"

namespace plgat {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t n_blocks = 2;
  std::size_t dim = 70;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  HeadKind head_kind = HeadKind::kClassification;
  ModelKind model_kind = ModelKind::kFused;
  bool shuffle = true;
  // Decision threshold for the logged classification accuracy.
  double threshold = 0.5;

  ModelConfig model_config() const;
  // Throws UsageError on non-positive sizes or a negative learning rate.
  void validate() const;

  // Flat key=value form, one pair per line, in a fixed key order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  // Applies one key=value pair; unknown keys throw UsageError.
  void set(const std::string &key, const std::string &value);
};

// Reads a flat key=value file ('#' starts a comment) into `cfg`.
void apply_config_file(const std::filesystem::path &path, TrainConfig &cfg);

// max(x, 0) - x*y + log(1 + exp(-|x|)).
double bce_with_logits(double logit, double label);
ad::Var bce_with_logits(ad::Var logit, double label);
double mse(double pred, double label);
ad::Var mse(ad::Var pred, double label);

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState &, const AdamState &) = default;
};

// Bias-corrected Adam update of `params` in place. The state is sized on
// first use.
void adam_step(const std::vector<Matrix *> &params,
               const std::vector<Matrix> &grads, AdamState &state,
               const AdamOptions &options);
// Same, over every model tensor, followed by the sigma clamp.
void adam_step(ModelParams &params, const std::vector<Matrix> &grads,
               AdamState &state, const AdamOptions &options);

// Loss of one sample on the tape: BCE on the logit or squared error.
ad::Var sample_loss(ad::Var score, const ComplexGraph &g, HeadKind head);

struct SampleGradient {
  double loss = 0.0;
  double score = 0.0;
  std::vector<Matrix> grads;  // ModelParams::tensors() order
};

SampleGradient loss_and_gradient(const ComplexGraph &g,
                                 const ModelParams &params);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  // Metric name and value; classification logs accuracy/auroc, regression
  // rmse/pearson, for the training set and (optionally) the eval set.
  std::vector<std::pair<std::string, std::optional<double>>> metrics;
};

struct TrainState {
  ModelParams params;
  AdamState optimizer;
  std::size_t epochs_completed = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog &)>;

// Per-sample forward/backward, gradients averaged over each batch, one Adam
// step per batch. Resumes from `resume` when given; otherwise initializes
// from cfg.seed. The epoch order is a pure function of (seed, epoch).
TrainResult train_loop(const std::vector<ComplexGraph> &data,
                       const TrainConfig &cfg,
                       const std::vector<ComplexGraph> *eval = nullptr,
                       const TrainState *resume = nullptr,
                       const EpochCallback &on_epoch = nullptr);

// Scores every graph with the untracked forward pass and converts to
// predictions (probability or value).
std::vector<PredictionRecord> predict_all(const std::vector<ComplexGraph> &data,
                                          const ModelParams &params);

// CSV with the effective configuration echoed as '# key=value' lines.
void write_train_log(std::ostream &out, const TrainConfig &cfg,
                     const std::vector<EpochLog> &log);

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
  TrainConfig config;
  TrainState state;
  bool has_optimizer = true;
};

// Directory with manifest.json and weights.bin (little-endian float64).
void save_checkpoint(const std::filesystem::path &dir, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::filesystem::path &dir);
// Throws DataError naming both head kinds on mismatch.
void require_head(const Checkpoint &ckpt, HeadKind head);

}  // namespace plgat

#endif  // PLGAT_TRAIN_HPP_
