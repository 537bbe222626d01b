// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// Gated graph-attention blocks and the two complex-scoring architectures:
//
//  * fused: pocket and ligand share one graph. A single block stack runs
//    twice, once on the covalent adjacency and once on the covalent adjacency
//    plus distance-weighted protein-ligand edges. The difference of the two
//    passes, summed over ligand rows, feeds the MLP.
//  * parallel: independent ligand and protein towers on their own covalent
//    graphs; the two sum-pooled embeddings are concatenated for the MLP.

#ifndef PLGAT_GAT_HPP_
#define PLGAT_GAT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plgat/complexbuild.hpp"
#include "plgat/matrix.hpp"
#include "plgat/tensor.hpp"

namespace plgat {

enum class ModelKind : std::uint8_t { kFused, kParallel };
enum class HeadKind : std::uint8_t { kClassification, kRegression };

// "gnnf" / "gnnp".
std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);
// "cls" / "reg".
std::string_view head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(std::string_view name);

struct ModelConfig {
  ModelKind model_kind = ModelKind::kFused;
  HeadKind head_kind = HeadKind::kClassification;
  std::size_t dim = 70;
  std::size_t n_blocks = 2;
  std::vector<std::size_t> hidden = {128, 64};
  double mu_init = 4.0;
  double sigma_init = 1.0;
};

inline constexpr double kMinSigma = 0.1;

struct GatBlockParams {
  Matrix transform;  // D x D, applied to node features
  Matrix attention;  // D x D bilinear form of the attention logits
  Matrix gate;       // 2D x 1
  Matrix gate_bias;  // 1 x 1
};

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct ModelParams {
  ModelConfig config;
  Matrix embed_ligand;   // F_L x D
  Matrix embed_protein;  // F_P x D
  // Fused: one shared stack. Parallel: ligand tower, then protein tower.
  std::vector<std::vector<GatBlockParams>> stacks;
  Matrix mu;     // 1 x 1, fused only
  Matrix sigma;  // 1 x 1, fused only
  std::vector<DenseLayer> mlp;

  // Every learned tensor in canonical order with a stable name.
  std::vector<std::pair<std::string, Matrix *>> tensors();
  std::vector<std::pair<std::string, const Matrix *>> tensors() const;

  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams &a, const ModelParams &b);
};

// Xavier-uniform weights, zero biases, gate bias 0, mu/sigma at their
// configured initial values. Deterministic in `seed`.
ModelParams init_params(const ModelConfig &config, std::uint64_t seed);

// Parameters placed on a tape, mirroring ModelParams.
struct BoundBlock {
  ad::Var transform;
  ad::Var attention;
  ad::Var gate;
  ad::Var gate_bias;
};

struct BoundLayer {
  ad::Var weight;
  ad::Var bias;
};

struct BoundParams {
  const ModelParams *source = nullptr;
  ad::Var embed_ligand;
  ad::Var embed_protein;
  std::vector<std::vector<BoundBlock>> stacks;
  ad::Var mu;
  ad::Var sigma;
  std::vector<BoundLayer> mlp;
  // Same order as ModelParams::tensors().
  std::vector<ad::Var> all;
};

// With `track` the parameters become tape variables (gradients available).
BoundParams bind(ad::Tape &tape, const ModelParams &params, bool track);

struct GatBlockTrace {
  ad::Var output;     // N x D
  ad::Var logits;     // e, N x N
  ad::Var attention;  // a, N x N
  ad::Var gate;       // N x 1
};

// One gated attention block. `adjacency` must be square with the node count
// of `h`; its positive entries define the neighbourhoods.
GatBlockTrace gat_block_traced(ad::Var h, ad::Var adjacency,
                               const BoundBlock &p);
ad::Var gat_block(ad::Var h, ad::Var adjacency, const BoundBlock &p);

// Covalent adjacency plus exp(-(d - mu)^2 / sigma) at every interaction pair.
ad::Var interaction_adjacency(ad::Tape &tape, const ComplexGraph &g,
                              ad::Var mu, ad::Var sigma);

// Raw logit (classification) or relu output (regression), 1 x 1.
ad::Var forward_gnnf(ad::Tape &tape, const ComplexGraph &g,
                     const BoundParams &p);
ad::Var forward_gnnp(ad::Tape &tape, const ComplexGraph &g,
                     const BoundParams &p);
ad::Var forward(ad::Tape &tape, const ComplexGraph &g, const BoundParams &p);

// Sum-pooled ligand tower embedding of the parallel model (1 x D).
Matrix ligand_embedding_gnnp(const ComplexGraph &g, const ModelParams &params);

// Untracked forward pass.
double score(const ComplexGraph &g, const ModelParams &params);

// Probability for classification, the (already rectified) value for
// regression.
double predict(double score, HeadKind head);

// Keeps sigma inside its valid range after an update.
void clamp_params(ModelParams &params);

}  // namespace plgat

#endif  // PLGAT_GAT_HPP_
