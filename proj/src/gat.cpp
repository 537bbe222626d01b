// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/gat.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "plgat/error.hpp"
#include "plgat/featurize.hpp"

namespace plgat {

namespace {

Matrix xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64 &rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(fan_in, fan_out);
  for (double &v : m.values) v = dist(rng);
  return m;
}

template <typename Params, typename Out>
void collect(Params &p, Out &out) {
  out.emplace_back("embed_ligand", &p.embed_ligand);
  out.emplace_back("embed_protein", &p.embed_protein);
  const bool fused = p.config.model_kind == ModelKind::kFused;
  for (std::size_t s = 0; s < p.stacks.size(); ++s) {
    std::string stack = fused ? "shared" : (s == 0 ? "ligand" : "protein");
    for (std::size_t b = 0; b < p.stacks[s].size(); ++b) {
      auto &blk = p.stacks[s][b];
      std::string prefix = fmt::format("stack.{}.{}.", stack, b);
      out.emplace_back(prefix + "transform", &blk.transform);
      out.emplace_back(prefix + "attention", &blk.attention);
      out.emplace_back(prefix + "gate", &blk.gate);
      out.emplace_back(prefix + "gate_bias", &blk.gate_bias);
    }
  }
  if (fused) {
    out.emplace_back("mu", &p.mu);
    out.emplace_back("sigma", &p.sigma);
  }
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    out.emplace_back(fmt::format("mlp.{}.weight", l), &p.mlp[l].weight);
    out.emplace_back(fmt::format("mlp.{}.bias", l), &p.mlp[l].bias);
  }
}

ad::Var run_stack(ad::Var h, ad::Var adjacency,
                  const std::vector<BoundBlock> &stack) {
  for (const BoundBlock &blk : stack) h = gat_block(h, adjacency, blk);
  return h;
}

ad::Var run_mlp(ad::Var x, const std::vector<BoundLayer> &mlp, HeadKind head) {
  for (std::size_t l = 0; l < mlp.size(); ++l) {
    x = ad::add(ad::matmul(x, mlp[l].weight), mlp[l].bias);
    if (l + 1 < mlp.size()) x = ad::relu(x);
  }
  return head == HeadKind::kRegression ? ad::relu(x) : x;
}

void check_graph(const ComplexGraph &g) {
  if (g.ligand_features.rows != g.num_ligand() ||
      g.protein_features.rows != g.num_protein() ||
      g.ligand_features.cols != feature_schema::kLigandWidth ||
      g.protein_features.cols != feature_schema::kProteinWidth) {
    throw ShapeError(fmt::format("graph '{}' has inconsistent feature matrices",
                                 g.sample_id));
  }
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  return kind == ModelKind::kFused ? "gnnf" : "gnnp";
}

ModelKind model_kind_from_name(std::string_view name) {
  if (name == "gnnf") return ModelKind::kFused;
  if (name == "gnnp") return ModelKind::kParallel;
  throw UsageError(fmt::format("unknown model kind '{}' (gnnf|gnnp)", name));
}

std::string_view head_kind_name(HeadKind kind) {
  return kind == HeadKind::kClassification ? "cls" : "reg";
}

HeadKind head_kind_from_name(std::string_view name) {
  if (name == "cls") return HeadKind::kClassification;
  if (name == "reg") return HeadKind::kRegression;
  throw UsageError(fmt::format("unknown head kind '{}' (cls|reg)", name));
}

std::vector<std::pair<std::string, Matrix *>> ModelParams::tensors() {
  std::vector<std::pair<std::string, Matrix *>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Matrix *>> ModelParams::tensors()
    const {
  std::vector<std::pair<std::string, const Matrix *>> out;
  collect(*this, out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto &[name, m] : tensors()) n += m->size();
  return n;
}

bool operator==(const ModelParams &a, const ModelParams &b) {
  if (a.config.model_kind != b.config.model_kind ||
      a.config.head_kind != b.config.head_kind || a.config.dim != b.config.dim ||
      a.config.n_blocks != b.config.n_blocks ||
      a.config.hidden != b.config.hidden) {
    return false;
  }
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].first != tb[k].first || !(*ta[k].second == *tb[k].second)) {
      return false;
    }
  }
  return true;
}

ModelParams init_params(const ModelConfig &config, std::uint64_t seed) {
  if (config.dim == 0 || config.n_blocks == 0) {
    throw UsageError("model dim and block count must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t d = config.dim;
  ModelParams p;
  p.config = config;
  p.embed_ligand = xavier(feature_schema::kLigandWidth, d, rng);
  p.embed_protein = xavier(feature_schema::kProteinWidth, d, rng);
  const std::size_t n_stacks = config.model_kind == ModelKind::kFused ? 1 : 2;
  p.stacks.resize(n_stacks);
  for (auto &stack : p.stacks) {
    for (std::size_t b = 0; b < config.n_blocks; ++b) {
      GatBlockParams blk;
      blk.transform = xavier(d, d, rng);
      blk.attention = xavier(d, d, rng);
      blk.gate = xavier(2 * d, 1, rng);
      blk.gate_bias = Matrix::scalar(0.0);
      stack.push_back(std::move(blk));
    }
  }
  if (config.model_kind == ModelKind::kFused) {
    p.mu = Matrix::scalar(config.mu_init);
    p.sigma = Matrix::scalar(std::max(config.sigma_init, kMinSigma));
  }
  std::size_t in = config.model_kind == ModelKind::kFused ? d : 2 * d;
  std::vector<std::size_t> widths = config.hidden;
  widths.push_back(1);
  for (std::size_t out : widths) {
    p.mlp.push_back({xavier(in, out, rng), Matrix(1, out)});
    in = out;
  }
  return p;
}

BoundParams bind(ad::Tape &tape, const ModelParams &params, bool track) {
  auto put = [&](const Matrix &m) {
    return track ? tape.variable(m) : tape.constant(m);
  };
  BoundParams b;
  b.source = &params;
  b.embed_ligand = put(params.embed_ligand);
  b.embed_protein = put(params.embed_protein);
  b.all = {b.embed_ligand, b.embed_protein};
  for (const auto &stack : params.stacks) {
    auto &bound = b.stacks.emplace_back();
    for (const GatBlockParams &blk : stack) {
      BoundBlock bb{put(blk.transform), put(blk.attention), put(blk.gate),
                    put(blk.gate_bias)};
      b.all.insert(b.all.end(),
                   {bb.transform, bb.attention, bb.gate, bb.gate_bias});
      bound.push_back(bb);
    }
  }
  if (params.config.model_kind == ModelKind::kFused) {
    b.mu = put(params.mu);
    b.sigma = put(params.sigma);
    b.all.insert(b.all.end(), {b.mu, b.sigma});
  }
  for (const DenseLayer &layer : params.mlp) {
    BoundLayer bl{put(layer.weight), put(layer.bias)};
    b.all.insert(b.all.end(), {bl.weight, bl.bias});
    b.mlp.push_back(bl);
  }
  return b;
}

GatBlockTrace gat_block_traced(ad::Var h, ad::Var adjacency,
                               const BoundBlock &p) {
  const Matrix &adj = adjacency.value();
  if (adj.rows != adj.cols || adj.rows != h.rows()) {
    throw ShapeError(fmt::format("gat_block: adjacency {} for {} nodes",
                                 adj.shape_string(), h.rows()));
  }
  Matrix mask(adj.rows, adj.cols);
  for (std::size_t k = 0; k < adj.size(); ++k) {
    mask.values[k] = adj.values[k] > 0.0 ? 1.0 : 0.0;
  }

  GatBlockTrace trace;
  ad::Var z = ad::matmul(h, p.transform);
  ad::Var half = ad::matmul(ad::matmul(z, p.attention), ad::transpose(z));
  trace.logits = ad::add(half, ad::transpose(half));
  trace.attention =
      ad::mul(ad::masked_row_softmax(trace.logits, mask), adjacency);
  ad::Var message = ad::relu(ad::matmul(trace.attention, z));
  trace.gate = ad::sigmoid(
      ad::add(ad::matmul(ad::concat_cols(h, message), p.gate), p.gate_bias));
  ad::Var keep = ad::add_scalar(ad::neg(trace.gate), 1.0);
  trace.output = ad::add(ad::scale_rows(h, trace.gate),
                         ad::scale_rows(message, keep));
  return trace;
}

ad::Var gat_block(ad::Var h, ad::Var adjacency, const BoundBlock &p) {
  return gat_block_traced(h, adjacency, p).output;
}

ad::Var interaction_adjacency(ad::Tape &tape, const ComplexGraph &g,
                              ad::Var mu, ad::Var sigma) {
  ad::Var covalent = tape.constant(g.covalent_adj);
  if (g.interactions.empty()) return covalent;

  const std::size_t np = g.num_protein();
  const std::size_t n = g.covalent_adj.rows;
  Matrix d(g.interactions.size(), 1);
  std::vector<ad::ScatterEntry> entries;
  entries.reserve(2 * g.interactions.size());
  for (std::size_t k = 0; k < g.interactions.size(); ++k) {
    const InteractionPair &pair = g.interactions[k];
    d.values[k] = pair.distance;
    entries.push_back({k, pair.protein, np + pair.ligand});
    entries.push_back({k, np + pair.ligand, pair.protein});
  }
  ad::Var diff = ad::sub(tape.constant(std::move(d)), mu);
  ad::Var weight = ad::exp(ad::neg(ad::div(ad::square(diff), sigma)));
  return ad::add(covalent, ad::scatter(weight, entries, n, n));
}

ad::Var forward_gnnf(ad::Tape &tape, const ComplexGraph &g,
                     const BoundParams &p) {
  if (p.source == nullptr || p.source->config.model_kind != ModelKind::kFused ||
      p.stacks.size() != 1) {
    throw UsageError("forward_gnnf needs fused-model parameters");
  }
  check_graph(g);
  const std::size_t np = g.num_protein();
  const std::size_t nl = g.num_ligand();
  ad::Var x = ad::concat_rows(
      ad::matmul(tape.constant(g.protein_features), p.embed_protein),
      ad::matmul(tape.constant(g.ligand_features), p.embed_ligand));

  ad::Var covalent = tape.constant(g.covalent_adj);
  ad::Var with_contacts = interaction_adjacency(tape, g, p.mu, p.sigma);
  ad::Var h_contacts = run_stack(x, with_contacts, p.stacks[0]);
  ad::Var h_covalent = run_stack(x, covalent, p.stacks[0]);
  ad::Var delta = ad::sub(h_contacts, h_covalent);
  ad::Var readout = ad::col_sum(ad::row_slice(delta, np, np + nl));
  return run_mlp(readout, p.mlp, p.source->config.head_kind);
}

ad::Var forward_gnnp(ad::Tape &tape, const ComplexGraph &g,
                     const BoundParams &p) {
  if (p.source == nullptr ||
      p.source->config.model_kind != ModelKind::kParallel ||
      p.stacks.size() != 2) {
    throw UsageError("forward_gnnp needs parallel-model parameters");
  }
  check_graph(g);
  ad::Var ligand = run_stack(
      ad::matmul(tape.constant(g.ligand_features), p.embed_ligand),
      tape.constant(g.ligand_adj), p.stacks[0]);
  ad::Var protein = run_stack(
      ad::matmul(tape.constant(g.protein_features), p.embed_protein),
      tape.constant(g.protein_adj), p.stacks[1]);
  ad::Var readout = ad::concat_cols(ad::col_sum(ligand), ad::col_sum(protein));
  return run_mlp(readout, p.mlp, p.source->config.head_kind);
}

ad::Var forward(ad::Tape &tape, const ComplexGraph &g, const BoundParams &p) {
  if (p.source == nullptr) throw UsageError("forward with unbound parameters");
  return p.source->config.model_kind == ModelKind::kFused
             ? forward_gnnf(tape, g, p)
             : forward_gnnp(tape, g, p);
}

Matrix ligand_embedding_gnnp(const ComplexGraph &g, const ModelParams &params) {
  ad::Tape tape;
  BoundParams p = bind(tape, params, false);
  if (p.stacks.size() != 2) throw UsageError("not a parallel model");
  ad::Var ligand = run_stack(
      ad::matmul(tape.constant(g.ligand_features), p.embed_ligand),
      tape.constant(g.ligand_adj), p.stacks[0]);
  return ad::col_sum(ligand).value();
}

double score(const ComplexGraph &g, const ModelParams &params) {
  ad::Tape tape;
  return forward(tape, g, bind(tape, params, false)).item();
}

double predict(double score, HeadKind head) {
  if (head == HeadKind::kRegression) return std::max(score, 0.0);
  return ad::sigmoid(std::clamp(score, -40.0, 40.0));
}

void clamp_params(ModelParams &params) {
  if (params.config.model_kind == ModelKind::kFused && params.sigma.size() == 1) {
    params.sigma.values[0] = std::max(params.sigma.values[0], kMinSigma);
  }
}

}  // namespace plgat
