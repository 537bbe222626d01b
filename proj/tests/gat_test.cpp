// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/gat.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "plgat/error.hpp"
#include "test_support.hpp"

namespace plgat {
namespace {

using testing::random_matrix;

struct BlockRun {
  ad::Tape tape;
  GatBlockTrace trace;

  BlockRun(const Matrix &h, const Matrix &a, const GatBlockParams &p) {
    BoundBlock bb{tape.constant(p.transform), tape.constant(p.attention),
                  tape.constant(p.gate), tape.constant(p.gate_bias)};
    trace = gat_block_traced(tape.constant(h), tape.constant(a), bb);
  }
};

GatBlockParams zero_gate_block(std::size_t d) {
  return {Matrix::identity(d), Matrix::identity(d), Matrix(2 * d, 1),
          Matrix(1, 1)};
}

TEST(GatBlock, BilinearLogitsOfEqualUnitVectors) {
  Matrix h(2, 3, {1, 0, 0, 1, 0, 0});
  BlockRun run(h, Matrix(2, 2, 1.0), zero_gate_block(3));
  const Matrix &e = run.trace.logits.value();
  for (double v : e.values) EXPECT_EQ(v, 2.0);
}

TEST(GatBlock, SingleNodeMidpointGate) {
  std::mt19937_64 rng(1);
  const std::size_t d = 4;
  Matrix h = random_matrix(rng, 1, d);
  GatBlockParams p = zero_gate_block(d);
  p.transform = random_matrix(rng, d, d);
  p.attention = random_matrix(rng, d, d);
  BlockRun run(h, Matrix::identity(1), p);
  EXPECT_EQ(run.trace.attention.value(), Matrix::identity(1));
  EXPECT_EQ(run.trace.gate.value().values[0], 0.5);
  for (std::size_t k = 0; k < d; ++k) {
    double z = 0.0;
    for (std::size_t f = 0; f < d; ++f) z += h(0, f) * p.transform(f, k);
    EXPECT_NEAR(run.trace.output.value()(0, k), 0.5 * h(0, k) + 0.5 * std::max(z, 0.0),
                1e-15);
  }
}

TEST(GatBlock, PathGraphMatchesOracle) {
  std::mt19937_64 rng(2);
  Matrix path(3, 3, {1, 1, 0, 1, 1, 1, 0, 1, 1});
  for (int trial = 0; trial < 20; ++trial) {
    Matrix h = random_matrix(rng, 3, 5);
    GatBlockParams p = testing::random_block(rng, 5);
    BlockRun run(h, path, p);
    auto want = testing::oracle::gat_block(testing::oracle::to_mat(h),
                                           testing::oracle::to_mat(path), p);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_NEAR(run.trace.output.value()(i, k), want[i][k], 1e-10);
      }
    }
  }
}

TEST(GatBlock, WeightedAdjacencyMatchesOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    Matrix a = testing::random_adjacency(rng, n);
    for (double &v : a.values) {
      if (v > 0.0) v = 0.2 + 0.8 * (rng() % 1000) / 1000.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
    }
    Matrix h = random_matrix(rng, n, 3);
    GatBlockParams p = testing::random_block(rng, 3);
    BlockRun run(h, a, p);
    auto want = testing::oracle::gat_block(testing::oracle::to_mat(h),
                                           testing::oracle::to_mat(a), p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(run.trace.output.value()(i, k), want[i][k], 1e-10);
      }
    }
  }
}

TEST(GatBlock, AttentionInvariants) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 7;
    const std::size_t d = 1 + rng() % 5;
    Matrix a = testing::random_adjacency(rng, n, 0.4);
    BlockRun run(random_matrix(rng, n, d, -2, 2), a, testing::random_block(rng, d));
    const Matrix &e = run.trace.logits.value();
    const Matrix &att = run.trace.attention.value();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(e(i, j), e(j, i));
        if (a(i, j) == 0.0) EXPECT_EQ(att(i, j), 0.0);
        EXPECT_GE(att(i, j), 0.0);
        EXPECT_LE(att(i, j), a(i, j));
      }
    }
    for (double g : run.trace.gate.value().values) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(GatBlock, ShapeErrors) {
  ad::Tape t;
  GatBlockParams p = zero_gate_block(3);
  BoundBlock bb{t.constant(p.transform), t.constant(p.attention), t.constant(p.gate),
                t.constant(p.gate_bias)};
  EXPECT_THROW(gat_block(t.constant(Matrix(2, 3)), t.constant(Matrix::identity(3)), bb),
               ShapeError);
  EXPECT_THROW(gat_block(t.constant(Matrix(2, 4)), t.constant(Matrix::identity(2)), bb),
               ShapeError);
}

ModelParams random_params(ModelKind model, HeadKind head, std::uint64_t seed,
                          std::size_t dim = 5) {
  ModelConfig mc;
  mc.model_kind = model;
  mc.head_kind = head;
  mc.dim = dim;
  mc.hidden = {7, 3};
  ModelParams p = init_params(mc, seed);
  std::mt19937_64 rng(seed + 1000);
  for (auto &[name, t] : p.tensors()) {
    if (name == "mu" || name == "sigma") continue;
    *t = random_matrix(rng, t->rows, t->cols, -0.6, 0.6);
  }
  if (head == HeadKind::kRegression) p.mlp.back().bias.values[0] = 3.0;
  return p;
}

TEST(Forward, FusedMatchesOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const HeadKind head = trial % 2 ? HeadKind::kRegression : HeadKind::kClassification;
    ModelParams p = random_params(ModelKind::kFused, head, trial);
    ComplexGraph g = testing::random_graph(rng, 1 + rng() % 3, 1 + rng() % 3, true);
    EXPECT_NEAR(score(g, p), testing::oracle::forward_gnnf(g, p), 1e-10);
  }
}

TEST(Forward, ParallelMatchesOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const HeadKind head = trial % 2 ? HeadKind::kRegression : HeadKind::kClassification;
    ModelParams p = random_params(ModelKind::kParallel, head, trial);
    ComplexGraph g = testing::random_graph(rng, 1 + rng() % 3, 1 + rng() % 3, true);
    EXPECT_NEAR(score(g, p), testing::oracle::forward_gnnp(g, p), 1e-10);
  }
}

TEST(Forward, FusedZeroInteractionScoreIsConstant) {
  std::mt19937_64 rng(7);
  ModelParams p = random_params(ModelKind::kFused, HeadKind::kClassification, 7, 8);
  const double ref = score(testing::random_graph(rng, 3, 2, false), p);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexGraph g = testing::random_graph(rng, 1 + rng() % 6, 1 + rng() % 6, false);
    EXPECT_EQ(score(g, p), ref);
  }
}

TEST(Forward, PermutationInvariance) {
  std::mt19937_64 rng(8);
  for (ModelKind model : {ModelKind::kFused, ModelKind::kParallel}) {
    ModelParams p = random_params(model, HeadKind::kClassification, 8, 6);
    for (int trial = 0; trial < 30; ++trial) {
      ComplexGraph g = testing::random_graph(rng, 2 + rng() % 4, 2 + rng() % 4, true);
      ComplexGraph q = testing::permute_graph(
          g, testing::random_permutation(rng, g.num_protein()),
          testing::random_permutation(rng, g.num_ligand()));
      EXPECT_NEAR(score(g, p), score(q, p), 1e-9);
    }
  }
}

TEST(Forward, ParallelTowersAreIndependent) {
  std::mt19937_64 rng(9);
  ModelParams p = random_params(ModelKind::kParallel, HeadKind::kClassification, 9);
  ComplexGraph a = testing::random_graph(rng, 3, 4, true);
  ComplexGraph b = testing::random_graph(rng, 5, 4, false);
  b.ligand = a.ligand;
  b.ligand_features = a.ligand_features;
  b.ligand_adj = a.ligand_adj;
  EXPECT_EQ(ligand_embedding_gnnp(a, p), ligand_embedding_gnnp(b, p));
  // Interaction pairs play no part in the parallel model.
  ComplexGraph stripped = a;
  stripped.interactions.clear();
  EXPECT_EQ(score(a, p), score(stripped, p));
}

TEST(Forward, InteractionAdjacency) {
  std::mt19937_64 rng(10);
  ComplexGraph g = testing::random_graph(rng, 3, 3, false);
  g.interactions = {{0, 0, 4.0}, {2, 1, 5.0}};
  ad::Tape t;
  ad::Var mu = t.constant(Matrix::scalar(4.0));
  ad::Var sigma = t.constant(Matrix::scalar(1.0));
  Matrix a2 = interaction_adjacency(t, g, mu, sigma).value();
  EXPECT_EQ(a2(0, 3), 1.0);
  EXPECT_EQ(a2(3, 0), 1.0);
  EXPECT_DOUBLE_EQ(a2(2, 4), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(a2(4, 2), std::exp(-1.0));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_GE(a2(i, j), g.covalent_adj(i, j));
      if ((i < 3) == (j < 3)) EXPECT_EQ(a2(i, j), g.covalent_adj(i, j));
    }
  }
}

TEST(Predict, Heads) {
  EXPECT_EQ(predict(0.0, HeadKind::kClassification), 0.5);
  EXPECT_EQ(predict(-3.0, HeadKind::kRegression), 0.0);
  EXPECT_EQ(predict(2.5, HeadKind::kRegression), 2.5);
  const double hi = predict(1e6, HeadKind::kClassification);
  const double lo = predict(-1e6, HeadKind::kClassification);
  EXPECT_TRUE(std::isfinite(hi) && std::isfinite(lo));
  EXPECT_GT(hi, 0.999999);
  EXPECT_LT(lo, 1e-12);
}

TEST(Forward, RegressionOutputIsRectified) {
  std::mt19937_64 rng(11);
  ModelParams p = random_params(ModelKind::kFused, HeadKind::kRegression, 11);
  p.mlp.back().weight = Matrix(p.mlp.back().weight.rows, 1);
  p.mlp.back().bias.values[0] = -3.0;
  EXPECT_EQ(score(testing::random_graph(rng, 2, 2, true), p), 0.0);
}

TEST(Params, InitialisationRules) {
  ModelConfig mc;
  ModelParams p = init_params(mc, 42);
  EXPECT_EQ(p, init_params(mc, 42));
  EXPECT_NE(p, init_params(mc, 43));
  EXPECT_EQ(p.mu.values[0], 4.0);
  EXPECT_EQ(p.sigma.values[0], 1.0);
  ASSERT_EQ(p.stacks.size(), 1u);
  ASSERT_EQ(p.stacks[0].size(), 2u);
  for (const GatBlockParams &b : p.stacks[0]) EXPECT_EQ(b.gate_bias.values[0], 0.0);
  const double bound = std::sqrt(6.0 / (41.0 + 70.0));
  for (double v : p.embed_ligand.values) EXPECT_LE(std::abs(v), bound);
  ASSERT_EQ(p.mlp.size(), 3u);
  EXPECT_EQ(p.mlp[0].weight.rows, 70u);
  EXPECT_EQ(p.mlp[0].weight.cols, 128u);
  EXPECT_EQ(p.mlp[1].weight.cols, 64u);
  EXPECT_EQ(p.mlp[2].weight.cols, 1u);

  std::size_t total = 0;
  for (const auto &[name, t] : p.tensors()) total += t->values.size();
  EXPECT_EQ(total, p.parameter_count());
  EXPECT_EQ(p.tensors().front().first, "embed_ligand");
  EXPECT_EQ(p.tensors()[2].first, "stack.shared.0.transform");
}

TEST(Params, ParallelLayout) {
  ModelConfig mc;
  mc.model_kind = ModelKind::kParallel;
  ModelParams p = init_params(mc, 1);
  ASSERT_EQ(p.stacks.size(), 2u);
  EXPECT_EQ(p.mlp[0].weight.rows, 140u);
  for (const auto &[name, t] : p.tensors()) {
    EXPECT_NE(name, "mu");
    EXPECT_NE(name, "sigma");
  }
}

TEST(Params, SigmaClamp) {
  ModelConfig mc;
  ModelParams p = init_params(mc, 1);
  p.sigma.values[0] = -2.0;
  clamp_params(p);
  EXPECT_EQ(p.sigma.values[0], kMinSigma);
}

TEST(Params, KindNames) {
  EXPECT_EQ(model_kind_from_name("gnnp"), ModelKind::kParallel);
  EXPECT_EQ(head_kind_name(HeadKind::kRegression), "reg");
  EXPECT_THROW(model_kind_from_name("gnnx"), UsageError);
  EXPECT_THROW(head_kind_from_name("softmax"), UsageError);
}

}  // namespace
}  // namespace plgat
