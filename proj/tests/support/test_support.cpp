// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "plgat/featurize.hpp"

namespace plgat::testing {

MolecularStructure make_ligand(const std::vector<Element> &elements,
                               const std::vector<Vec3> &positions,
                               const std::vector<Bond> &bonds, std::string id) {
  MolecularStructure m;
  m.kind = MoleculeKind::kLigand;
  m.source_id = std::move(id);
  for (std::size_t k = 0; k < elements.size(); ++k) {
    Atom a;
    a.element = elements[k];
    a.position = k < positions.size() ? positions[k] : Vec3{1.5 * k, 0, 0};
    m.atoms.push_back(a);
  }
  m.bonds = bonds;
  return m;
}

MolecularStructure make_protein(const std::vector<Element> &elements,
                                const std::vector<Vec3> &positions,
                                const std::vector<std::string> &residues,
                                std::string id) {
  MolecularStructure m;
  m.kind = MoleculeKind::kProtein;
  m.source_id = std::move(id);
  for (std::size_t k = 0; k < elements.size(); ++k) {
    Atom a;
    a.element = elements[k];
    a.position = positions[k];
    a.residue_name = k < residues.size() ? residues[k] : "ALA";
    m.atoms.push_back(a);
  }
  return m;
}

MolecularStructure benzene() {
  std::vector<Vec3> pos;
  std::vector<Bond> bonds;
  for (std::size_t k = 0; k < 6; ++k) {
    const double t = std::numbers::pi / 3.0 * static_cast<double>(k);
    pos.push_back({1.39 * std::cos(t), 1.39 * std::sin(t), 0.0});
    bonds.push_back({k, (k + 1) % 6, BondOrder::kAromatic});
  }
  return make_ligand(std::vector<Element>(6, Element::kC), pos, bonds,
                     "benzene");
}

ComplexGraph synthetic_complex(std::mt19937_64 &rng, const std::string &id,
                               int n_contacts, const LabelValue &label) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<Element> ligand_pool = {Element::kC, Element::kC,
                                            Element::kN, Element::kO};
  std::vector<Element> lig_elements;
  std::vector<Vec3> lig_pos;
  std::vector<Bond> lig_bonds;
  for (std::size_t k = 0; k < 4; ++k) {
    lig_elements.push_back(ligand_pool[rng() % ligand_pool.size()]);
    lig_pos.push_back({1.5 * static_cast<double>(k), 0.0, 0.0});
    if (k > 0) lig_bonds.push_back({k - 1, k, BondOrder::kSingle});
  }
  MolecularStructure ligand = make_ligand(lig_elements, lig_pos, lig_bonds, id);

  std::vector<Element> p_elements;
  std::vector<Vec3> p_pos;
  std::vector<std::string> p_res;
  auto around_axis = [&](double x, double radius) {
    const double t = 2.0 * std::numbers::pi * unit(rng);
    return Vec3{x, radius * std::cos(t), radius * std::sin(t)};
  };
  for (int c = 0; c < n_contacts; ++c) {
    // Contacts sit beside a ligand atom, 2.6-3.0 A off the chain axis.
    const double x = 1.5 * static_cast<double>(rng() % 4);
    p_pos.push_back(around_axis(x, 2.6 + 0.4 * unit(rng)));
    const bool oxygen = rng() % 2 == 0;
    p_elements.push_back(oxygen ? Element::kO : Element::kN);
    p_res.push_back(oxygen ? "SER" : "ASN");
  }
  for (int f = 0; f < 4; ++f) {
    p_pos.push_back(around_axis(4.5 * unit(rng), 6.0 + 1.5 * unit(rng)));
    p_elements.push_back(Element::kC);
    p_res.push_back(f % 2 == 0 ? "LEU" : "VAL");
  }
  MolecularStructure protein = make_protein(p_elements, p_pos, p_res, "synth");
  MolecularStructure pocket =
      infer_protein_bonds(crop_pocket(protein, ligand, kDefaultPocketCutoff));
  ComplexGraph g = build_complex_graph(pocket, perceive_ligand(ligand), label);
  g.sample_id = id;
  g.target_id = "synth";
  return g;
}

std::vector<ComplexGraph> synthetic_classification_set(std::uint64_t seed,
                                                       int n_each) {
  std::mt19937_64 rng(seed);
  std::vector<ComplexGraph> out;
  for (int k = 0; k < n_each; ++k) {
    const int contacts = 1 + static_cast<int>(rng() % 3);
    out.push_back(synthetic_complex(rng, "pos" + std::to_string(k), contacts,
                                    {LabelKind::kActivity, 1.0}));
    out.push_back(synthetic_complex(rng, "neg" + std::to_string(k), 0,
                                    {LabelKind::kActivity, 0.0}));
  }
  return out;
}

std::vector<ComplexGraph> synthetic_regression_set(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<ComplexGraph> out;
  for (int k = 0; k < n; ++k) {
    const int contacts = static_cast<int>(rng() % 4);
    ComplexGraph g = synthetic_complex(rng, "reg" + std::to_string(k), contacts,
                                       {LabelKind::kAffinity, 0.0});
    g.label.value = 0.5 * static_cast<double>(g.interactions.size());
    out.push_back(std::move(g));
  }
  return out;
}

Matrix random_matrix(std::mt19937_64 &rng, std::size_t rows, std::size_t cols,
                     double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double &v : m.values) v = dist(rng);
  return m;
}

Matrix random_adjacency(std::mt19937_64 &rng, std::size_t n, double p) {
  std::bernoulli_distribution edge(p);
  Matrix a = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (edge(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

GatBlockParams random_block(std::mt19937_64 &rng, std::size_t dim) {
  return {random_matrix(rng, dim, dim), random_matrix(rng, dim, dim),
          random_matrix(rng, 2 * dim, 1), random_matrix(rng, 1, 1)};
}

ComplexGraph random_graph(std::mt19937_64 &rng, std::size_t n_protein,
                          std::size_t n_ligand, bool with_interactions) {
  std::uniform_real_distribution<double> dist(2.5, 5.0);
  ComplexGraph g;
  g.sample_id = "random";
  g.target_id = "random";
  g.label = {LabelKind::kActivity, static_cast<double>(rng() % 2)};
  g.pocket.kind = MoleculeKind::kProtein;
  g.pocket.atoms.resize(n_protein);
  for (auto &a : g.pocket.atoms) a.element = Element::kC;
  g.ligand.base.kind = MoleculeKind::kLigand;
  g.ligand.base.atoms.resize(n_ligand);
  g.ligand.atoms.resize(n_ligand);
  g.protein_adj = random_adjacency(rng, n_protein);
  g.ligand_adj = random_adjacency(rng, n_ligand);
  const std::size_t n = n_protein + n_ligand;
  g.covalent_adj = Matrix(n, n);
  for (std::size_t i = 0; i < n_protein; ++i) {
    for (std::size_t j = 0; j < n_protein; ++j) g.covalent_adj(i, j) = g.protein_adj(i, j);
  }
  for (std::size_t i = 0; i < n_ligand; ++i) {
    for (std::size_t j = 0; j < n_ligand; ++j) {
      g.covalent_adj(n_protein + i, n_protein + j) = g.ligand_adj(i, j);
    }
  }
  if (with_interactions) {
    for (std::size_t p = 0; p < n_protein; ++p) {
      for (std::size_t l = 0; l < n_ligand; ++l) {
        if (rng() % 2 == 0) g.interactions.push_back({p, l, dist(rng)});
      }
    }
    if (g.interactions.empty()) g.interactions.push_back({0, 0, dist(rng)});
  }
  g.ligand_features = random_matrix(rng, n_ligand, feature_schema::kLigandWidth);
  g.protein_features =
      random_matrix(rng, n_protein, feature_schema::kProteinWidth);
  return g;
}

ComplexGraph permute_graph(const ComplexGraph &g,
                           const std::vector<std::size_t> &pp,
                           const std::vector<std::size_t> &lp) {
  const std::size_t np = pp.size();
  const std::size_t nl = lp.size();
  std::vector<std::size_t> p_inv(np);
  std::vector<std::size_t> l_inv(nl);
  for (std::size_t k = 0; k < np; ++k) p_inv[pp[k]] = k;
  for (std::size_t k = 0; k < nl; ++k) l_inv[lp[k]] = k;

  ComplexGraph out = g;
  auto permute_rows = [](const Matrix &m, const std::vector<std::size_t> &perm) {
    Matrix r(m.rows, m.cols);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      std::copy(m.row(perm[k]).begin(), m.row(perm[k]).end(), r.row(k).begin());
    }
    return r;
  };
  auto permute_square = [](const Matrix &m, const std::vector<std::size_t> &perm) {
    Matrix r(m.rows, m.cols);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t j = 0; j < perm.size(); ++j) r(i, j) = m(perm[i], perm[j]);
    }
    return r;
  };
  out.protein_features = permute_rows(g.protein_features, pp);
  out.ligand_features = permute_rows(g.ligand_features, lp);
  out.protein_adj = permute_square(g.protein_adj, pp);
  out.ligand_adj = permute_square(g.ligand_adj, lp);
  std::vector<std::size_t> joint(np + nl);
  for (std::size_t k = 0; k < np; ++k) joint[k] = pp[k];
  for (std::size_t k = 0; k < nl; ++k) joint[np + k] = np + lp[k];
  out.covalent_adj = permute_square(g.covalent_adj, joint);
  for (InteractionPair &pair : out.interactions) {
    pair.protein = p_inv[pair.protein];
    pair.ligand = l_inv[pair.ligand];
  }
  for (std::size_t k = 0; k < np; ++k) out.pocket.atoms[k] = g.pocket.atoms[pp[k]];
  for (std::size_t k = 0; k < nl; ++k) {
    out.ligand.base.atoms[k] = g.ligand.base.atoms[lp[k]];
    out.ligand.atoms[k] = g.ligand.atoms[lp[k]];
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::mt19937_64 &rng,
                                            std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

namespace oracle {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat multiply(const Mat &a, const Matrix &w) {
  Mat out(a.size(), std::vector<double>(w.cols, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t c = 0; c < w.cols; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < w.rows; ++k) s += a[i][k] * w(k, c);
      out[i][c] = s;
    }
  }
  return out;
}

Mat run_stack(Mat h, const Mat &adjacency,
              const std::vector<GatBlockParams> &stack) {
  for (const GatBlockParams &p : stack) h = gat_block(h, adjacency, p);
  return h;
}

double run_mlp(std::vector<double> x, const ModelParams &params) {
  for (std::size_t l = 0; l < params.mlp.size(); ++l) {
    const DenseLayer &layer = params.mlp[l];
    std::vector<double> y(layer.weight.cols, 0.0);
    for (std::size_t c = 0; c < layer.weight.cols; ++c) {
      double s = layer.bias(0, c);
      for (std::size_t k = 0; k < layer.weight.rows; ++k) s += x[k] * layer.weight(k, c);
      y[c] = (l + 1 < params.mlp.size()) ? std::max(s, 0.0) : s;
    }
    x = std::move(y);
  }
  return params.config.head_kind == HeadKind::kRegression ? std::max(x[0], 0.0)
                                                          : x[0];
}

}  // namespace

Mat to_mat(const Matrix &m) {
  Mat out(m.rows, std::vector<double>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out[i][j] = m(i, j);
  }
  return out;
}

Mat gat_block(const Mat &h, const Mat &adjacency, const GatBlockParams &p) {
  const std::size_t n = h.size();
  const std::size_t d = p.transform.cols;
  // z_i = h_i W
  Mat z = multiply(h, p.transform);
  // e_ij = z_i^T W_a z_j + z_j^T W_a z_i
  Mat e(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double forward = 0.0;
      double backward = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = 0; l < d; ++l) {
          forward += z[i][k] * p.attention(k, l) * z[j][l];
          backward += z[j][k] * p.attention(k, l) * z[i][l];
        }
      }
      e[i][j] = forward + backward;
    }
  }
  // a_ij = softmax_j(e_ij over neighbours) * A_ij
  Mat a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency[i][j] > 0.0) denom += std::exp(e[i][j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency[i][j] > 0.0) a[i][j] = std::exp(e[i][j]) / denom * adjacency[i][j];
    }
  }
  Mat out(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> msg(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i][j] * z[j][k];
      msg[k] = std::max(s, 0.0);
    }
    double gate_in = p.gate_bias(0, 0);
    for (std::size_t k = 0; k < d; ++k) {
      gate_in += p.gate(k, 0) * h[i][k] + p.gate(d + k, 0) * msg[k];
    }
    const double g = logistic(gate_in);
    for (std::size_t k = 0; k < d; ++k) out[i][k] = g * h[i][k] + (1.0 - g) * msg[k];
  }
  return out;
}

double forward_gnnf(const ComplexGraph &g, const ModelParams &params) {
  const std::size_t np = g.num_protein();
  const std::size_t nl = g.num_ligand();
  Mat x = multiply(to_mat(g.protein_features), params.embed_protein);
  Mat xl = multiply(to_mat(g.ligand_features), params.embed_ligand);
  x.insert(x.end(), xl.begin(), xl.end());

  Mat covalent = to_mat(g.covalent_adj);
  Mat contacts = covalent;
  const double mu = params.mu(0, 0);
  const double sigma = params.sigma(0, 0);
  for (const InteractionPair &pair : g.interactions) {
    const double w = std::exp(-(pair.distance - mu) * (pair.distance - mu) / sigma);
    contacts[pair.protein][np + pair.ligand] += w;
    contacts[np + pair.ligand][pair.protein] += w;
  }
  Mat h2 = run_stack(x, contacts, params.stacks[0]);
  Mat h1 = run_stack(x, covalent, params.stacks[0]);
  std::vector<double> readout(params.config.dim, 0.0);
  for (std::size_t i = np; i < np + nl; ++i) {
    for (std::size_t k = 0; k < readout.size(); ++k) readout[k] += h2[i][k] - h1[i][k];
  }
  return run_mlp(readout, params);
}

double forward_gnnp(const ComplexGraph &g, const ModelParams &params) {
  Mat lig = run_stack(multiply(to_mat(g.ligand_features), params.embed_ligand),
                      to_mat(g.ligand_adj), params.stacks[0]);
  Mat prot = run_stack(multiply(to_mat(g.protein_features), params.embed_protein),
                       to_mat(g.protein_adj), params.stacks[1]);
  std::vector<double> readout(2 * params.config.dim, 0.0);
  for (const auto &row : lig) {
    for (std::size_t k = 0; k < row.size(); ++k) readout[k] += row[k];
  }
  for (const auto &row : prot) {
    for (std::size_t k = 0; k < row.size(); ++k) readout[params.config.dim + k] += row[k];
  }
  return run_mlp(readout, params);
}

}  // namespace oracle

}  // namespace plgat::testing
