// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/complexbuild.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "json.hpp"
#include "plgat/featurize.hpp"

namespace plgat {

namespace {

using nlohmann::json;

Matrix adjacency_with_self_loops(std::size_t n, const std::vector<Bond> &bonds) {
  Matrix adj = Matrix::identity(n);
  for (const Bond &b : bonds) {
    adj(b.i, b.j) = 1.0;
    adj(b.j, b.i) = 1.0;
  }
  return adj;
}

bool has_hydrogen(const MolecularStructure &mol) {
  return std::any_of(mol.atoms.begin(), mol.atoms.end(),
                     [](const Atom &a) { return !a.is_heavy(); });
}

json vec3_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json &j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("position must be [x, y, z]");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

template <typename T>
std::vector<T> array_of(const json &obj, const char *key, std::size_t n) {
  const json &arr = obj.at(key);
  if (!arr.is_array() || arr.size() != n) {
    throw std::invalid_argument(
        fmt::format("'{}' must be an array of length {}", key, n));
  }
  std::vector<T> out;
  out.reserve(n);
  for (const json &v : arr) out.push_back(v.get<T>());
  return out;
}

}  // namespace

std::string_view label_kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::kActivity:
      return "activity";
    case LabelKind::kAffinity:
      return "affinity";
    case LabelKind::kPic50:
      return "pic50";
    case LabelKind::kDocking:
      break;
  }
  return "docking";
}

LabelKind label_kind_from_name(std::string_view name) {
  for (LabelKind k : {LabelKind::kActivity, LabelKind::kAffinity,
                      LabelKind::kPic50, LabelKind::kDocking}) {
    if (label_kind_name(k) == name) return k;
  }
  throw DataError(fmt::format("unknown label kind '{}'", name));
}

MolecularStructure crop_pocket(const MolecularStructure &protein,
                               const MolecularStructure &ligand,
                               double cutoff) {
  if (protein.atoms.empty() || ligand.atoms.empty()) {
    throw DataError("crop_pocket needs non-empty protein and ligand");
  }
  if (!(cutoff > 0.0)) {
    throw UsageError(fmt::format("pocket cutoff must be positive, got {}",
                                 cutoff));
  }
  MolecularStructure pocket;
  pocket.kind = protein.kind;
  pocket.source_id = protein.source_id;
  const double cutoff2 = cutoff * cutoff;
  for (const Atom &atom : protein.atoms) {
    bool near = std::any_of(
        ligand.atoms.begin(), ligand.atoms.end(), [&](const Atom &l) {
          return distance_squared(atom.position, l.position) <= cutoff2;
        });
    if (near) pocket.atoms.push_back(atom);
  }
  if (pocket.atoms.empty()) throw EmptyPocketError(ligand.source_id);
  return pocket;
}

double heavy_atom_rmsd(const MolecularStructure &pose_a,
                       const MolecularStructure &pose_b) {
  std::vector<Vec3> a;
  std::vector<Vec3> b;
  for (const Atom &atom : pose_a.atoms) {
    if (atom.is_heavy()) a.push_back(atom.position);
  }
  for (const Atom &atom : pose_b.atoms) {
    if (atom.is_heavy()) b.push_back(atom.position);
  }
  if (a.size() != b.size()) {
    throw DataError(fmt::format("heavy-atom count mismatch: {} vs {}",
                                a.size(), b.size()));
  }
  if (a.empty()) throw DataError("rmsd of poses without heavy atoms");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += distance_squared(a[k], b[k]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

std::optional<int> label_pose_by_rmsd(double rmsd) {
  if (rmsd <= kActiveMaxRmsd) return 1;
  if (rmsd >= kInactiveMinRmsd) return 0;
  return std::nullopt;
}

LabelValue affinity_label(AffinityMeasure measure, double molar) {
  if (!(molar > 0.0) || !std::isfinite(molar)) {
    throw DataError(fmt::format("{} must be a positive molar value, got {}",
                                measure == AffinityMeasure::kKi ? "Ki" : "Kd",
                                molar));
  }
  return {LabelKind::kAffinity, -std::log10(molar)};
}

LabelValue pic50_label(double ic50_molar) {
  if (!(ic50_molar > 0.0) || !std::isfinite(ic50_molar)) {
    throw DataError(
        fmt::format("IC50 must be a positive molar value, got {}", ic50_molar));
  }
  return {LabelKind::kPic50, -std::log10(ic50_molar)};
}

LabelValue pic50_label(const std::vector<double> &ic50_molar) {
  if (ic50_molar.empty()) throw DataError("no IC50 measurements");
  double sum = 0.0;
  for (double v : ic50_molar) sum += pic50_label(v).value;
  return {LabelKind::kPic50, sum / static_cast<double>(ic50_molar.size())};
}

ComplexGraph build_complex_graph(const MolecularStructure &pocket,
                                 const PerceivedLigand &ligand,
                                 const LabelValue &label,
                                 double interaction_cutoff) {
  if (pocket.atoms.empty()) throw EmptyPocketError(ligand.base.source_id);
  if (ligand.atoms.size() != ligand.base.atoms.size()) {
    throw DataError("ligand perception does not cover every atom");
  }
  if (!(interaction_cutoff > 0.0)) {
    throw UsageError("interaction cutoff must be positive");
  }
  if (label.kind == LabelKind::kActivity && label.value != 0.0 &&
      label.value != 1.0) {
    throw DataError(fmt::format("activity label must be 0 or 1, got {}",
                                label.value));
  }
  if (!std::isfinite(label.value)) throw DataError("label is not finite");

  ComplexGraph g;
  g.label = label;
  g.interaction_cutoff = interaction_cutoff;
  g.pocket = pocket;
  g.ligand = has_hydrogen(ligand.base) ? strip_hydrogens(ligand) : ligand;
  validate(g.pocket);
  validate(g.ligand.base);
  g.sample_id = g.ligand.base.source_id;
  g.target_id = g.pocket.source_id;

  const std::size_t np = g.num_protein();
  const std::size_t nl = g.num_ligand();
  g.ligand_adj = adjacency_with_self_loops(nl, g.ligand.base.bonds);
  g.protein_adj = adjacency_with_self_loops(np, g.pocket.bonds);
  g.covalent_adj = Matrix(np + nl, np + nl);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < np; ++j) g.covalent_adj(i, j) = g.protein_adj(i, j);
  }
  for (std::size_t i = 0; i < nl; ++i) {
    for (std::size_t j = 0; j < nl; ++j) {
      g.covalent_adj(np + i, np + j) = g.ligand_adj(i, j);
    }
  }

  const double cutoff2 = interaction_cutoff * interaction_cutoff;
  for (std::size_t p = 0; p < np; ++p) {
    if (!g.pocket.atoms[p].is_heavy()) continue;
    for (std::size_t l = 0; l < nl; ++l) {
      double d2 = distance_squared(g.pocket.atoms[p].position,
                                   g.ligand.base.atoms[l].position);
      if (d2 > 0.0 && d2 <= cutoff2) g.interactions.push_back({p, l, std::sqrt(d2)});
    }
  }

  g.ligand_features = featurize_ligand(g.ligand);
  g.protein_features = featurize_protein(g.pocket);
  return g;
}

std::string to_json_line(const ComplexGraph &g) {
  json lig;
  json elements = json::array();
  json pos = json::array();
  json charges = json::array();
  for (const Atom &a : g.ligand.base.atoms) {
    elements.push_back(std::string(element_symbol(a.element)));
    pos.push_back(vec3_json(a.position));
    charges.push_back(a.formal_charge);
  }
  json bonds = json::array();
  for (const Bond &b : g.ligand.base.bonds) {
    bonds.push_back(json::array({b.i, b.j, static_cast<int>(b.order)}));
  }
  json aromatic = json::array();
  json in_ring = json::array();
  json degree = json::array();
  json num_h = json::array();
  json implicit_valence = json::array();
  json hybridization = json::array();
  for (const AtomPerception &p : g.ligand.atoms) {
    aromatic.push_back(p.aromatic);
    in_ring.push_back(p.in_ring);
    degree.push_back(p.degree);
    num_h.push_back(p.num_hydrogens);
    implicit_valence.push_back(p.implicit_valence);
    hybridization.push_back(std::string(hybridization_name(p.hybridization)));
  }
  lig["elements"] = std::move(elements);
  lig["pos"] = std::move(pos);
  lig["bonds"] = std::move(bonds);
  lig["formal_charge"] = std::move(charges);
  lig["aromatic"] = std::move(aromatic);
  lig["in_ring"] = std::move(in_ring);
  lig["degree"] = std::move(degree);
  lig["num_h"] = std::move(num_h);
  lig["implicit_valence"] = std::move(implicit_valence);
  lig["hybridization"] = std::move(hybridization);

  json prot;
  json pelements = json::array();
  json residues = json::array();
  json ppos = json::array();
  for (const Atom &a : g.pocket.atoms) {
    pelements.push_back(std::string(element_symbol(a.element)));
    residues.push_back(a.residue_name);
    ppos.push_back(vec3_json(a.position));
  }
  json pbonds = json::array();
  for (const Bond &b : g.pocket.bonds) pbonds.push_back(json::array({b.i, b.j}));
  prot["elements"] = std::move(pelements);
  prot["residues"] = std::move(residues);
  prot["pos"] = std::move(ppos);
  prot["bonds"] = std::move(pbonds);

  json rec;
  rec["id"] = g.sample_id;
  rec["target"] = g.target_id;
  rec["pose_rank"] = g.pose_rank;
  rec["label"] = {{"kind", std::string(label_kind_name(g.label.kind))},
                  {"value", g.label.value}};
  rec["ligand"] = std::move(lig);
  rec["protein"] = std::move(prot);
  rec["interaction_cutoff"] = g.interaction_cutoff;
  if (g.rmsd) rec["rmsd"] = *g.rmsd;
  return rec.dump();
}

ComplexGraph from_json_line(std::string_view line, std::size_t line_number) {
  try {
    json rec = json::parse(line);
    if (!rec.is_object()) throw std::invalid_argument("record is not an object");

    const json &lig = rec.at("ligand");
    const std::size_t nl = lig.at("elements").size();
    auto lelem = array_of<std::string>(lig, "elements", nl);
    auto lpos = array_of<json>(lig, "pos", nl);
    auto charge = array_of<int>(lig, "formal_charge", nl);
    auto aromatic = array_of<bool>(lig, "aromatic", nl);
    auto in_ring = array_of<bool>(lig, "in_ring", nl);
    auto degree = array_of<int>(lig, "degree", nl);
    auto num_h = array_of<int>(lig, "num_h", nl);
    auto implicit_valence = array_of<int>(lig, "implicit_valence", nl);
    auto hyb = array_of<std::string>(lig, "hybridization", nl);

    PerceivedLigand ligand;
    ligand.base.kind = MoleculeKind::kLigand;
    ligand.base.source_id = rec.at("id").get<std::string>();
    for (std::size_t k = 0; k < nl; ++k) {
      Atom atom;
      atom.element = element_from_symbol(lelem[k]);
      atom.position = vec3_from(lpos[k]);
      atom.formal_charge = charge[k];
      ligand.base.atoms.push_back(std::move(atom));
      AtomPerception p;
      p.aromatic = aromatic[k];
      p.in_ring = in_ring[k];
      p.degree = degree[k];
      p.num_hydrogens = num_h[k];
      p.implicit_valence = implicit_valence[k];
      p.hybridization = hybridization_from_name(hyb[k]);
      if (p.degree < 0 || p.num_hydrogens < 0 || p.implicit_valence < 0) {
        throw std::invalid_argument("negative atom count");
      }
      ligand.atoms.push_back(p);
    }
    for (const json &b : lig.at("bonds")) {
      if (!b.is_array() || b.size() != 3) {
        throw std::invalid_argument("ligand bond must be [i, j, order]");
      }
      int order = b.at(2).get<int>();
      if (order < 1 || order > 4) throw std::invalid_argument("bad bond order");
      ligand.base.bonds.push_back({b.at(0).get<std::size_t>(),
                                   b.at(1).get<std::size_t>(),
                                   static_cast<BondOrder>(order)});
    }

    const json &prot = rec.at("protein");
    const std::size_t np = prot.at("elements").size();
    auto pelem = array_of<std::string>(prot, "elements", np);
    auto residues = array_of<std::string>(prot, "residues", np);
    auto ppos = array_of<json>(prot, "pos", np);
    MolecularStructure pocket;
    pocket.kind = MoleculeKind::kProtein;
    pocket.source_id = rec.at("target").get<std::string>();
    for (std::size_t k = 0; k < np; ++k) {
      Atom atom;
      atom.element = element_from_symbol(pelem[k]);
      atom.position = vec3_from(ppos[k]);
      atom.residue_name = residues[k];
      pocket.atoms.push_back(std::move(atom));
    }
    for (const json &b : prot.at("bonds")) {
      if (!b.is_array() || b.size() != 2) {
        throw std::invalid_argument("protein bond must be [i, j]");
      }
      pocket.bonds.push_back(
          {b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>(),
           BondOrder::kSingle});
    }

    LabelValue label{label_kind_from_name(
                         rec.at("label").at("kind").get<std::string>()),
                     rec.at("label").at("value").get<double>()};
    double cutoff = rec.value("interaction_cutoff", kDefaultInteractionCutoff);

    ComplexGraph g = build_complex_graph(pocket, ligand, label, cutoff);
    g.pose_rank = rec.at("pose_rank").get<int>();
    if (rec.contains("rmsd")) g.rmsd = rec.at("rmsd").get<double>();
    return g;
  } catch (const json::exception &e) {
    throw ParseError(line_number, fmt::format("dataset record: {}", e.what()));
  } catch (const std::invalid_argument &e) {
    throw ParseError(line_number, fmt::format("dataset record: {}", e.what()));
  } catch (const DataError &e) {
    if (dynamic_cast<const ParseError *>(&e) != nullptr) throw;
    throw ParseError(line_number, fmt::format("dataset record: {}", e.what()));
  }
}

void write_dataset(std::ostream &out, const std::vector<ComplexGraph> &graphs) {
  for (const ComplexGraph &g : graphs) out << to_json_line(g) << '\n';
}

void write_dataset(const std::filesystem::path &path,
                   const std::vector<ComplexGraph> &graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  write_dataset(out, graphs);
  if (!out) throw DataError("failed writing dataset " + path.string());
}

std::vector<ComplexGraph> read_dataset(std::istream &in) {
  std::vector<ComplexGraph> graphs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    graphs.push_back(from_json_line(line, line_number));
  }
  return graphs;
}

std::vector<ComplexGraph> read_dataset(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return read_dataset(in);
}

DatasetSplit split_dataset(const std::vector<std::string> &ids, double ratio,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw UsageError(fmt::format("split ratio must be in (0, 1), got {}", ratio));
  }
  if (ids.size() < 2) throw DataError("need at least two ids to split");
  std::vector<std::string> shuffled = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto n_train = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);

  DatasetSplit split;
  split.seed = seed;
  split.train_ids.assign(shuffled.begin(),
                         shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                        shuffled.end());
  return split;
}

std::vector<std::size_t> balanced_subset(const std::vector<int> &labels,
                                         std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    (labels[k] == 1 ? pos : neg).push_back(k);
  }
  std::vector<std::size_t> &major = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  std::mt19937_64 rng(seed);
  std::shuffle(major.begin(), major.end(), rng);
  major.resize(keep);

  std::vector<std::size_t> out(pos);
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace plgat
