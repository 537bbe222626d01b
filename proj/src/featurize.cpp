// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/featurize.hpp"

#include <algorithm>

namespace plgat {

namespace feature_schema {

std::size_t residue_index(std::string_view residue) {
  auto it = std::find(kResidues.begin(), kResidues.end(), residue);
  return static_cast<std::size_t>(it - kResidues.begin());
}

}  // namespace feature_schema

namespace {

// Counts past the last bin land in the last bin.
std::size_t clamp_bin(int value, std::size_t bins) {
  if (value <= 0) return 0;
  return std::min(static_cast<std::size_t>(value), bins - 1);
}

}  // namespace

NodeFeatureMatrix featurize_ligand(const PerceivedLigand &lig) {
  namespace fs = feature_schema;
  NodeFeatureMatrix m(lig.size(), fs::kLigandWidth);
  for (std::size_t r = 0; r < lig.size(); ++r) {
    const Atom &atom = lig.base.atoms[r];
    const AtomPerception &p = lig.atoms[r];
    auto row = m.row(r);
    row[fs::kElementOffset + static_cast<std::size_t>(atom.element)] = 1.0;
    row[fs::kDegreeOffset + clamp_bin(p.degree, fs::kDegreeBins)] = 1.0;
    row[fs::kNumHOffset + clamp_bin(p.num_hydrogens, fs::kNumHBins)] = 1.0;
    row[fs::kImplicitValenceOffset +
        clamp_bin(p.implicit_valence, fs::kImplicitValenceBins)] = 1.0;
    row[fs::kHybridizationOffset + static_cast<std::size_t>(p.hybridization)] =
        1.0;
    int charge = std::clamp(atom.formal_charge, -2, 2);
    row[fs::kChargeOffset + static_cast<std::size_t>(charge + 2)] = 1.0;
    row[fs::kAromaticOffset] = p.aromatic ? 1.0 : 0.0;
    row[fs::kInRingOffset] = p.in_ring ? 1.0 : 0.0;
  }
  return m;
}

NodeFeatureMatrix featurize_protein(const MolecularStructure &pocket) {
  namespace fs = feature_schema;
  NodeFeatureMatrix m(pocket.size(), fs::kProteinWidth);
  for (std::size_t r = 0; r < pocket.size(); ++r) {
    const Atom &atom = pocket.atoms[r];
    auto row = m.row(r);
    row[fs::kElementOffset + static_cast<std::size_t>(atom.element)] = 1.0;
    row[fs::kResidueOffset + fs::residue_index(atom.residue_name)] = 1.0;
  }
  return m;
}

}  // namespace plgat
