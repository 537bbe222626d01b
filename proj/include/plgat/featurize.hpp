// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef PLGAT_FEATURIZE_HPP_
#define PLGAT_FEATURIZE_HPP_

#include <array>
#include <cstddef>
#include <string_view>

#include "plgat/chemio.hpp"
#include "plgat/matrix.hpp"

namespace plgat {

// Binary node features. Ligand rows: element(12) | degree 0..5 (6) |
// num_h 0..4 (5) | implicit valence 0..6 (7) | hybridization (4) |
// formal charge -2..+2 (5) | aromatic (1) | in_ring (1).
// Protein rows: element(12) | residue(21).
namespace feature_schema {

inline constexpr std::string_view kVersion = "plgat-atom-features-v1";

inline constexpr std::size_t kElementWidth = kNumElements;
inline constexpr std::size_t kDegreeBins = 6;
inline constexpr std::size_t kNumHBins = 5;
inline constexpr std::size_t kImplicitValenceBins = 7;
inline constexpr std::size_t kHybridizationBins = 4;
inline constexpr std::size_t kChargeBins = 5;
inline constexpr std::size_t kResidueBins = 21;

inline constexpr std::size_t kElementOffset = 0;
inline constexpr std::size_t kDegreeOffset = kElementOffset + kElementWidth;
inline constexpr std::size_t kNumHOffset = kDegreeOffset + kDegreeBins;
inline constexpr std::size_t kImplicitValenceOffset = kNumHOffset + kNumHBins;
inline constexpr std::size_t kHybridizationOffset =
    kImplicitValenceOffset + kImplicitValenceBins;
inline constexpr std::size_t kChargeOffset =
    kHybridizationOffset + kHybridizationBins;
inline constexpr std::size_t kAromaticOffset = kChargeOffset + kChargeBins;
inline constexpr std::size_t kInRingOffset = kAromaticOffset + 1;
inline constexpr std::size_t kLigandWidth = kInRingOffset + 1;

inline constexpr std::size_t kResidueOffset = kElementWidth;
inline constexpr std::size_t kProteinWidth = kResidueOffset + kResidueBins;

static_assert(kLigandWidth == 41);
static_assert(kProteinWidth == 33);

// The 20 standard amino acids; index 20 is "other".
inline constexpr std::array<std::string_view, 20> kResidues = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL"};

std::size_t residue_index(std::string_view residue);

}  // namespace feature_schema

// Binary matrix, one row per atom.
using NodeFeatureMatrix = Matrix;

NodeFeatureMatrix featurize_ligand(const PerceivedLigand &lig);
NodeFeatureMatrix featurize_protein(const MolecularStructure &pocket);

}  // namespace plgat

#endif  // PLGAT_FEATURIZE_HPP_
