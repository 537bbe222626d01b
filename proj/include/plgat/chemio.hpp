// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// Molecular structure input: a PDB subset for proteins, SDF/MOL V2000 for
// ligands, and rule-based chemical perception of ligand atoms.

#ifndef PLGAT_CHEMIO_HPP_
#define PLGAT_CHEMIO_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace plgat {

// Closed element table. Order is the featurization order.
enum class Element : std::uint8_t {
  kC,
  kN,
  kO,
  kS,
  kF,
  kP,
  kCl,
  kBr,
  kI,
  kB,
  kH,
  kOther,
};

inline constexpr int kNumElements = 12;

// Case-insensitive lookup ("CL", "Cl" and "cl" are chlorine). Deuterium maps
// to hydrogen; anything outside the table maps to kOther.
Element element_from_symbol(std::string_view symbol);
std::string_view element_symbol(Element e);
double element_mass(Element e);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3 &, const Vec3 &) = default;
};

double distance(const Vec3 &a, const Vec3 &b);
double distance_squared(const Vec3 &a, const Vec3 &b);

struct Atom {
  Element element = Element::kOther;
  Vec3 position;
  int formal_charge = 0;
  // Three-letter residue code; empty for ligand atoms.
  std::string residue_name;

  bool is_heavy() const { return element != Element::kH; }

  friend bool operator==(const Atom &, const Atom &) = default;
};

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Bond {
  std::size_t i = 0;
  std::size_t j = 0;
  BondOrder order = BondOrder::kSingle;

  friend bool operator==(const Bond &, const Bond &) = default;
};

enum class MoleculeKind : std::uint8_t { kProtein, kLigand };

struct MolecularStructure {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source_id;
  MoleculeKind kind = MoleculeKind::kLigand;

  std::size_t size() const { return atoms.size(); }

  friend bool operator==(const MolecularStructure &,
                         const MolecularStructure &) = default;
};

// Throws DataError on out-of-range or self bonds, duplicate pairs,
// non-finite coordinates, charges outside [-4, 4], or an empty ligand.
void validate(const MolecularStructure &mol);

enum class Hybridization : std::uint8_t { kSP, kSP2, kSP3, kOther };

std::string_view hybridization_name(Hybridization h);
// Throws DataError for unknown names.
Hybridization hybridization_from_name(std::string_view name);

struct AtomPerception {
  int degree = 0;  // heavy neighbours
  int num_hydrogens = 0;  // explicit H neighbours + implicit
  int implicit_valence = 0;  // implicit hydrogens only
  bool aromatic = false;
  bool in_ring = false;
  Hybridization hybridization = Hybridization::kOther;

  friend bool operator==(const AtomPerception &,
                         const AtomPerception &) = default;
};

struct PerceivedLigand {
  MolecularStructure base;
  std::vector<AtomPerception> atoms;  // parallel to base.atoms

  std::size_t size() const { return base.atoms.size(); }

  friend bool operator==(const PerceivedLigand &,
                         const PerceivedLigand &) = default;
};

// ATOM records of the first model. Drops HETATM, waters (HOH/WAT),
// hydrogens, and alternate locations other than blank/'A'.
MolecularStructure parse_pdb(std::string_view text,
                             std::string source_id = {});

// One structure per V2000 record; records are separated by "$$$$".
std::vector<MolecularStructure> parse_sdf(std::string_view text,
                                          std::string_view source_id = {});

// Canonical V2000 writer. Charges go to M  CHG lines.
std::string write_sdf(const MolecularStructure &mol);

// Default valence used for implicit hydrogens: C 4, N 3, O 2, S 2, P 3,
// halogens 1, B 3, H 1, other 0.
int default_valence(Element e);

PerceivedLigand perceive_ligand(const MolecularStructure &mol);

// Removes hydrogen atoms, keeping their counts in the perception record.
PerceivedLigand strip_hydrogens(const PerceivedLigand &lig);

// Atoms that lie on at least one simple cycle of the bond graph.
std::vector<bool> ring_atoms(std::size_t num_atoms,
                             const std::vector<Bond> &bonds);

// Single bonds between heavy atoms at most 1.9 A apart (2.4 A when either
// atom is sulfur). Existing bonds are replaced.
MolecularStructure infer_protein_bonds(const MolecularStructure &mol);

// Heavy atoms plus implicit/explicit hydrogen counts.
double molecular_weight(const PerceivedLigand &lig);

}  // namespace plgat

#endif  // PLGAT_CHEMIO_HPP_
