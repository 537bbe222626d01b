// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// Labeled protein-ligand complex graphs: pocket cropping, adjacency
// construction, pose labeling, label arithmetic, JSON-Lines interchange and
// train/test splits.

#ifndef PLGAT_COMPLEXBUILD_HPP_
#define PLGAT_COMPLEXBUILD_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plgat/chemio.hpp"
#include "plgat/error.hpp"
#include "plgat/matrix.hpp"

namespace plgat {

inline constexpr double kDefaultPocketCutoff = 8.0;
inline constexpr double kDefaultInteractionCutoff = 5.0;
inline constexpr double kActiveMaxRmsd = 2.0;
inline constexpr double kInactiveMinRmsd = 4.0;

enum class LabelKind : std::uint8_t { kActivity, kAffinity, kPic50, kDocking };

std::string_view label_kind_name(LabelKind kind);
LabelKind label_kind_from_name(std::string_view name);

struct LabelValue {
  LabelKind kind = LabelKind::kActivity;
  double value = 0.0;

  friend bool operator==(const LabelValue &, const LabelValue &) = default;
};

struct InteractionPair {
  std::size_t protein = 0;
  std::size_t ligand = 0;
  double distance = 0.0;

  friend bool operator==(const InteractionPair &,
                         const InteractionPair &) = default;
};

// One protein pocket / ligand pair. Node order in the joined graph is all
// pocket atoms first, then ligand atoms.
struct ComplexGraph {
  std::string sample_id;
  std::string target_id;
  int pose_rank = 0;
  LabelValue label;
  std::optional<double> rmsd;
  double interaction_cutoff = kDefaultInteractionCutoff;

  MolecularStructure pocket;  // with bonds
  PerceivedLigand ligand;     // heavy atoms only

  Matrix ligand_adj;     // N_L x N_L
  Matrix protein_adj;    // N_P x N_P
  Matrix covalent_adj;   // (N_P + N_L)^2, block diagonal
  std::vector<InteractionPair> interactions;
  Matrix ligand_features;   // N_L x 41
  Matrix protein_features;  // N_P x 33

  std::size_t num_ligand() const { return ligand.size(); }
  std::size_t num_protein() const { return pocket.size(); }

  friend bool operator==(const ComplexGraph &, const ComplexGraph &) = default;
};

class EmptyPocketError : public DataError {
 public:
  explicit EmptyPocketError(std::string sample_id)
      : DataError("empty pocket for sample '" + sample_id + "'"),
        sample_id_(std::move(sample_id)) {}

  const std::string &sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

// Protein atoms within `cutoff` of any ligand atom, original order kept.
// Throws EmptyPocketError naming the ligand's source id.
MolecularStructure crop_pocket(const MolecularStructure &protein,
                               const MolecularStructure &ligand,
                               double cutoff = kDefaultPocketCutoff);

// No superposition: both poses must share the reference frame and atom order.
double heavy_atom_rmsd(const MolecularStructure &pose_a,
                       const MolecularStructure &pose_b);

// 1 for rmsd <= 2 A, 0 for rmsd >= 4 A, nothing in between.
std::optional<int> label_pose_by_rmsd(double rmsd);

enum class AffinityMeasure : std::uint8_t { kKi, kKd };

LabelValue affinity_label(AffinityMeasure measure, double molar);
LabelValue pic50_label(double ic50_molar);
// Mean of the per-measurement pIC50 values.
LabelValue pic50_label(const std::vector<double> &ic50_molar);

ComplexGraph build_complex_graph(
    const MolecularStructure &pocket, const PerceivedLigand &ligand,
    const LabelValue &label,
    double interaction_cutoff = kDefaultInteractionCutoff);

// JSON-Lines interchange, one record per line.
std::string to_json_line(const ComplexGraph &graph);
ComplexGraph from_json_line(std::string_view line, std::size_t line_number = 0);

void write_dataset(std::ostream &out, const std::vector<ComplexGraph> &graphs);
void write_dataset(const std::filesystem::path &path,
                   const std::vector<ComplexGraph> &graphs);
std::vector<ComplexGraph> read_dataset(std::istream &in);
std::vector<ComplexGraph> read_dataset(const std::filesystem::path &path);

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

DatasetSplit split_dataset(const std::vector<std::string> &ids,
                           double ratio = 0.8, std::uint64_t seed = 0);

// Indices of a class-balanced subset of activity labels: the majority class
// is downsampled to the minority count. Returned in ascending order.
std::vector<std::size_t> balanced_subset(const std::vector<int> &labels,
                                         std::uint64_t seed);

}  // namespace plgat

#endif  // PLGAT_COMPLEXBUILD_HPP_
