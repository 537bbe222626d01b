// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/chemio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "plgat/error.hpp"

namespace plgat {

namespace {

struct ElementInfo {
  Element element;
  std::string_view symbol;
  double mass;
  int valence;
};

constexpr std::array<ElementInfo, kNumElements> kElementTable = {{
    {Element::kC, "C", 12.011, 4},
    {Element::kN, "N", 14.007, 3},
    {Element::kO, "O", 15.999, 2},
    {Element::kS, "S", 32.06, 2},
    {Element::kF, "F", 18.998, 1},
    {Element::kP, "P", 30.974, 3},
    {Element::kCl, "Cl", 35.45, 1},
    {Element::kBr, "Br", 79.904, 1},
    {Element::kI, "I", 126.904, 1},
    {Element::kB, "B", 10.81, 3},
    {Element::kH, "H", 1.008, 1},
    // Unknown elements carry no mass or valence information.
    {Element::kOther, "other", 0.0, 0},
}};

const ElementInfo &info(Element e) {
  return kElementTable[static_cast<std::size_t>(e)];
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Fixed-column field; columns past the end of the line read as empty.
std::string_view columns(std::string_view line, std::size_t begin,
                         std::size_t end) {
  if (begin >= line.size()) return {};
  return line.substr(begin, std::min(end, line.size()) - begin);
}

bool parse_double(std::string_view field, double &out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   out);
  return ec == std::errc() && ptr == field.data() + field.size() &&
         std::isfinite(out);
}

bool parse_int(std::string_view field, int &out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() &&
           std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// PDB charge field, e.g. "1-" or "2+".
int parse_pdb_charge(std::string_view field) {
  field = trim(field);
  if (field.size() != 2 || !std::isdigit(static_cast<unsigned char>(field[0])))
    return 0;
  int magnitude = field[0] - '0';
  if (field[1] == '-') return -magnitude;
  if (field[1] == '+') return magnitude;
  return 0;
}

// V2000 atom-block charge code.
int sdf_charge_from_code(int code) {
  switch (code) {
    case 1:
      return 3;
    case 2:
      return 2;
    case 3:
      return 1;
    case 5:
      return -1;
    case 6:
      return -2;
    case 7:
      return -3;
    default:
      return 0;
  }
}

std::vector<std::vector<std::size_t>> neighbours(std::size_t n,
                                                 const std::vector<Bond> &bonds) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Bond &b : bonds) {
    adj[b.i].push_back(b.j);
    adj[b.j].push_back(b.i);
  }
  return adj;
}

}  // namespace

Element element_from_symbol(std::string_view symbol) {
  symbol = trim(symbol);
  if (symbol.empty() || symbol.size() > 2) return Element::kOther;
  std::string norm;
  norm += static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0])));
  if (symbol.size() == 2) {
    norm += static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[1])));
  }
  if (norm == "D") return Element::kH;
  for (const ElementInfo &e : kElementTable) {
    if (e.element != Element::kOther && e.symbol == norm) return e.element;
  }
  return Element::kOther;
}

std::string_view element_symbol(Element e) { return info(e).symbol; }

double element_mass(Element e) { return info(e).mass; }

int default_valence(Element e) { return info(e).valence; }

double distance_squared(const Vec3 &a, const Vec3 &b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

double distance(const Vec3 &a, const Vec3 &b) {
  return std::sqrt(distance_squared(a, b));
}

void validate(const MolecularStructure &mol) {
  if (mol.kind == MoleculeKind::kLigand && mol.atoms.empty()) {
    throw DataError(fmt::format("ligand '{}' has no atoms", mol.source_id));
  }
  for (std::size_t k = 0; k < mol.atoms.size(); ++k) {
    const Atom &a = mol.atoms[k];
    if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y) ||
        !std::isfinite(a.position.z)) {
      throw DataError(fmt::format("atom {} has non-finite coordinates", k));
    }
    if (a.formal_charge < -4 || a.formal_charge > 4) {
      throw DataError(
          fmt::format("atom {} formal charge {} outside [-4, 4]", k,
                      a.formal_charge));
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond &b : mol.bonds) {
    if (b.i >= mol.atoms.size() || b.j >= mol.atoms.size()) {
      throw DataError(fmt::format("bond ({}, {}) references missing atom", b.i,
                                  b.j));
    }
    if (b.i == b.j) {
      throw DataError(fmt::format("self bond on atom {}", b.i));
    }
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second) {
      throw DataError(fmt::format("duplicate bond ({}, {})", b.i, b.j));
    }
  }
}

std::string_view hybridization_name(Hybridization h) {
  switch (h) {
    case Hybridization::kSP:
      return "SP";
    case Hybridization::kSP2:
      return "SP2";
    case Hybridization::kSP3:
      return "SP3";
    case Hybridization::kOther:
      break;
  }
  return "other";
}

Hybridization hybridization_from_name(std::string_view name) {
  for (Hybridization h : {Hybridization::kSP, Hybridization::kSP2,
                          Hybridization::kSP3, Hybridization::kOther}) {
    if (hybridization_name(h) == name) return h;
  }
  throw DataError(fmt::format("unknown hybridization '{}'", name));
}

MolecularStructure parse_pdb(std::string_view text, std::string source_id) {
  MolecularStructure mol;
  mol.kind = MoleculeKind::kProtein;
  mol.source_id = std::move(source_id);

  auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    if (line.starts_with("ENDMDL")) break;
    if (!line.starts_with("ATOM  ")) continue;

    char alt_loc = line.size() > 16 ? line[16] : ' ';
    if (alt_loc != ' ' && alt_loc != 'A') continue;

    std::string residue(trim(columns(line, 17, 20)));
    if (residue == "HOH" || residue == "WAT") continue;

    std::string_view name = trim(columns(line, 12, 16));
    std::string_view symbol = trim(columns(line, 76, 78));
    Element element;
    if (!symbol.empty()) {
      element = element_from_symbol(symbol);
    } else {
      auto letter = std::find_if(name.begin(), name.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c));
      });
      element = letter == name.end()
                    ? Element::kOther
                    : element_from_symbol(std::string_view(&*letter, 1));
    }
    if (element == Element::kH) continue;

    Atom atom;
    if (!parse_double(columns(line, 30, 38), atom.position.x) ||
        !parse_double(columns(line, 38, 46), atom.position.y) ||
        !parse_double(columns(line, 46, 54), atom.position.z)) {
      throw ParseError(ln + 1, "malformed ATOM coordinate field");
    }
    atom.element = element;
    atom.formal_charge = parse_pdb_charge(columns(line, 78, 80));
    atom.residue_name = std::move(residue);
    mol.atoms.push_back(std::move(atom));
  }
  if (mol.atoms.empty()) {
    throw DataError(fmt::format("empty structure: no protein atoms in '{}'",
                                mol.source_id));
  }
  return mol;
}

std::vector<MolecularStructure> parse_sdf(std::string_view text,
                                          std::string_view source_id) {
  std::vector<MolecularStructure> records;
  auto lines = split_lines(text);

  std::size_t ln = 0;
  while (ln < lines.size()) {
    // Skip blank separators between records.
    std::size_t start = ln;
    while (start < lines.size() && trim(lines[start]).empty()) ++start;
    if (start >= lines.size()) break;
    std::size_t end = start;
    while (end < lines.size() && trim(lines[end]) != "$$$$") ++end;

    std::size_t counts_ln = start + 3;
    if (counts_ln >= end) {
      throw ParseError(start + 1, "record ends before the counts line");
    }
    std::string_view counts = lines[counts_ln];
    if (counts.find("V3000") != std::string_view::npos) {
      throw ParseError(counts_ln + 1, "V3000 records are not supported");
    }
    int n_atoms = 0;
    int n_bonds = 0;
    if (!parse_int(columns(counts, 0, 3), n_atoms) ||
        !parse_int(columns(counts, 3, 6), n_bonds) || n_atoms < 0 ||
        n_bonds < 0) {
      throw ParseError(counts_ln + 1, "malformed counts line");
    }
    std::size_t atoms_begin = counts_ln + 1;
    std::size_t bonds_begin = atoms_begin + static_cast<std::size_t>(n_atoms);
    std::size_t props_begin = bonds_begin + static_cast<std::size_t>(n_bonds);
    if (props_begin > end) {
      throw ParseError(end, fmt::format("counts line declares {} atoms and {} "
                                        "bonds but the record is shorter",
                                        n_atoms, n_bonds));
    }

    MolecularStructure mol;
    mol.kind = MoleculeKind::kLigand;
    mol.source_id = source_id.empty() ? std::string(trim(lines[start]))
                                      : std::string(source_id);

    for (std::size_t k = atoms_begin; k < bonds_begin; ++k) {
      std::string_view line = lines[k];
      Atom atom;
      std::string_view symbol = trim(columns(line, 31, 34));
      if (!parse_double(columns(line, 0, 10), atom.position.x) ||
          !parse_double(columns(line, 10, 20), atom.position.y) ||
          !parse_double(columns(line, 20, 30), atom.position.z) ||
          symbol.empty() ||
          !std::isalpha(static_cast<unsigned char>(symbol.front()))) {
        throw ParseError(k + 1, "malformed atom line (counts line "
                                "inconsistent with atom block?)");
      }
      atom.element = element_from_symbol(symbol);
      int code = 0;
      if (parse_int(columns(line, 36, 39), code)) {
        atom.formal_charge = sdf_charge_from_code(code);
      }
      mol.atoms.push_back(std::move(atom));
    }

    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = bonds_begin; k < props_begin; ++k) {
      std::string_view line = lines[k];
      int a = 0;
      int b = 0;
      int type = 0;
      if (!parse_int(columns(line, 0, 3), a) ||
          !parse_int(columns(line, 3, 6), b) ||
          !parse_int(columns(line, 6, 9), type)) {
        throw ParseError(k + 1, "malformed bond line (counts line "
                                "inconsistent with bond block?)");
      }
      if (a < 1 || b < 1 || a > n_atoms || b > n_atoms) {
        throw ParseError(k + 1, fmt::format("bond index out of range: {} {} "
                                            "with {} atoms",
                                            a, b, n_atoms));
      }
      if (a == b) throw ParseError(k + 1, "bond joins an atom to itself");
      if (type < 1 || type > 4) {
        throw ParseError(k + 1, fmt::format("unsupported bond type {}", type));
      }
      Bond bond{static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1),
                static_cast<BondOrder>(type)};
      if (!seen.emplace(std::min(bond.i, bond.j), std::max(bond.i, bond.j))
               .second) {
        throw ParseError(k + 1, "duplicate bond");
      }
      mol.bonds.push_back(bond);
    }

    bool charge_block_seen = false;
    for (std::size_t k = props_begin; k < end; ++k) {
      std::string_view line = lines[k];
      if (line.starts_with("M  END")) break;
      if (!line.starts_with("M  CHG")) {
        int a = 0;
        int b = 0;
        int type = 0;
        if (!line.starts_with("M ") && !line.starts_with("A ") &&
            !line.starts_with("V ") && !line.starts_with("G ") &&
            !line.starts_with("S ") && !line.starts_with(">") &&
            parse_int(columns(line, 0, 3), a) &&
            parse_int(columns(line, 3, 6), b) &&
            parse_int(columns(line, 6, 9), type)) {
          throw ParseError(k + 1, "extra bond line after the declared bond "
                                  "block (counts line inconsistent)");
        }
        continue;
      }
      auto tok = tokens(line);
      int n = 0;
      if (tok.size() < 3 || !parse_int(tok[2], n) || n < 0 ||
          tok.size() != 3 + 2 * static_cast<std::size_t>(n)) {
        throw ParseError(k + 1, "malformed M  CHG line");
      }
      // Any M  CHG line supersedes every charge in the atom block.
      if (!charge_block_seen) {
        for (Atom &atom : mol.atoms) atom.formal_charge = 0;
        charge_block_seen = true;
      }
      for (int p = 0; p < n; ++p) {
        int idx = 0;
        int charge = 0;
        if (!parse_int(tok[3 + 2 * p], idx) ||
            !parse_int(tok[4 + 2 * p], charge) || idx < 1 || idx > n_atoms) {
          throw ParseError(k + 1, "malformed M  CHG entry");
        }
        mol.atoms[static_cast<std::size_t>(idx - 1)].formal_charge = charge;
      }
    }

    try {
      validate(mol);
    } catch (const DataError &e) {
      throw ParseError(start + 1, e.what());
    }
    records.push_back(std::move(mol));
    ln = end + 1;
  }
  return records;
}

std::string write_sdf(const MolecularStructure &mol) {
  std::string out;
  out += mol.source_id + "\n";
  out += "  plgat\n";
  out += "\n";
  out += fmt::format("{:3d}{:3d}  0  0  0  0  0  0  0  0999 V2000\n",
                     mol.atoms.size(), mol.bonds.size());
  for (const Atom &a : mol.atoms) {
    out += fmt::format("{:10.4f}{:10.4f}{:10.4f} {:<3} 0  0  0  0  0  0  0  0"
                       "  0  0  0  0\n",
                       a.position.x, a.position.y, a.position.z,
                       element_symbol(a.element) == "other"
                           ? std::string_view("*")
                           : element_symbol(a.element));
  }
  for (const Bond &b : mol.bonds) {
    out += fmt::format("{:3d}{:3d}{:3d}  0\n", b.i + 1, b.j + 1,
                       static_cast<int>(b.order));
  }
  std::vector<std::pair<std::size_t, int>> charged;
  for (std::size_t k = 0; k < mol.atoms.size(); ++k) {
    if (mol.atoms[k].formal_charge != 0) {
      charged.emplace_back(k + 1, mol.atoms[k].formal_charge);
    }
  }
  for (std::size_t begin = 0; begin < charged.size(); begin += 8) {
    std::size_t end = std::min(begin + 8, charged.size());
    out += fmt::format("M  CHG{:3d}", end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      out += fmt::format(" {:3d} {:3d}", charged[k].first, charged[k].second);
    }
    out += "\n";
  }
  out += "M  END\n$$$$\n";
  return out;
}

std::vector<bool> ring_atoms(std::size_t num_atoms,
                             const std::vector<Bond> &bonds) {
  // An atom is on a simple cycle iff it touches a bond that is not a bridge.
  auto adj = neighbours(num_atoms, bonds);
  std::vector<int> order(num_atoms, -1);
  std::vector<int> low(num_atoms, 0);
  std::vector<bool> in_ring(num_atoms, false);
  int counter = 0;

  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t v,
                                                          std::size_t parent) {
    order[v] = low[v] = counter++;
    bool parent_skipped = false;
    for (std::size_t w : adj[v]) {
      if (w == parent && !parent_skipped) {
        parent_skipped = true;
        continue;
      }
      if (order[w] == -1) {
        dfs(w, v);
        low[v] = std::min(low[v], low[w]);
        if (low[w] <= order[v]) {
          // Tree edge v-w lies on a cycle.
          in_ring[v] = in_ring[w] = true;
        }
      } else {
        low[v] = std::min(low[v], order[w]);
        // Back edge closes a cycle through both endpoints.
        in_ring[v] = in_ring[w] = true;
      }
    }
  };
  for (std::size_t v = 0; v < num_atoms; ++v) {
    if (order[v] == -1) dfs(v, num_atoms);
  }
  return in_ring;
}

PerceivedLigand perceive_ligand(const MolecularStructure &mol) {
  if (mol.kind != MoleculeKind::kLigand) {
    throw DataError("perceive_ligand expects a ligand structure");
  }
  validate(mol);

  const std::size_t n = mol.atoms.size();
  PerceivedLigand out;
  out.base = mol;
  out.atoms.resize(n);

  // Bond-order sums in half units so aromatic bonds (1.5) stay integral.
  std::vector<int> half_order_sum(n, 0);
  std::vector<int> n_double(n, 0);
  std::vector<int> n_triple(n, 0);
  std::vector<int> n_aromatic(n, 0);
  std::vector<int> explicit_h(n, 0);
  for (const Bond &b : mol.bonds) {
    int half = 0;
    switch (b.order) {
      case BondOrder::kSingle:
        half = 2;
        break;
      case BondOrder::kDouble:
        half = 4;
        ++n_double[b.i];
        ++n_double[b.j];
        break;
      case BondOrder::kTriple:
        half = 6;
        ++n_triple[b.i];
        ++n_triple[b.j];
        break;
      case BondOrder::kAromatic:
        half = 3;
        ++n_aromatic[b.i];
        ++n_aromatic[b.j];
        break;
    }
    half_order_sum[b.i] += half;
    half_order_sum[b.j] += half;
    for (auto [self, other] : {std::pair{b.i, b.j}, std::pair{b.j, b.i}}) {
      if (mol.atoms[other].is_heavy()) {
        ++out.atoms[self].degree;
      } else {
        ++explicit_h[self];
      }
    }
  }

  std::vector<bool> rings = ring_atoms(n, mol.bonds);
  for (std::size_t k = 0; k < n; ++k) {
    const Atom &atom = mol.atoms[k];
    AtomPerception &p = out.atoms[k];
    int charge_adjustment =
        (atom.element == Element::kN || atom.element == Element::kO)
            ? atom.formal_charge
            : 0;
    int bond_sum = (half_order_sum[k] + 1) / 2;
    p.implicit_valence =
        std::max(0, default_valence(atom.element) + charge_adjustment - bond_sum);
    p.num_hydrogens = explicit_h[k] + p.implicit_valence;
    p.aromatic = n_aromatic[k] > 0;
    p.in_ring = rings[k];

    if (n_triple[k] > 0 || n_double[k] >= 2) {
      p.hybridization = Hybridization::kSP;
    } else if (n_double[k] > 0 || n_aromatic[k] > 0) {
      p.hybridization = Hybridization::kSP2;
    } else if (atom.element == Element::kC || atom.element == Element::kN ||
               atom.element == Element::kO || atom.element == Element::kS) {
      p.hybridization = Hybridization::kSP3;
    } else {
      p.hybridization = Hybridization::kOther;
    }
  }
  return out;
}

PerceivedLigand strip_hydrogens(const PerceivedLigand &lig) {
  PerceivedLigand out;
  out.base.source_id = lig.base.source_id;
  out.base.kind = lig.base.kind;
  std::vector<std::size_t> remap(lig.size(), lig.size());
  for (std::size_t k = 0; k < lig.size(); ++k) {
    if (!lig.base.atoms[k].is_heavy()) continue;
    remap[k] = out.base.atoms.size();
    out.base.atoms.push_back(lig.base.atoms[k]);
    out.atoms.push_back(lig.atoms[k]);
  }
  for (const Bond &b : lig.base.bonds) {
    if (remap[b.i] == lig.size() || remap[b.j] == lig.size()) continue;
    out.base.bonds.push_back({remap[b.i], remap[b.j], b.order});
  }
  return out;
}

MolecularStructure infer_protein_bonds(const MolecularStructure &mol) {
  constexpr double kMaxBond = 1.9;
  constexpr double kMaxSulfurBond = 2.4;
  MolecularStructure out = mol;
  out.bonds.clear();
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const Atom &a = mol.atoms[i];
    if (!a.is_heavy()) continue;
    for (std::size_t j = i + 1; j < mol.atoms.size(); ++j) {
      const Atom &b = mol.atoms[j];
      if (!b.is_heavy()) continue;
      double cutoff = (a.element == Element::kS || b.element == Element::kS)
                          ? kMaxSulfurBond
                          : kMaxBond;
      if (distance_squared(a.position, b.position) <= cutoff * cutoff) {
        out.bonds.push_back({i, j, BondOrder::kSingle});
      }
    }
  }
  return out;
}

double molecular_weight(const PerceivedLigand &lig) {
  double mw = 0.0;
  for (std::size_t k = 0; k < lig.size(); ++k) {
    const Atom &atom = lig.base.atoms[k];
    if (!atom.is_heavy()) continue;
    mw += element_mass(atom.element) +
          lig.atoms[k].num_hydrogens * element_mass(Element::kH);
  }
  return mw;
}

}  // namespace plgat
