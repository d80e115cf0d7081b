#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icma::chem {

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

/// Integer contribution of a bond to the valence sum. Aromatic bonds count
/// as 1 here; the extra pi electron is accounted for per atom.
constexpr int bond_valence(BondOrder order) {
  return order == BondOrder::kAromatic ? 1 : static_cast<int>(order);
}

struct Atom {
  int atomic_number = 6;
  int charge = 0;
  std::optional<int> isotope;
  // Hydrogens written inside brackets or folded in from explicit [H] atoms.
  int explicit_h = 0;
  // Hydrogens supplied by the valence model for organic-subset atoms.
  int implicit_h = 0;
  bool aromatic = false;
  bool bracket = false;
  int index = 0;

  int total_h() const { return explicit_h + implicit_h; }
  std::string_view symbol() const;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;

  int other(int atom) const { return atom == a ? b : a; }
};

enum class SmilesErrorKind {
  kSyntax,
  kRingMismatch,
  kValence,
  kUnsupported,
};

std::string_view to_string(SmilesErrorKind kind);

class SmilesError: public std::runtime_error {
public:
  SmilesError(SmilesErrorKind kind, std::size_t position,
              const std::string &what)
      : std::runtime_error(what), kind_(kind), position_(position) { }

  SmilesErrorKind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }

private:
  SmilesErrorKind kind_;
  std::size_t position_;
};

/// Neighbor entry in the adjacency list.
struct Neighbor {
  int atom;
  int bond;
};

/// A validated molecular graph. Instances are only produced by assemble()
/// (directly, through the SMILES parser, or through renumbered()), so every
/// Molecule satisfies the structural invariants: no self loops, no parallel
/// bonds, valences within the allowed table, aromatic systems kekulizable,
/// and rings holding a smallest set of smallest rings.
class Molecule {
public:
  /// Validates and finalizes a raw graph: ring perception, aromatic bond
  /// cleanup, kekulization check, valence check and aromaticity perception.
  /// Hydrogen counts on the atoms are taken as given.
  static Molecule assemble(std::vector<Atom> atoms, std::vector<Bond> bonds);

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  const Atom &atom(int i) const { return atoms_[i]; }
  const Bond &bond(int i) const { return bonds_[i]; }
  std::size_t size() const { return atoms_.size(); }

  std::span<const Neighbor> neighbors(int atom) const {
    return adjacency_[atom];
  }

  /// Smallest set of smallest rings. Each ring is a cycle of atom indices,
  /// rotated to start at its lowest index and oriented towards the smaller
  /// of that atom's two ring neighbours.
  const std::vector<std::vector<int>> &rings() const { return rings_; }

  bool is_ring_bond(int bond) const { return ring_bond_[bond]; }
  bool is_ring_atom(int atom) const;

  int num_components() const { return num_components_; }
  int component(int atom) const { return component_[atom]; }

  int heavy_atom_count() const;
  int heavy_degree(int atom) const;

  /// Copy of this molecule with atom i moved to position new_index[i].
  Molecule renumbered(std::span<const int> new_index) const;

private:
  Molecule() = default;

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<int>> rings_;
  std::vector<bool> ring_bond_;
  std::vector<int> component_;
  int num_components_ = 0;
};

/// Hydrogen count the valence model assigns to an unbracketed atom whose
/// bonds sum to bond_sum (aromatic bonds counted once).
int default_implicit_h(int atomic_number, bool aromatic, int bond_sum);

}  // namespace icma::chem
