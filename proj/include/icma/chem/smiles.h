#pragma once

#include <string>
#include <string_view>

#include "icma/chem/molecule.h"

namespace icma::chem {

/// Parses a SMILES string. Supported: organic subset and bracket atoms
/// (isotope, charge, hydrogen count, atom class), branches, ring closures
/// including %nn, dot-separated components, aromatic lowercase atoms and the
/// bond symbols - = # :. Stereo markers (@, @@, /, \) are accepted and
/// dropped. Explicit neutral [H] atoms attached to a heavy atom are folded
/// into that atom's hydrogen count.
///
/// Throws SmilesError on failure.
Molecule parse_smiles(std::string_view text);

/// True iff parse_smiles succeeds. Never throws.
bool is_valid(std::string_view text) noexcept;

struct CanonicalSmiles {
  std::string text;

  friend bool operator==(const CanonicalSmiles &,
                         const CanonicalSmiles &) = default;
};

/// Canonical SMILES. Depends only on the molecular graph, never on the
/// order atoms were written in.
CanonicalSmiles canonicalize(const Molecule &mol);

/// Canonical atom ranks (a permutation of 0..size-1) used for emission.
std::vector<int> canonical_ranks(const Molecule &mol);

}  // namespace icma::chem
