#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace icma::chem {

inline constexpr int kMaxAtomicNumber = 118;

/// Atomic number for a case-sensitive element symbol ("C", "Cl", "Se").
/// Returns std::nullopt for anything outside the periodic table.
std::optional<int> atomic_number(std::string_view symbol);

/// Element symbol for an atomic number in [1, 118].
std::string_view element_symbol(int atomic_number);

/// Symbols that may appear outside brackets: B C N O P S F Cl Br I.
bool is_organic_subset(int atomic_number);

/// Elements that may be written as lowercase aromatic symbols.
bool is_aromatic_capable(int atomic_number);

/// Allowed valences in increasing order. An empty span means the element
/// carries no valence restriction (metals, noble gases and the like).
std::span<const int> allowed_valences(int atomic_number);

/// Outer-shell electron count for main-group elements, 0 otherwise.
int valence_electrons(int atomic_number);

/// Lowest "normal" valence of an atom with the given formal charge, taken
/// from its isoelectronic main-group neighbour (N+ behaves like C, O+ like N,
/// C- like N). Returns -1 when the element has no such valence.
int default_valence(int atomic_number, int charge);

}  // namespace icma::chem
