#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "icma/chem/molecule.h"

namespace icma {

enum class FingerprintKind {
  kMorgan,
  kPath,
};

std::string_view to_string(FingerprintKind kind);

inline constexpr int kDefaultMorganRadius = 2;
inline constexpr int kDefaultMaxPathLength = 7;
inline constexpr std::size_t kDefaultFingerprintWidth = 2048;

/// Folded bit vector together with the substructure identifiers it was
/// folded from. Every set bit is (id mod width) for some id.
struct FingerprintVector {
  FingerprintKind kind = FingerprintKind::kMorgan;
  int param = 0;  // radius or maximum path length
  std::size_t width = kDefaultFingerprintWidth;
  std::vector<std::uint64_t> words;
  std::vector<std::uint64_t> ids;  // sorted multiset

  bool test(std::size_t bit) const {
    return (words[bit / 64] >> (bit % 64)) & 1U;
  }
  std::size_t count() const;
  bool empty() const { return ids.empty(); }
};

class FingerprintError: public std::runtime_error {
public:
  enum class Kind {
    kBothEmpty,
    kIncompatible,
  };

  FingerprintError(Kind kind, const char *what)
      : std::runtime_error(what), kind_(kind) { }

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// ECFP-style circular fingerprint over heavy atoms. Identifiers are
/// FNV-1a hashes of sorted neighbour tuples; an environment whose bond set
/// repeats one already emitted (or that stopped growing) is dropped.
FingerprintVector morgan_fingerprint(const chem::Molecule &mol,
                                     int radius = kDefaultMorganRadius,
                                     std::size_t width = kDefaultFingerprintWidth);

/// Linear-path fingerprint: every simple path of 0..max_len bonds, hashed
/// from its element/bond-order sequence read in the smaller direction.
FingerprintVector path_fingerprint(const chem::Molecule &mol,
                                   int max_len = kDefaultMaxPathLength,
                                   std::size_t width = kDefaultFingerprintWidth);

/// Refolds a fingerprint to a narrower power-of-two width.
FingerprintVector fold(const FingerprintVector &fp, std::size_t width);

double dice(const FingerprintVector &a, const FingerprintVector &b);
double tanimoto(const FingerprintVector &a, const FingerprintVector &b);

/// Atom identifiers used at radius zero; exposed for independent checks.
std::uint64_t morgan_atom_invariant(const chem::Molecule &mol, int atom);
/// Hash of one Morgan update step.
std::uint64_t morgan_update(int iteration, std::uint64_t center,
                            std::vector<std::pair<int, std::uint64_t>> neighbors);
/// Hash of an atom/bond label sequence as used by the path fingerprint.
std::uint64_t path_hash(std::vector<std::int64_t> labels);
std::int64_t path_atom_label(const chem::Atom &atom);

}  // namespace icma
