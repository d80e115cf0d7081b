#include "icma/fingerprints.h"

#include <algorithm>
#include <bit>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "icma/hash.h"

namespace icma {

using chem::Molecule;
using chem::Neighbor;

std::string_view to_string(FingerprintKind kind) {
  return kind == FingerprintKind::kMorgan ? "morgan" : "path";
}

std::size_t FingerprintVector::count() const {
  std::size_t total = 0;
  for (std::uint64_t w: words) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

namespace {

void check_width(std::size_t width) {
  if (width < 64 || !std::has_single_bit(width)) {
    throw std::invalid_argument("fingerprint width must be a power of two >= 64");
  }
}

FingerprintVector finish(FingerprintKind kind, int param, std::size_t width,
                         std::vector<std::uint64_t> ids) {
  FingerprintVector fp;
  fp.kind = kind;
  fp.param = param;
  fp.width = width;
  fp.words.assign(width / 64, 0);
  std::sort(ids.begin(), ids.end());
  for (std::uint64_t id: ids) {
    const std::size_t bit = id % width;
    fp.words[bit / 64] |= std::uint64_t { 1 } << (bit % 64);
  }
  fp.ids = std::move(ids);
  return fp;
}

bool is_heavy(const Molecule &mol, int atom) {
  return mol.atom(atom).atomic_number != 1;
}

using BondSet = std::vector<std::uint64_t>;

void set_bond(BondSet &set, int bond) {
  set[bond / 64] |= std::uint64_t { 1 } << (bond % 64);
}

void unite(BondSet &into, const BondSet &from) {
  for (std::size_t w = 0; w < into.size(); ++w) into[w] |= from[w];
}

std::pair<std::size_t, std::size_t> overlap(const FingerprintVector &a,
                                            const FingerprintVector &b) {
  if (a.kind != b.kind || a.width != b.width) {
    throw FingerprintError(FingerprintError::Kind::kIncompatible,
                           "fingerprints differ in kind or width");
  }
  if (a.empty() && b.empty()) {
    throw FingerprintError(FingerprintError::Kind::kBothEmpty,
                           "similarity of two empty fingerprints is undefined");
  }
  std::size_t common = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    common += static_cast<std::size_t>(std::popcount(a.words[w] & b.words[w]));
  }
  return { common, a.count() + b.count() };
}

}  // namespace

std::uint64_t morgan_atom_invariant(const Molecule &mol, int atom) {
  const chem::Atom &a = mol.atom(atom);
  int hydrogens = a.total_h();
  for (const Neighbor &nb: mol.neighbors(atom)) {
    if (!is_heavy(mol, nb.atom)) ++hydrogens;
  }
  const std::int64_t fields[] = {
    a.atomic_number, mol.heavy_degree(atom), hydrogens, a.charge,
    a.isotope.value_or(0), mol.is_ring_atom(atom) ? 1 : 0,
  };
  return Fnv1a().add(std::span<const std::int64_t>(fields)).digest();
}

std::uint64_t morgan_update(int iteration, std::uint64_t center,
                            std::vector<std::pair<int, std::uint64_t>> neighbors) {
  std::sort(neighbors.begin(), neighbors.end());
  Fnv1a h;
  h.add(static_cast<std::int64_t>(iteration));
  h.add(static_cast<std::int64_t>(center));
  h.add(static_cast<std::int64_t>(neighbors.size()));
  for (const auto &[order, id]: neighbors) {
    h.add(static_cast<std::int64_t>(order));
    h.add(static_cast<std::int64_t>(id));
  }
  return h.digest();
}

FingerprintVector morgan_fingerprint(const Molecule &mol, int radius,
                                     std::size_t width) {
  if (radius < 0) throw std::invalid_argument("radius must be non-negative");
  check_width(width);

  const int n = static_cast<int>(mol.size());
  const std::size_t words = (mol.bonds().size() + 63) / 64;
  std::vector<std::uint64_t> ids;
  std::vector<std::uint64_t> current(n, 0);
  std::vector<BondSet> env(n, BondSet(words, 0));

  for (int a = 0; a < n; ++a) {
    if (!is_heavy(mol, a)) continue;
    current[a] = morgan_atom_invariant(mol, a);
    ids.push_back(current[a]);
  }

  std::set<BondSet> seen;
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n, 0);
    std::vector<BondSet> next_env = env;
    struct Candidate {
      BondSet bonds;
      std::uint64_t id;
    };
    std::vector<Candidate> candidates;
    for (int a = 0; a < n; ++a) {
      if (!is_heavy(mol, a)) continue;
      std::vector<std::pair<int, std::uint64_t>> nbrs;
      for (const Neighbor &nb: mol.neighbors(a)) {
        if (!is_heavy(mol, nb.atom)) continue;
        nbrs.emplace_back(static_cast<int>(mol.bond(nb.bond).order), current[nb.atom]);
        set_bond(next_env[a], nb.bond);
        unite(next_env[a], env[nb.atom]);
      }
      next[a] = morgan_update(r, current[a], std::move(nbrs));
      if (next_env[a] != env[a]) candidates.push_back({ next_env[a], next[a] });
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate &l, const Candidate &r) {
                return std::tie(l.bonds, l.id) < std::tie(r.bonds, r.id);
              });
    for (Candidate &c: candidates) {
      if (seen.insert(std::move(c.bonds)).second) ids.push_back(c.id);
    }
    current = std::move(next);
    env = std::move(next_env);
  }
  return finish(FingerprintKind::kMorgan, radius, width, std::move(ids));
}

std::int64_t path_atom_label(const chem::Atom &atom) {
  return atom.atomic_number * 2 + (atom.aromatic ? 1 : 0);
}

std::uint64_t path_hash(std::vector<std::int64_t> labels) {
  std::vector<std::int64_t> reversed(labels.rbegin(), labels.rend());
  const auto &smaller = reversed < labels ? reversed : labels;
  return Fnv1a().add(std::span<const std::int64_t>(smaller)).digest();
}

FingerprintVector path_fingerprint(const Molecule &mol, int max_len,
                                   std::size_t width) {
  if (max_len < 1 || max_len > 7) {
    throw std::invalid_argument("max path length must be in [1, 7]");
  }
  check_width(width);

  const int n = static_cast<int>(mol.size());
  std::vector<std::uint64_t> ids;
  std::vector<int> path;
  std::vector<int> path_bonds;
  std::vector<bool> on_path(n, false);

  auto record = [&]() {
    std::vector<std::int64_t> labels;
    labels.reserve(path.size() * 2);
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i > 0) labels.push_back(static_cast<int>(mol.bond(path_bonds[i - 1]).order));
      labels.push_back(path_atom_label(mol.atom(path[i])));
    }
    ids.push_back(path_hash(std::move(labels)));
  };

  // Each undirected path is recorded once, from its lower-index end.
  auto extend = [&](auto &&self, int atom) -> void {
    if (path.size() == 1 || path.front() < path.back()) record();
    if (static_cast<int>(path_bonds.size()) == max_len) return;
    for (const Neighbor &nb: mol.neighbors(atom)) {
      if (on_path[nb.atom] || !is_heavy(mol, nb.atom)) continue;
      on_path[nb.atom] = true;
      path.push_back(nb.atom);
      path_bonds.push_back(nb.bond);
      self(self, nb.atom);
      path.pop_back();
      path_bonds.pop_back();
      on_path[nb.atom] = false;
    }
  };

  for (int a = 0; a < n; ++a) {
    if (!is_heavy(mol, a)) continue;
    on_path[a] = true;
    path = { a };
    path_bonds.clear();
    extend(extend, a);
    on_path[a] = false;
  }
  return finish(FingerprintKind::kPath, max_len, width, std::move(ids));
}

FingerprintVector fold(const FingerprintVector &fp, std::size_t width) {
  check_width(width);
  if (width > fp.width || fp.width % width != 0) {
    throw std::invalid_argument("fold target must divide the current width");
  }
  FingerprintVector out = fp;
  out.width = width;
  out.words.assign(width / 64, 0);
  for (std::size_t bit = 0; bit < fp.width; ++bit) {
    if (!fp.test(bit)) continue;
    const std::size_t target = bit % width;
    out.words[target / 64] |= std::uint64_t { 1 } << (target % 64);
  }
  return out;
}

double dice(const FingerprintVector &a, const FingerprintVector &b) {
  const auto [common, total] = overlap(a, b);
  return 2.0 * static_cast<double>(common) / static_cast<double>(total);
}

double tanimoto(const FingerprintVector &a, const FingerprintVector &b) {
  const auto [common, total] = overlap(a, b);
  return static_cast<double>(common) / static_cast<double>(total - common);
}

}  // namespace icma
