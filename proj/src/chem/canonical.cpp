#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "icma/chem/element.h"
#include "icma/chem/molecule.h"
#include "icma/chem/smiles.h"

namespace icma::chem {
namespace {

// Rank of each atom = number of atoms with a strictly smaller key.
template <typename Key>
std::vector<int> ranks_from_keys(const std::vector<Key> &keys) {
  const std::size_t n = keys.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return keys[l] < keys[r]; });
  std::vector<int> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && keys[order[i]] == keys[order[i - 1]]) {
      ranks[order[i]] = ranks[order[i - 1]];
    } else {
      ranks[order[i]] = static_cast<int>(i);
    }
  }
  return ranks;
}

int count_classes(const std::vector<int> &ranks) {
  std::vector<int> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

using RefineKey = std::pair<int, std::vector<std::pair<int, int>>>;

// Iterates neighbourhood refinement until the partition stops splitting.
void refine(const Molecule &mol, std::vector<int> &ranks) {
  const std::size_t n = mol.size();
  int classes = count_classes(ranks);
  std::vector<RefineKey> keys(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      keys[i].first = ranks[i];
      auto &nbrs = keys[i].second;
      nbrs.clear();
      for (const Neighbor &nb: mol.neighbors(static_cast<int>(i))) {
        nbrs.emplace_back(ranks[nb.atom],
                          static_cast<int>(mol.bond(nb.bond).order));
      }
      std::sort(nbrs.begin(), nbrs.end());
    }
    std::vector<int> next = ranks_from_keys(keys);
    const int next_classes = count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
}

int ring_bond_count(const Molecule &mol, int atom) {
  int count = 0;
  for (const Neighbor &nb: mol.neighbors(atom)) count += mol.is_ring_bond(nb.bond);
  return count;
}

std::string atom_text(const Molecule &mol, int index) {
  const Atom &atom = mol.atom(index);
  int sum = 0;
  for (const Neighbor &nb: mol.neighbors(index)) {
    sum += bond_valence(mol.bond(nb.bond).order);
  }
  std::string symbol(atom.symbol());
  if (atom.aromatic) {
    symbol[0] = static_cast<char>(symbol[0] - 'A' + 'a');
  }
  const bool organic_form =
      is_organic_subset(atom.atomic_number) && atom.charge == 0
      && !atom.isotope
      && (!atom.aromatic || symbol.size() == 1)
      && default_implicit_h(atom.atomic_number, atom.aromatic, sum) == atom.total_h();
  if (organic_form) return symbol;

  std::string out = "[";
  if (atom.isotope) out += std::to_string(*atom.isotope);
  out += symbol;
  if (atom.total_h() > 0) {
    out += 'H';
    if (atom.total_h() > 1) out += std::to_string(atom.total_h());
  }
  if (atom.charge != 0) {
    out += atom.charge > 0 ? '+' : '-';
    if (std::abs(atom.charge) > 1) out += std::to_string(std::abs(atom.charge));
  }
  out += ']';
  return out;
}

std::string bond_text(const Molecule &mol, const Bond &bond) {
  switch (bond.order) {
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return "";
  case BondOrder::kSingle:
    return mol.atom(bond.a).aromatic && mol.atom(bond.b).aromatic ? "-" : "";
  }
  return "";
}

std::string ring_label(int digit) {
  return digit < 10 ? std::to_string(digit) : "%" + std::to_string(digit);
}

class CanonicalWriter {
public:
  CanonicalWriter(const Molecule &mol, std::vector<int> ranks)
      : mol_(mol), ranks_(std::move(ranks)), visited_(mol.size(), false),
        bond_used_(mol.bonds().size(), false), children_(mol.size()),
        closures_(mol.size()) { }

  std::string component(int start) {
    build_tree(start, -1);
    std::string out;
    emit(start, out);
    return out;
  }

private:
  std::vector<Neighbor> sorted_neighbors(int atom) const {
    auto nbrs = std::vector<Neighbor>(mol_.neighbors(atom).begin(),
                                      mol_.neighbors(atom).end());
    std::sort(nbrs.begin(), nbrs.end(), [&](const Neighbor &l, const Neighbor &r) {
      return ranks_[l.atom] < ranks_[r.atom];
    });
    return nbrs;
  }

  void build_tree(int atom, int parent_bond) {
    visited_[atom] = true;
    for (const Neighbor &nb: sorted_neighbors(atom)) {
      if (nb.bond == parent_bond || bond_used_[nb.bond]) continue;
      bond_used_[nb.bond] = true;
      if (visited_[nb.atom]) {
        // Back edge: opened at the earlier atom, closed here.
        closures_[nb.atom].push_back(nb);
        closures_[atom].push_back({ nb.atom, nb.bond });
        continue;
      }
      children_[atom].push_back(nb);
      build_tree(nb.atom, nb.bond);
    }
  }

  void emit(int atom, std::string &out) {
    out += atom_text(mol_, atom);

    // Closings first (the partner already holds a digit), then openings in
    // partner rank order.
    std::vector<int> freed;
    std::vector<Neighbor> openings;
    for (const Neighbor &nb: closures_[atom]) {
      auto it = open_digit_.find(nb.bond);
      if (it != open_digit_.end()) {
        out += ring_label(it->second);
        freed.push_back(it->second);
        open_digit_.erase(it);
      } else {
        openings.push_back(nb);
      }
    }
    std::sort(openings.begin(), openings.end(),
              [&](const Neighbor &l, const Neighbor &r) {
                return ranks_[l.atom] < ranks_[r.atom];
              });
    for (const Neighbor &nb: openings) {
      int digit = 1;
      while (in_use_.count(digit) != 0) ++digit;
      in_use_.insert(digit);
      open_digit_.emplace(nb.bond, digit);
      out += bond_text(mol_, mol_.bond(nb.bond));
      out += ring_label(digit);
    }
    for (int digit: freed) in_use_.erase(digit);

    const auto &kids = children_[atom];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out += '(';
      out += bond_text(mol_, mol_.bond(kids[k].bond));
      emit(kids[k].atom, out);
      if (branch) out += ')';
    }
  }

  const Molecule &mol_;
  std::vector<int> ranks_;
  std::vector<bool> visited_;
  std::vector<bool> bond_used_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> closures_;
  std::map<int, int> open_digit_;
  std::set<int> in_use_;
};

}  // namespace

std::vector<int> canonical_ranks(const Molecule &mol) {
  const std::size_t n = mol.size();
  using Invariant = std::tuple<int, int, int, int, int, int, int>;
  std::vector<Invariant> invariants(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom &atom = mol.atom(static_cast<int>(i));
    invariants[i] = { atom.atomic_number,
                      atom.isotope.value_or(0),
                      atom.charge,
                      static_cast<int>(mol.neighbors(static_cast<int>(i)).size()),
                      atom.total_h(),
                      atom.aromatic ? 1 : 0,
                      ring_bond_count(mol, static_cast<int>(i)) };
  }
  std::vector<int> ranks = ranks_from_keys(invariants);
  refine(mol, ranks);

  // Break remaining ties: in the lowest tied class, the first atom keeps the
  // class rank and the rest move up by one, then refine again.
  for (;;) {
    std::vector<int> count(n, 0);
    for (int r: ranks) ++count[r];
    int tied_rank = -1;
    for (std::size_t r = 0; r < n; ++r) {
      if (count[r] > 1) {
        tied_rank = static_cast<int>(r);
        break;
      }
    }
    if (tied_rank < 0) break;
    bool kept = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (ranks[i] != tied_rank) continue;
      if (kept) ranks[i] = tied_rank + 1;
      kept = true;
    }
    refine(mol, ranks);
  }
  return ranks;
}

CanonicalSmiles canonicalize(const Molecule &mol) {
  const std::vector<int> ranks = canonical_ranks(mol);
  const int components = mol.num_components();

  std::vector<int> start(components, -1);
  for (std::size_t i = 0; i < mol.size(); ++i) {
    const int c = mol.component(static_cast<int>(i));
    if (start[c] < 0 || ranks[i] < ranks[start[c]]) start[c] = static_cast<int>(i);
  }

  CanonicalWriter writer(mol, ranks);
  std::vector<std::string> parts;
  parts.reserve(components);
  for (int c = 0; c < components; ++c) parts.push_back(writer.component(start[c]));
  std::sort(parts.begin(), parts.end());

  CanonicalSmiles out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.text += '.';
    out.text += parts[i];
  }
  return out;
}

}  // namespace icma::chem
