#include "icma/chem/molecule.h"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icma/chem/element.h"

namespace icma::chem {

std::string_view Atom::symbol() const {
  return element_symbol(atomic_number);
}

std::string_view to_string(SmilesErrorKind kind) {
  switch (kind) {
  case SmilesErrorKind::kSyntax:
    return "SyntaxError";
  case SmilesErrorKind::kRingMismatch:
    return "RingMismatch";
  case SmilesErrorKind::kValence:
    return "ValenceError";
  case SmilesErrorKind::kUnsupported:
    return "UnsupportedFeature";
  }
  return "Unknown";
}

int default_implicit_h(int atomic_number, bool aromatic, int bond_sum) {
  const auto valences = allowed_valences(atomic_number);
  if (valences.empty()) return 0;
  if (aromatic) {
    // One of the aromatic bonds is assumed double.
    const int target = valences.front();
    return bond_sum + 1 <= target ? target - bond_sum - 1 : 0;
  }
  for (int v: valences) {
    if (v >= bond_sum) return v - bond_sum;
  }
  return 0;
}

namespace {

using Adjacency = std::vector<std::vector<Neighbor>>;

[[noreturn]] void fail(SmilesErrorKind kind, const std::string &what) {
  throw SmilesError(kind, 0, what);
}

// Tarjan bridge finding. A bond lies on a cycle iff it is not a bridge.
class BridgeFinder {
public:
  explicit BridgeFinder(const Adjacency &adj)
      : adj_(adj), order_(adj.size(), -1), low_(adj.size(), 0) { }

  std::vector<bool> ring_bonds(std::size_t num_bonds) {
    in_ring_.assign(num_bonds, true);
    for (std::size_t v = 0; v < adj_.size(); ++v) {
      if (order_[v] < 0) visit(static_cast<int>(v), -1);
    }
    return in_ring_;
  }

private:
  void visit(int v, int parent_bond) {
    order_[v] = low_[v] = counter_++;
    for (const Neighbor &nb: adj_[v]) {
      if (nb.bond == parent_bond) continue;
      if (order_[nb.atom] < 0) {
        visit(nb.atom, nb.bond);
        low_[v] = std::min(low_[v], low_[nb.atom]);
        if (low_[nb.atom] > order_[v]) in_ring_[nb.bond] = false;
      } else {
        low_[v] = std::min(low_[v], order_[nb.atom]);
      }
    }
  }

  const Adjacency &adj_;
  std::vector<int> order_;
  std::vector<int> low_;
  std::vector<bool> in_ring_;
  int counter_ = 0;
};

using EdgeSet = std::vector<std::uint64_t>;

struct CandidateCycle {
  std::vector<int> atoms;
  std::vector<int> bonds;
  EdgeSet edges;
};

std::vector<int> normalize_ring(std::vector<int> ring) {
  const auto lowest = std::min_element(ring.begin(), ring.end());
  std::rotate(ring.begin(), lowest, ring.end());
  if (ring.size() > 2 && ring.back() < ring[1]) {
    std::reverse(ring.begin() + 1, ring.end());
  }
  return ring;
}

// Smallest set of smallest rings from Horton's candidate set followed by
// greedy GF(2) elimination over bond incidence vectors.
std::vector<std::vector<int>> find_sssr(const Adjacency &adj,
                                        const std::vector<Bond> &bonds,
                                        int cyclomatic) {
  if (cyclomatic <= 0) return {};
  const int n = static_cast<int>(adj.size());
  const std::size_t words = (bonds.size() + 63) / 64;

  std::vector<CandidateCycle> candidates;
  std::vector<int> dist(n);
  std::vector<int> parent_atom(n);
  std::vector<int> parent_bond(n);

  auto path_to_root = [&](int v) {
    std::vector<int> path;
    while (v >= 0) {
      path.push_back(v);
      v = parent_atom[v];
    }
    return path;
  };

  for (int root = 0; root < n; ++root) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(parent_atom.begin(), parent_atom.end(), -1);
    std::fill(parent_bond.begin(), parent_bond.end(), -1);
    dist[root] = 0;
    std::deque<int> queue { root };
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (const Neighbor &nb: adj[v]) {
        if (dist[nb.atom] >= 0) continue;
        dist[nb.atom] = dist[v] + 1;
        parent_atom[nb.atom] = v;
        parent_bond[nb.atom] = nb.bond;
        queue.push_back(nb.atom);
      }
    }

    for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
      const Bond &bond = bonds[bi];
      if (dist[bond.a] < 0 || dist[bond.b] < 0) continue;
      if (parent_bond[bond.a] == static_cast<int>(bi)
          || parent_bond[bond.b] == static_cast<int>(bi)) {
        continue;
      }
      const std::vector<int> pa = path_to_root(bond.a);
      const std::vector<int> pb = path_to_root(bond.b);
      // The two tree paths may only share the root.
      bool disjoint = true;
      for (std::size_t i = 0; i + 1 < pa.size() && disjoint; ++i) {
        for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
          if (pa[i] == pb[j]) {
            disjoint = false;
            break;
          }
        }
      }
      if (!disjoint) continue;

      CandidateCycle cycle;
      cycle.edges.assign(words, 0);
      // root ... a, b ... (back towards root)
      cycle.atoms.assign(pa.rbegin(), pa.rend());
      for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
        cycle.atoms.push_back(pb[j]);
      }
      auto add_bond = [&](int b) {
        cycle.bonds.push_back(b);
        cycle.edges[b / 64] |= std::uint64_t { 1 } << (b % 64);
      };
      for (std::size_t i = 0; i + 1 < pa.size(); ++i) add_bond(parent_bond[pa[i]]);
      for (std::size_t j = 0; j + 1 < pb.size(); ++j) add_bond(parent_bond[pb[j]]);
      add_bond(static_cast<int>(bi));
      std::sort(cycle.bonds.begin(), cycle.bonds.end());
      candidates.push_back(std::move(cycle));
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateCycle &l, const CandidateCycle &r) {
              if (l.bonds.size() != r.bonds.size()) {
                return l.bonds.size() < r.bonds.size();
              }
              return l.bonds < r.bonds;
            });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const CandidateCycle &l,
                                  const CandidateCycle &r) {
                                 return l.bonds == r.bonds;
                               }),
                   candidates.end());

  // Row-reduced basis keyed by pivot bit.
  std::vector<std::pair<std::size_t, EdgeSet>> basis;
  std::vector<std::vector<int>> rings;
  for (CandidateCycle &cycle: candidates) {
    EdgeSet reduced = cycle.edges;
    for (const auto &[pivot, row]: basis) {
      if ((reduced[pivot / 64] >> (pivot % 64)) & 1U) {
        for (std::size_t w = 0; w < words; ++w) reduced[w] ^= row[w];
      }
    }
    std::size_t pivot = bonds.size();
    for (std::size_t w = 0; w < words && pivot == bonds.size(); ++w) {
      if (reduced[w] != 0) {
        pivot = w * 64 + static_cast<std::size_t>(__builtin_ctzll(reduced[w]));
      }
    }
    if (pivot == bonds.size()) continue;
    for (auto &[other_pivot, row]: basis) {
      if ((row[pivot / 64] >> (pivot % 64)) & 1U) {
        for (std::size_t w = 0; w < words; ++w) row[w] ^= reduced[w];
      }
    }
    basis.emplace_back(pivot, std::move(reduced));
    rings.push_back(normalize_ring(std::move(cycle.atoms)));
    if (static_cast<int>(rings.size()) == cyclomatic) break;
  }
  return rings;
}

// Edmonds' blossom algorithm for maximum matching in a general graph.
class BlossomMatcher {
public:
  explicit BlossomMatcher(std::vector<std::vector<int>> graph)
      : g_(std::move(graph)), n_(static_cast<int>(g_.size())),
        match_(n_, -1) { }

  int solve() {
    // Greedy seed, then augment.
    for (int v = 0; v < n_; ++v) {
      if (match_[v] != -1) continue;
      for (int to: g_[v]) {
        if (match_[to] == -1) {
          match_[v] = to;
          match_[to] = v;
          break;
        }
      }
    }
    for (int v = 0; v < n_; ++v) {
      if (match_[v] != -1) continue;
      int end = find_path(v);
      while (end != -1) {
        const int pv = parent_[end];
        const int ppv = match_[pv];
        match_[end] = pv;
        match_[pv] = end;
        end = ppv;
      }
    }
    return static_cast<int>(
        std::count_if(match_.begin(), match_.end(), [](int m) { return m != -1; }));
  }

private:
  int lca(int a, int b) {
    std::vector<bool> seen(n_, false);
    for (;;) {
      a = base_[a];
      seen[a] = true;
      if (match_[a] == -1) break;
      a = parent_[match_[a]];
    }
    for (;;) {
      b = base_[b];
      if (seen[b]) return b;
      b = parent_[match_[b]];
    }
  }

  void mark_path(int v, int b, int child) {
    while (base_[v] != b) {
      blossom_[base_[v]] = blossom_[base_[match_[v]]] = true;
      parent_[v] = child;
      child = match_[v];
      v = parent_[match_[v]];
    }
  }

  int find_path(int root) {
    used_.assign(n_, false);
    parent_.assign(n_, -1);
    base_.resize(n_);
    std::iota(base_.begin(), base_.end(), 0);
    used_[root] = true;
    std::deque<int> queue { root };
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int to: g_[v]) {
        if (base_[v] == base_[to] || match_[v] == to) continue;
        if (to == root || (match_[to] != -1 && parent_[match_[to]] != -1)) {
          const int cur = lca(v, to);
          blossom_.assign(n_, false);
          mark_path(v, cur, to);
          mark_path(to, cur, v);
          for (int i = 0; i < n_; ++i) {
            if (blossom_[base_[i]]) {
              base_[i] = cur;
              if (!used_[i]) {
                used_[i] = true;
                queue.push_back(i);
              }
            }
          }
        } else if (parent_[to] == -1) {
          parent_[to] = v;
          if (match_[to] == -1) return to;
          used_[match_[to]] = true;
          queue.push_back(match_[to]);
        }
      }
    }
    return -1;
  }

  std::vector<std::vector<int>> g_;
  int n_;
  std::vector<int> match_;
  std::vector<int> parent_;
  std::vector<int> base_;
  std::vector<bool> used_;
  std::vector<bool> blossom_;
};

int bond_sum(const Adjacency &adj, const std::vector<Bond> &bonds, int atom) {
  int sum = 0;
  for (const Neighbor &nb: adj[atom]) sum += bond_valence(bonds[nb.bond].order);
  return sum;
}

bool has_exocyclic_double(const Adjacency &adj, const std::vector<Bond> &bonds,
                          int atom) {
  return std::any_of(adj[atom].begin(), adj[atom].end(),
                     [&](const Neighbor &nb) {
                       return bonds[nb.bond].order == BondOrder::kDouble;
                     });
}

// Whether an aromatic atom must take part in a double bond of the
// kekulized form.
bool needs_pi(const Atom &atom, const Adjacency &adj,
              const std::vector<Bond> &bonds, int index) {
  if (!atom.aromatic) return false;
  if (has_exocyclic_double(adj, bonds, index)) return false;
  const int target = default_valence(atom.atomic_number, atom.charge);
  if (target < 0) return false;
  return bond_sum(adj, bonds, index) + atom.total_h() + 1 <= target;
}

bool has_lone_pair(const Atom &atom) {
  return valence_electrons(atom.atomic_number) - atom.charge >= 5;
}

// Pi electrons an atom donates to a ring, or nullopt when the atom cannot
// be part of an aromatic ring.
std::optional<int> pi_contribution(const Atom &atom, const Adjacency &adj,
                                   const std::vector<Bond> &bonds,
                                   const std::vector<bool> &ring_bond,
                                   const std::vector<bool> &pi_atoms,
                                   int index) {
  if (!is_aromatic_capable(atom.atomic_number)) return std::nullopt;
  if (atom.aromatic) {
    if (has_exocyclic_double(adj, bonds, index)) return 0;
    if (pi_atoms[index]) return 1;
    return has_lone_pair(atom) ? 2 : 0;
  }

  int doubles = 0;
  bool ring_double = false;
  for (const Neighbor &nb: adj[index]) {
    switch (bonds[nb.bond].order) {
    case BondOrder::kTriple:
      return std::nullopt;
    case BondOrder::kDouble:
      ++doubles;
      ring_double = ring_double || ring_bond[nb.bond];
      break;
    default:
      break;
    }
  }
  if (doubles > 1) return std::nullopt;
  if (doubles == 1) return ring_double ? 1 : 0;

  const int degree = static_cast<int>(adj[index].size()) + atom.total_h();
  const int effective = valence_electrons(atom.atomic_number) - atom.charge;
  if (effective >= 5 && degree <= 3) return 2;
  if (effective == 3 && degree == 3) return 0;
  return std::nullopt;
}

bool huckel(int electrons) {
  return electrons >= 2 && (electrons - 2) % 4 == 0;
}

}  // namespace

Molecule Molecule::assemble(std::vector<Atom> atoms, std::vector<Bond> bonds) {
  const int n = static_cast<int>(atoms.size());
  Molecule mol;

  Adjacency adj(n);
  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    const Bond &bond = bonds[bi];
    if (bond.a < 0 || bond.b < 0 || bond.a >= n || bond.b >= n) {
      fail(SmilesErrorKind::kSyntax, "bond refers to a missing atom");
    }
    if (bond.a == bond.b) {
      fail(SmilesErrorKind::kSyntax,
           "atom " + std::to_string(bond.a) + " bonded to itself");
    }
    for (const Neighbor &nb: adj[bond.a]) {
      if (nb.atom == bond.b) {
        fail(SmilesErrorKind::kSyntax,
             "duplicate bond between atoms " + std::to_string(bond.a) + " and "
                 + std::to_string(bond.b));
      }
    }
    adj[bond.a].push_back({ bond.b, static_cast<int>(bi) });
    adj[bond.b].push_back({ bond.a, static_cast<int>(bi) });
  }
  for (int i = 0; i < n; ++i) atoms[i].index = i;

  // Connected components.
  std::vector<int> component(n, -1);
  int num_components = 0;
  for (int start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::vector<int> stack { start };
    component[start] = num_components;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const Neighbor &nb: adj[v]) {
        if (component[nb.atom] < 0) {
          component[nb.atom] = num_components;
          stack.push_back(nb.atom);
        }
      }
    }
    ++num_components;
  }

  std::vector<bool> ring_bond = BridgeFinder(adj).ring_bonds(bonds.size());

  // Aromatic bonds only exist inside rings.
  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    if (bonds[bi].order == BondOrder::kAromatic && !ring_bond[bi]) {
      bonds[bi].order = BondOrder::kSingle;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!atoms[i].aromatic) continue;
    const bool in_ring = std::any_of(adj[i].begin(), adj[i].end(),
                                     [&](const Neighbor &nb) {
                                       return ring_bond[nb.bond];
                                     });
    if (!in_ring) {
      fail(SmilesErrorKind::kValence,
           "non-ring atom " + std::to_string(i) + " marked aromatic");
    }
  }

  // Kekulization check: every aromatic atom that needs a double bond gets
  // exactly one, through aromatic bonds.
  std::vector<bool> pi_atoms(n, false);
  std::vector<int> pi_index(n, -1);
  int num_pi = 0;
  for (int i = 0; i < n; ++i) {
    if (needs_pi(atoms[i], adj, bonds, i)) {
      pi_atoms[i] = true;
      pi_index[i] = num_pi++;
    }
  }
  if (num_pi > 0) {
    std::vector<std::vector<int>> pi_graph(num_pi);
    for (const Bond &bond: bonds) {
      if (bond.order != BondOrder::kAromatic) continue;
      if (!pi_atoms[bond.a] || !pi_atoms[bond.b]) continue;
      pi_graph[pi_index[bond.a]].push_back(pi_index[bond.b]);
      pi_graph[pi_index[bond.b]].push_back(pi_index[bond.a]);
    }
    if (BlossomMatcher(std::move(pi_graph)).solve() != num_pi) {
      fail(SmilesErrorKind::kValence, "cannot kekulize aromatic system");
    }
  }

  // Valence check.
  for (int i = 0; i < n; ++i) {
    const Atom &atom = atoms[i];
    const auto valences = allowed_valences(atom.atomic_number);
    if (valences.empty()) continue;
    const int used = bond_sum(adj, bonds, i) + atom.total_h()
                     + (pi_atoms[i] ? 1 : 0);
    const int limit = valences.back() + std::abs(atom.charge);
    if (used > limit) {
      fail(SmilesErrorKind::kValence,
           "atom " + std::to_string(i) + " (" + std::string(atom.symbol())
               + ") has valence " + std::to_string(used) + ", limit "
               + std::to_string(limit));
    }
  }

  const int cyclomatic = static_cast<int>(bonds.size()) - n + num_components;
  std::vector<std::vector<int>> rings = find_sssr(adj, bonds, cyclomatic);

  // Aromaticity perception over single rings, then over fused ring pairs
  // whose members are not aromatic on their own.
  std::vector<std::optional<int>> contribution(n);
  for (int i = 0; i < n; ++i) {
    contribution[i] = pi_contribution(atoms[i], adj, bonds, ring_bond,
                                      pi_atoms, i);
  }
  auto electrons = [&](const std::vector<int> &ring_atoms) -> std::optional<int> {
    int total = 0;
    for (int a: ring_atoms) {
      if (!contribution[a]) return std::nullopt;
      total += *contribution[a];
    }
    return total;
  };
  auto ring_bond_ids = [&](const std::vector<int> &ring) {
    std::vector<int> ids;
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const int u = ring[k];
      const int v = ring[(k + 1) % ring.size()];
      for (const Neighbor &nb: adj[u]) {
        if (nb.atom == v) ids.push_back(nb.bond);
      }
    }
    return ids;
  };

  std::vector<bool> aromatic_ring(rings.size(), false);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const auto e = electrons(rings[r]);
    aromatic_ring[r] = e && huckel(*e);
  }
  std::vector<int> new_aromatic_bonds;
  std::vector<int> new_aromatic_atoms;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (!aromatic_ring[r]) continue;
    new_aromatic_atoms.insert(new_aromatic_atoms.end(), rings[r].begin(),
                              rings[r].end());
    const auto ids = ring_bond_ids(rings[r]);
    new_aromatic_bonds.insert(new_aromatic_bonds.end(), ids.begin(), ids.end());
  }
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (aromatic_ring[r]) continue;
    const auto bonds_r = ring_bond_ids(rings[r]);
    for (std::size_t s = r + 1; s < rings.size(); ++s) {
      if (aromatic_ring[s]) continue;
      const auto bonds_s = ring_bond_ids(rings[s]);
      const bool fused = std::any_of(bonds_r.begin(), bonds_r.end(), [&](int b) {
        return std::find(bonds_s.begin(), bonds_s.end(), b) != bonds_s.end();
      });
      if (!fused) continue;
      std::vector<int> united = rings[r];
      for (int a: rings[s]) {
        if (std::find(united.begin(), united.end(), a) == united.end()) {
          united.push_back(a);
        }
      }
      const auto e = electrons(united);
      if (!e || !huckel(*e)) continue;
      new_aromatic_atoms.insert(new_aromatic_atoms.end(), united.begin(),
                                united.end());
      new_aromatic_bonds.insert(new_aromatic_bonds.end(), bonds_r.begin(),
                                bonds_r.end());
      new_aromatic_bonds.insert(new_aromatic_bonds.end(), bonds_s.begin(),
                                bonds_s.end());
    }
  }
  for (int a: new_aromatic_atoms) atoms[a].aromatic = true;
  for (int b: new_aromatic_bonds) bonds[b].order = BondOrder::kAromatic;

  mol.atoms_ = std::move(atoms);
  mol.bonds_ = std::move(bonds);
  mol.adjacency_ = std::move(adj);
  mol.rings_ = std::move(rings);
  mol.ring_bond_ = std::move(ring_bond);
  mol.component_ = std::move(component);
  mol.num_components_ = num_components;
  return mol;
}

bool Molecule::is_ring_atom(int atom) const {
  return std::any_of(adjacency_[atom].begin(), adjacency_[atom].end(),
                     [&](const Neighbor &nb) { return ring_bond_[nb.bond]; });
}

int Molecule::heavy_atom_count() const {
  return static_cast<int>(std::count_if(atoms_.begin(), atoms_.end(),
                                        [](const Atom &a) {
                                          return a.atomic_number != 1;
                                        }));
}

int Molecule::heavy_degree(int atom) const {
  return static_cast<int>(std::count_if(
      adjacency_[atom].begin(), adjacency_[atom].end(),
      [&](const Neighbor &nb) { return atoms_[nb.atom].atomic_number != 1; }));
}

Molecule Molecule::renumbered(std::span<const int> new_index) const {
  if (new_index.size() != atoms_.size()) {
    throw std::invalid_argument("renumbered: permutation size mismatch");
  }
  std::vector<Atom> atoms(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    atoms.at(new_index[i]) = atoms_[i];
  }
  std::vector<Bond> bonds;
  bonds.reserve(bonds_.size());
  for (const Bond &bond: bonds_) {
    int a = new_index[bond.a];
    int b = new_index[bond.b];
    if (a > b) std::swap(a, b);
    bonds.push_back({ a, b, bond.order });
  }
  std::sort(bonds.begin(), bonds.end(), [](const Bond &l, const Bond &r) {
    return std::pair(l.a, l.b) < std::pair(r.a, r.b);
  });
  return assemble(std::move(atoms), std::move(bonds));
}

}  // namespace icma::chem
