#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icma/chem/element.h"
#include "icma/chem/molecule.h"
#include "icma/chem/smiles.h"

namespace icma::chem {
namespace {

enum class PendingBond {
  kNone,
  kSingle,
  kDouble,
  kTriple,
  kAromatic,
  kDirectional,
};

struct RingOpening {
  int atom;
  PendingBond bond;
  std::size_t position;
};

struct RawAtom {
  Atom atom;
  bool organic = false;
};

class SmilesParser {
public:
  explicit SmilesParser(std::string_view text): text_(text) { }

  Molecule parse() {
    if (text_.empty()) error(SmilesErrorKind::kSyntax, "empty SMILES");

    int prev = -1;
    PendingBond pending = PendingBond::kNone;
    bool expect_atom = true;  // start of a component or of a branch
    std::vector<int> branches;

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      switch (c) {
      case '-': case '=': case '#': case ':': case '/': case '\\':
        if (pending != PendingBond::kNone) {
          error(SmilesErrorKind::kSyntax, "two consecutive bond symbols");
        }
        if (prev < 0) error(SmilesErrorKind::kSyntax, "bond without a preceding atom");
        pending = bond_symbol(c);
        ++pos_;
        break;
      case '$':
        error(SmilesErrorKind::kUnsupported, "quadruple bonds are not supported");
      case '(':
        if (prev < 0 || expect_atom) {
          error(SmilesErrorKind::kSyntax, "branch without a preceding atom");
        }
        if (pending != PendingBond::kNone) {
          error(SmilesErrorKind::kSyntax, "bond symbol before '('");
        }
        branches.push_back(prev);
        expect_atom = true;
        ++pos_;
        break;
      case ')':
        if (branches.empty()) error(SmilesErrorKind::kSyntax, "unbalanced ')'");
        if (expect_atom || pending != PendingBond::kNone) {
          error(SmilesErrorKind::kSyntax, "empty branch or dangling bond");
        }
        prev = branches.back();
        branches.pop_back();
        ++pos_;
        break;
      case '.':
        if (prev < 0 || expect_atom || pending != PendingBond::kNone) {
          error(SmilesErrorKind::kSyntax, "misplaced '.'");
        }
        if (!branches.empty()) {
          error(SmilesErrorKind::kSyntax, "'.' inside a branch");
        }
        prev = -1;
        expect_atom = true;
        ++pos_;
        break;
      case '%': case '0': case '1': case '2': case '3': case '4':
      case '5': case '6': case '7': case '8': case '9': {
        if (prev < 0 || expect_atom) {
          error(SmilesErrorKind::kSyntax, "ring closure without an atom");
        }
        const std::size_t at = pos_;
        ring_closure(prev, read_ring_number(), pending, at);
        pending = PendingBond::kNone;
        break;
      }
      case '*':
        error(SmilesErrorKind::kUnsupported, "wildcard atoms are not supported");
      default: {
        if (std::isspace(static_cast<unsigned char>(c))) {
          error(SmilesErrorKind::kSyntax, "whitespace inside SMILES");
        }
        const int atom = c == '[' ? bracket_atom() : organic_atom();
        if (prev >= 0) add_bond(prev, atom, pending, pos_);
        pending = PendingBond::kNone;
        prev = atom;
        expect_atom = false;
        break;
      }
      }
    }

    if (pending != PendingBond::kNone) {
      error(SmilesErrorKind::kSyntax, "SMILES ends with a bond symbol");
    }
    if (!branches.empty()) error(SmilesErrorKind::kSyntax, "unclosed branch");
    if (expect_atom) error(SmilesErrorKind::kSyntax, "SMILES ends unexpectedly");
    if (!open_rings_.empty()) {
      const auto &[number, opening] = *open_rings_.begin();
      throw SmilesError(SmilesErrorKind::kRingMismatch, opening.position,
                        "ring closure " + std::to_string(number)
                            + " is never closed");
    }

    assign_implicit_hydrogens();
    return fold_hydrogens();
  }

private:
  [[noreturn]] void error(SmilesErrorKind kind, const std::string &what) const {
    throw SmilesError(kind, pos_,
                      what + " at position " + std::to_string(pos_));
  }

  static PendingBond bond_symbol(char c) {
    switch (c) {
    case '-': return PendingBond::kSingle;
    case '=': return PendingBond::kDouble;
    case '#': return PendingBond::kTriple;
    case ':': return PendingBond::kAromatic;
    default: return PendingBond::kDirectional;
    }
  }

  int read_ring_number() {
    if (text_[pos_] != '%') return text_[pos_++] - '0';
    if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))
        || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
      error(SmilesErrorKind::kSyntax, "'%' must be followed by two digits");
    }
    const int number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
    pos_ += 3;
    return number;
  }

  void ring_closure(int atom, int number, PendingBond bond, std::size_t at) {
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      open_rings_.emplace(number, RingOpening { atom, bond, at });
      return;
    }
    RingOpening opening = it->second;
    open_rings_.erase(it);
    if (opening.bond != PendingBond::kNone && bond != PendingBond::kNone
        && opening.bond != bond) {
      error(SmilesErrorKind::kSyntax,
            "conflicting bond symbols on ring closure " + std::to_string(number));
    }
    add_bond(opening.atom, atom,
             bond != PendingBond::kNone ? bond : opening.bond, at);
  }

  void add_bond(int a, int b, PendingBond pending, std::size_t at) {
    if (a == b) {
      throw SmilesError(SmilesErrorKind::kSyntax, at,
                        "ring closure bonds an atom to itself at position "
                            + std::to_string(at));
    }
    for (const Bond &bond: bonds_) {
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)) {
        throw SmilesError(SmilesErrorKind::kSyntax, at,
                          "duplicate bond at position " + std::to_string(at));
      }
    }
    BondOrder order = BondOrder::kSingle;
    switch (pending) {
    case PendingBond::kNone:
      order = atoms_[a].atom.aromatic && atoms_[b].atom.aromatic
                  ? BondOrder::kAromatic
                  : BondOrder::kSingle;
      break;
    case PendingBond::kSingle:
    case PendingBond::kDirectional:
      order = BondOrder::kSingle;
      break;
    case PendingBond::kDouble:
      order = BondOrder::kDouble;
      break;
    case PendingBond::kTriple:
      order = BondOrder::kTriple;
      break;
    case PendingBond::kAromatic:
      order = BondOrder::kAromatic;
      break;
    }
    bonds_.push_back({ a, b, order });
  }

  int organic_atom() {
    const char c = text_[pos_];
    RawAtom raw;
    raw.organic = true;
    auto next_is = [&](char expected) {
      return pos_ + 1 < text_.size() && text_[pos_ + 1] == expected;
    };
    std::string_view symbol;
    switch (c) {
    case 'C':
      symbol = next_is('l') ? "Cl" : "C";
      break;
    case 'B':
      symbol = next_is('r') ? "Br" : "B";
      break;
    case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
      symbol = text_.substr(pos_, 1);
      break;
    case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
      symbol = text_.substr(pos_, 1);
      raw.atom.aromatic = true;
      break;
    default:
      error(SmilesErrorKind::kSyntax,
            std::string("unexpected character '") + c + "'");
    }
    std::string upper(symbol);
    upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
    raw.atom.atomic_number = *atomic_number(upper);
    pos_ += symbol.size();
    atoms_.push_back(raw);
    return static_cast<int>(atoms_.size()) - 1;
  }

  int read_int() {
    int value = 0;
    int digits = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      ++pos_;
      if (++digits > 4) error(SmilesErrorKind::kSyntax, "number too long");
    }
    return value;
  }

  bool at_digit() const {
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }

  int bracket_atom() {
    const std::size_t close = text_.find(']', pos_);
    if (close == std::string_view::npos) {
      error(SmilesErrorKind::kSyntax, "unterminated bracket atom");
    }
    ++pos_;
    RawAtom raw;
    raw.atom.bracket = true;

    if (at_digit()) raw.atom.isotope = read_int();

    if (pos_ >= close) error(SmilesErrorKind::kSyntax, "missing element symbol");
    if (text_[pos_] == '*') {
      error(SmilesErrorKind::kUnsupported, "wildcard atoms are not supported");
    }
    if (std::islower(static_cast<unsigned char>(text_[pos_]))) {
      // Aromatic symbols: se, as, te, then the single-letter set.
      for (std::string_view sym: { "se", "as", "te", "b", "c", "n", "o", "p", "s" }) {
        if (text_.substr(pos_, sym.size()) == sym) {
          std::string upper(sym);
          upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
          raw.atom.atomic_number = *atomic_number(upper);
          raw.atom.aromatic = true;
          pos_ += sym.size();
          break;
        }
      }
      if (!raw.atom.aromatic) error(SmilesErrorKind::kSyntax, "unknown aromatic symbol");
    } else if (std::isupper(static_cast<unsigned char>(text_[pos_]))) {
      std::optional<int> z;
      if (pos_ + 1 < close && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        z = atomic_number(text_.substr(pos_, 2));
        if (z) pos_ += 2;
      }
      if (!z) {
        z = atomic_number(text_.substr(pos_, 1));
        if (!z) error(SmilesErrorKind::kSyntax, "unknown element symbol");
        pos_ += 1;
      }
      raw.atom.atomic_number = *z;
    } else {
      error(SmilesErrorKind::kSyntax, "missing element symbol");
    }

    // Chirality, parsed and dropped.
    if (pos_ < close && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < close && text_[pos_] == '@') {
        ++pos_;
      } else {
        for (std::string_view cls: { "TH", "AL", "SP", "TB", "OH" }) {
          if (text_.substr(pos_, 2) == cls) {
            pos_ += 2;
            if (!at_digit()) error(SmilesErrorKind::kSyntax, "chirality class needs a number");
            read_int();
            break;
          }
        }
      }
    }

    if (pos_ < close && text_[pos_] == 'H') {
      ++pos_;
      raw.atom.explicit_h = at_digit() ? text_[pos_++] - '0' : 1;
    }

    if (pos_ < close && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_++];
      int magnitude = 1;
      if (at_digit()) {
        magnitude = read_int();
      } else {
        while (pos_ < close && text_[pos_] == sign) {
          ++magnitude;
          ++pos_;
        }
      }
      if (magnitude > 8) error(SmilesErrorKind::kSyntax, "charge out of range");
      raw.atom.charge = sign == '+' ? magnitude : -magnitude;
    }

    if (pos_ < close && text_[pos_] == ':') {
      ++pos_;
      if (!at_digit()) error(SmilesErrorKind::kSyntax, "atom class needs a number");
      read_int();
    }

    if (pos_ != close) error(SmilesErrorKind::kSyntax, "malformed bracket atom");
    ++pos_;
    atoms_.push_back(raw);
    return static_cast<int>(atoms_.size()) - 1;
  }

  void assign_implicit_hydrogens() {
    std::vector<int> sums(atoms_.size(), 0);
    for (const Bond &bond: bonds_) {
      sums[bond.a] += bond_valence(bond.order);
      sums[bond.b] += bond_valence(bond.order);
    }
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      RawAtom &raw = atoms_[i];
      if (!raw.organic) continue;
      raw.atom.implicit_h =
          default_implicit_h(raw.atom.atomic_number, raw.atom.aromatic, sums[i]);
    }
  }

  Molecule fold_hydrogens() {
    const std::size_t n = atoms_.size();
    std::vector<int> degree(n, 0);
    for (const Bond &bond: bonds_) {
      ++degree[bond.a];
      ++degree[bond.b];
    }
    std::vector<bool> removed(n, false);
    for (const Bond &bond: bonds_) {
      if (bond.order != BondOrder::kSingle) continue;
      for (auto [h, heavy]: { std::pair(bond.a, bond.b), std::pair(bond.b, bond.a) }) {
        const Atom &hat = atoms_[h].atom;
        if (hat.atomic_number != 1 || hat.charge != 0 || hat.isotope
            || hat.explicit_h != 0 || degree[h] != 1) {
          continue;
        }
        if (atoms_[heavy].atom.atomic_number == 1) continue;
        removed[h] = true;
        atoms_[heavy].atom.explicit_h += 1;
      }
    }

    std::vector<int> remap(n, -1);
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n; ++i) {
      if (removed[i]) continue;
      remap[i] = static_cast<int>(atoms.size());
      atoms.push_back(atoms_[i].atom);
    }
    std::vector<Bond> bonds;
    for (const Bond &bond: bonds_) {
      if (removed[bond.a] || removed[bond.b]) continue;
      bonds.push_back({ remap[bond.a], remap[bond.b], bond.order });
    }
    return Molecule::assemble(std::move(atoms), std::move(bonds));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<RawAtom> atoms_;
  std::vector<Bond> bonds_;
  std::map<int, RingOpening> open_rings_;
};

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace

Molecule parse_smiles(std::string_view text) {
  return SmilesParser(trim(text)).parse();
}

bool is_valid(std::string_view text) noexcept {
  try {
    parse_smiles(text);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace icma::chem
