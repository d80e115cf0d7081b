#include "icma/chem/element.h"

#include <array>
#include <string_view>

namespace icma::chem {
namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber + 1> kSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

constexpr std::array kValH = {1};
constexpr std::array kValLi = {1};
constexpr std::array kValBe = {2};
constexpr std::array kValB = {3};
constexpr std::array kValC = {4};
constexpr std::array kValN = {3};
constexpr std::array kValO = {2};
constexpr std::array kValF = {1};
constexpr std::array kValMg = {2};
constexpr std::array kValAl = {3};
constexpr std::array kValSi = {4};
constexpr std::array kValP = {3, 5, 7};
constexpr std::array kValS = {2, 4, 6};
constexpr std::array kValCl = {1, 3, 5, 7};
constexpr std::array kValAs = {3, 5, 7};
constexpr std::array kValSe = {2, 4, 6};
constexpr std::array kValI = {1, 3, 5, 7};

}  // namespace

std::optional<int> atomic_number(std::string_view symbol) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    if (kSymbols[z] == symbol) return z;
  }
  return std::nullopt;
}

std::string_view element_symbol(int z) {
  if (z < 0 || z > kMaxAtomicNumber) return "?";
  return kSymbols[z];
}

bool is_organic_subset(int z) {
  switch (z) {
  case 5: case 6: case 7: case 8: case 9:
  case 15: case 16: case 17: case 35: case 53:
    return true;
  default:
    return false;
  }
}

bool is_aromatic_capable(int z) {
  switch (z) {
  case 5: case 6: case 7: case 8: case 15: case 16: case 33: case 34: case 52:
    return true;
  default:
    return false;
  }
}

std::span<const int> allowed_valences(int z) {
  switch (z) {
  case 1: return kValH;
  case 3: case 11: case 19: case 37: case 55: return kValLi;
  case 4: case 12: case 20: case 38: case 56: return kValMg;
  case 5: return kValB;
  case 6: return kValC;
  case 7: return kValN;
  case 8: return kValO;
  case 9: return kValF;
  case 13: return kValAl;
  case 14: case 32: return kValSi;
  case 15: return kValP;
  case 16: return kValS;
  case 17: case 35: return kValCl;
  case 33: case 51: return kValAs;
  case 34: case 52: return kValSe;
  case 53: return kValI;
  default: return {};
  }
}

int valence_electrons(int z) {
  switch (z) {
  case 1: case 3: case 11: case 19: case 37: case 55: return 1;
  case 4: case 12: case 20: case 38: case 56: return 2;
  case 5: case 13: case 31: case 49: case 81: return 3;
  case 6: case 14: case 32: case 50: case 82: return 4;
  case 7: case 15: case 33: case 51: case 83: return 5;
  case 8: case 16: case 34: case 52: case 84: return 6;
  case 9: case 17: case 35: case 53: case 85: return 7;
  default: return 0;
  }
}

int default_valence(int z, int charge) {
  if (z == 1) return charge == 0 ? 1 : 0;
  const int ve = valence_electrons(z);
  if (ve < 3) return -1;
  const int shifted = ve - charge;
  if (shifted < 1 || shifted > 7) return -1;
  return shifted >= 4 ? 8 - shifted : shifted;
}

}  // namespace icma::chem
