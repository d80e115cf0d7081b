#include <algorithm>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "icma/chem/element.h"
#include "icma/chem/molecule.h"
#include "icma/chem/smiles.h"

#include "oracles.h"

namespace icma::chem {
namespace {

int count_aromatic_atoms(const Molecule &mol) {
  return static_cast<int>(std::count_if(mol.atoms().begin(), mol.atoms().end(),
                                        [](const Atom &a) { return a.aromatic; }));
}

int count_bonds(const Molecule &mol, BondOrder order) {
  return static_cast<int>(std::count_if(mol.bonds().begin(), mol.bonds().end(),
                                        [&](const Bond &b) { return b.order == order; }));
}

SmilesErrorKind error_kind(std::string_view smi) {
  try {
    parse_smiles(smi);
  } catch (const SmilesError &e) {
    return e.kind();
  }
  ADD_FAILURE() << smi << " parsed";
  return SmilesErrorKind::kSyntax;
}

TEST(ParseSmiles, TwoAtoms) {
  Molecule mol = parse_smiles("CO");
  ASSERT_EQ(mol.size(), 2);
  EXPECT_EQ(mol.atom(0).atomic_number, 6);
  EXPECT_EQ(mol.atom(1).atomic_number, 8);
  ASSERT_EQ(mol.bonds().size(), 1);
  EXPECT_EQ(mol.bond(0).order, BondOrder::kSingle);
  EXPECT_EQ(mol.atom(0).total_h(), 3);
  EXPECT_EQ(mol.atom(1).total_h(), 1);
}

TEST(ParseSmiles, Cyclopropane) {
  Molecule mol = parse_smiles("C1CC1");
  ASSERT_EQ(mol.rings().size(), 1);
  EXPECT_EQ(mol.rings()[0], (std::vector<int> { 0, 1, 2 }));
}

TEST(ParseSmiles, UnclosedRing) {
  EXPECT_EQ(error_kind("C1CC"), SmilesErrorKind::kRingMismatch);
  EXPECT_EQ(error_kind("C1CC2CC1"), SmilesErrorKind::kRingMismatch);
}

// Textbook counts for benzene: six aromatic CH atoms, six aromatic bonds and
// a single ring.
TEST(ParseSmiles, Benzene) {
  for (const char *smi: { "c1ccccc1", "C1=CC=CC=C1", "c1:c:c:c:c:c:1" }) {
    Molecule mol = parse_smiles(smi);
    SCOPED_TRACE(smi);
    EXPECT_EQ(mol.size(), 6);
    EXPECT_EQ(count_aromatic_atoms(mol), 6);
    EXPECT_EQ(count_bonds(mol, BondOrder::kAromatic), 6);
    EXPECT_EQ(mol.rings().size(), 1);
    for (const Atom &a: mol.atoms()) EXPECT_EQ(a.total_h(), 1);
  }
}

TEST(ParseSmiles, Heteroaromatics) {
  struct Case {
    const char *smiles;
    int aromatic_atoms;
    int rings;
  };
  for (const Case &c: { Case { "c1ccncc1", 6, 1 }, Case { "c1cc[nH]c1", 5, 1 },
                        Case { "c1ccoc1", 5, 1 }, Case { "c1ccsc1", 5, 1 },
                        Case { "c1ccc2ccccc2c1", 10, 2 },
                        Case { "Cn1cnc2c1c(=O)n(C)c(=O)n2C", 9, 2 },
                        Case { "C1=CC=CN1", 5, 1 }, Case { "O=C1C=CC(=O)C=C1", 0, 1 } }) {
    SCOPED_TRACE(c.smiles);
    Molecule mol = parse_smiles(c.smiles);
    EXPECT_EQ(count_aromatic_atoms(mol), c.aromatic_atoms);
    EXPECT_EQ(mol.rings().size(), c.rings);
  }
}

TEST(ParseSmiles, CannotKekulize) {
  EXPECT_EQ(error_kind("c1cccc1"), SmilesErrorKind::kValence);
  EXPECT_EQ(error_kind("c1ccccc1c"), SmilesErrorKind::kValence);
}

TEST(ParseSmiles, BracketAtoms) {
  Molecule mol = parse_smiles("[13CH3][NH3+]");
  EXPECT_EQ(mol.atom(0).isotope, 13);
  EXPECT_EQ(mol.atom(0).total_h(), 3);
  EXPECT_EQ(mol.atom(1).charge, 1);
  EXPECT_EQ(mol.atom(1).total_h(), 3);

  Molecule salt = parse_smiles("[Na+].[Cl-]");
  EXPECT_EQ(salt.num_components(), 2);
  EXPECT_EQ(salt.atom(0).charge, 1);
  EXPECT_EQ(salt.atom(1).charge, -1);

  EXPECT_EQ(parse_smiles("[Fe+++]").atom(0).charge, 3);
  EXPECT_EQ(parse_smiles("[O--]").atom(0).charge, -2);
  EXPECT_EQ(parse_smiles("[CH4:7]").atom(0).total_h(), 4);
}

TEST(ParseSmiles, ExplicitHydrogensFold) {
  Molecule mol = parse_smiles("[H]C([H])([H])[H]");
  ASSERT_EQ(mol.size(), 1);
  EXPECT_EQ(mol.atom(0).total_h(), 4);
  EXPECT_EQ(canonicalize(mol).text, "C");
  EXPECT_EQ(parse_smiles("[H][H]").size(), 2);
}

TEST(ParseSmiles, StereoIsDropped) {
  EXPECT_EQ(canonicalize(parse_smiles("C[C@H](N)C(=O)O")),
            canonicalize(parse_smiles("C[C@@H](N)C(=O)O")));
  EXPECT_EQ(canonicalize(parse_smiles("F/C=C/F")), canonicalize(parse_smiles("FC=CF")));
  EXPECT_EQ(canonicalize(parse_smiles("F/C=C\\F")), canonicalize(parse_smiles("FC=CF")));
}

TEST(ParseSmiles, PercentRingClosures) {
  EXPECT_EQ(canonicalize(parse_smiles("C%12CC%12")).text, "C1CC1");
  EXPECT_EQ(parse_smiles("C%10CCCCC%10").rings().size(), 1);
}

TEST(ParseSmiles, Errors) {
  EXPECT_EQ(error_kind("C((C)"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("C)"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("C=)"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("[C"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("Xx"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("C11"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("C12CC12"), SmilesErrorKind::kSyntax);
  EXPECT_EQ(error_kind("C(C)(C)(C)(C)C"), SmilesErrorKind::kValence);
  EXPECT_EQ(error_kind("O=O=O"), SmilesErrorKind::kValence);
  EXPECT_EQ(error_kind("C$C"), SmilesErrorKind::kUnsupported);
  EXPECT_EQ(error_kind("*C"), SmilesErrorKind::kUnsupported);
}

TEST(ParseSmiles, ChargeShiftsValence) {
  EXPECT_TRUE(is_valid("C[N+](C)(C)C"));
  EXPECT_FALSE(is_valid("CN(C)(C)C"));
  EXPECT_TRUE(is_valid("O=[N+]([O-])c1ccccc1"));
  EXPECT_TRUE(is_valid("[O-]S(=O)(=O)[O-].[Cu+2]"));
}

TEST(IsValid, Examples) {
  EXPECT_TRUE(is_valid("CCOC"));
  EXPECT_FALSE(is_valid(""));
  EXPECT_FALSE(is_valid("   "));
  EXPECT_FALSE(is_valid("C((C)"));
  EXPECT_TRUE(is_valid(" CCO\n"));
}

TEST(IsValid, NeverThrowsOnJunk) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "CNOcn()[]=#123%+-@/\\.Hl$*: ";
  std::uniform_int_distribution<std::size_t> len(0, 24);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    for (std::size_t k = len(rng); k > 0; --k) s += alphabet[pick(rng)];
    EXPECT_NO_THROW(is_valid(s)) << s;
  }
}

TEST(Canonicalize, SameGraphSameText) {
  EXPECT_EQ(canonicalize(parse_smiles("CCO")), canonicalize(parse_smiles("OCC")));
  EXPECT_EQ(canonicalize(parse_smiles("C")).text, "C");
  EXPECT_EQ(canonicalize(parse_smiles("C1=CC=CC=C1")), canonicalize(parse_smiles("c1ccccc1")));
  EXPECT_EQ(canonicalize(parse_smiles("OC(=O)c1ccccc1")),
            canonicalize(parse_smiles("c1ccc(C(O)=O)cc1")));
  EXPECT_NE(canonicalize(parse_smiles("CCO")), canonicalize(parse_smiles("COC")));
}

TEST(Canonicalize, ComponentsSorted) {
  EXPECT_EQ(canonicalize(parse_smiles("[Na+].[Cl-]")),
            canonicalize(parse_smiles("[Cl-].[Na+]")));
  EXPECT_EQ(canonicalize(parse_smiles("CCO.O")), canonicalize(parse_smiles("O.OCC")));
}

TEST(Canonicalize, Permutations) {
  std::mt19937_64 rng(20240611);
  const auto records = oracle::fixture_records();
  ASSERT_EQ(records.size(), 50);
  for (const auto &r: records) {
    const Molecule mol = parse_smiles(r.smiles);
    const CanonicalSmiles expected = canonicalize(mol);
    for (int k = 0; k < 100; ++k) {
      const auto perm = oracle::random_permutation(mol.size(), rng);
      ASSERT_EQ(canonicalize(mol.renumbered(perm)), expected) << r.smiles;
    }
  }
}

TEST(Canonicalize, RoundTrip) {
  for (const auto &r: oracle::fixture_records()) {
    const CanonicalSmiles first = canonicalize(parse_smiles(r.smiles));
    const Molecule again = parse_smiles(first.text);
    EXPECT_EQ(canonicalize(again), first) << r.smiles;
    EXPECT_EQ(again.size(), parse_smiles(r.smiles).size()) << r.smiles;
  }
}

TEST(Canonicalize, RanksArePermutation) {
  const Molecule mol = parse_smiles("CC(=O)Oc1ccccc1C(=O)O");
  auto ranks = canonical_ranks(mol);
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) EXPECT_EQ(ranks[i], static_cast<int>(i));
}

TEST(Rings, CyclomaticIdentity) {
  for (const auto &r: oracle::fixture_records()) {
    const Molecule mol = parse_smiles(r.smiles);
    const auto expected = static_cast<long>(mol.bonds().size()) - static_cast<long>(mol.size())
                          + mol.num_components();
    EXPECT_EQ(static_cast<long>(mol.rings().size()), expected) << r.smiles;
  }
}

TEST(Rings, CageSizes) {
  const Molecule cubane = parse_smiles("C12C3C4C1C5C2C3C45");
  EXPECT_EQ(cubane.rings().size(), 5);
  for (const auto &ring: cubane.rings()) EXPECT_EQ(ring.size(), 4);

  const Molecule adamantane = parse_smiles("C1C2CC3CC1CC(C2)C3");
  EXPECT_EQ(adamantane.rings().size(), 3);
  for (const auto &ring: adamantane.rings()) EXPECT_EQ(ring.size(), 6);
}

TEST(Elements, Lookup) {
  EXPECT_EQ(atomic_number("C"), 6);
  EXPECT_EQ(atomic_number("Cl"), 17);
  EXPECT_FALSE(atomic_number("Xx").has_value());
  EXPECT_EQ(element_symbol(35), "Br");
}

}  // namespace
}  // namespace icma::chem
