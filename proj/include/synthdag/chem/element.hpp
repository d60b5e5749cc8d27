#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace synthdag::chem {

inline constexpr std::array<std::string_view, 104> kElementSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn",
    "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr",
    "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb",
    "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr"};

inline constexpr int kMaxAtomicNumber = 103;

// Atomic number for a symbol, or nullopt. Symbols are case sensitive.
constexpr std::optional<int> atomic_number(std::string_view symbol) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    if (kElementSymbols[static_cast<std::size_t>(z)] == symbol) return z;
  }
  return std::nullopt;
}

constexpr std::string_view element_symbol(int z) {
  return kElementSymbols[static_cast<std::size_t>(z)];
}

// The one-hot element vocabulary used for atom features: H through Ba, the
// common lanthanides, and the heavy main-group/transition metals seen in
// reaction corpora. Everything else goes to a trailing "other" slot.
inline constexpr std::array<int, 72> kFeatureElements = {
    1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12, 13, 14, 15, 16, 17, 18,
    19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36,
    37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50, 51, 52, 53, 54,
    55, 56, 57, 58, 60, 62, 72, 73, 74, 75, 76, 77, 78, 79, 80, 81, 82, 83};

constexpr int feature_element_slot(int z) {
  for (std::size_t i = 0; i < kFeatureElements.size(); ++i) {
    if (kFeatureElements[i] == z) return static_cast<int>(i);
  }
  return static_cast<int>(kFeatureElements.size());
}

namespace detail {
inline constexpr int kValB[] = {3};
inline constexpr int kValC[] = {4};
inline constexpr int kValN[] = {3, 5};
inline constexpr int kValO[] = {2};
inline constexpr int kValP[] = {3, 5};
inline constexpr int kValS[] = {2, 4, 6};
inline constexpr int kValHalogen[] = {1};
}  // namespace detail

// Elements that may be written without brackets, with their implicit-H
// valence ladder.
constexpr std::span<const int> default_valences(int z) {
  switch (z) {
    case 5: return detail::kValB;
    case 6: return detail::kValC;
    case 7: return detail::kValN;
    case 8: return detail::kValO;
    case 15: return detail::kValP;
    case 16: return detail::kValS;
    case 9:
    case 17:
    case 35:
    case 53: return detail::kValHalogen;
    default: return {};
  }
}

constexpr bool in_organic_subset(int z) { return !default_valences(z).empty(); }

// Elements allowed in lowercase aromatic form.
constexpr bool can_be_aromatic(int z) {
  return z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16 || z == 33 ||
         z == 34;
}

// Maximum total valence (bond orders plus hydrogens) for a neutral atom.
constexpr int neutral_max_valence(int z) {
  switch (z) {
    case 1: return 1;
    case 5: return 3;
    case 6: return 4;
    case 7: return 3;
    case 8: return 2;
    case 9: return 1;
    case 14: return 4;
    case 15: return 5;
    case 16: return 6;
    case 17: return 1;
    case 33: return 5;
    case 34: return 6;
    case 35: return 1;
    case 53: return 5;
    default: return 8;
  }
}

// Charge-adjusted maximum valence. Cations of pnictogens/chalcogens gain a
// bond (ammonium, oxonium); anions lose one. Carbon loses one either way;
// boron gains one as an anion.
constexpr int max_valence(int z, int charge) {
  const int base = neutral_max_valence(z);
  if (base == 8) return 8;
  int v = base;
  switch (z) {
    case 6:
    case 14: v = base - (charge < 0 ? -charge : charge); break;
    case 5: v = base - charge; break;
    case 1: v = charge == 0 ? 1 : 0; break;
    default: v = base + charge; break;
  }
  return v < 0 ? 0 : v;
}

}  // namespace synthdag::chem
