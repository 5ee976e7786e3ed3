#pragma once

#include <numbers>

namespace bectwist::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double bohr_radius = 5.29177210903e-11; // m
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;

} // namespace bectwist::constants
