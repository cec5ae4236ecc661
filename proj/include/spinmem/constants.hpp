#pragma once

#include <numbers>

namespace spinmem {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double pi = std::numbers::pi;

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double mu0_over_4pi = 1.00000000055e-7;  // T m / A

// Diamond
inline constexpr double diamond_lattice_constant = 3.567e-10;  // m, conventional cell
inline constexpr double diamond_carbon_density = 1.76e29;      // m^-3
inline constexpr double diamond_nn_distance = 1.544e-10;       // m

// Angle between the field-coupled [111] NV families and a [110] field
// direction: arccos(2/sqrt(6)) = 35.264 deg. The other two families are
// perpendicular to the field and do not shift.
inline constexpr double nv110_axis_angle = 0.6154797086703874;  // rad

}  // namespace spinmem
