#pragma once

#include <cmath>

#include "bectwist/core/field.hpp"
#include "bectwist/wigner/rng.hpp"

namespace bectwist {

/// Vacuum occupation per mode in the Wigner representation.
inline constexpr double wigner_half_quantum = 0.5;

/**
 * Initial Wigner sample for all atoms in |a>:
 *   psi_a = sqrt(N_t) psi_g + eta_a / sqrt(dv),  psi_b = eta_b / sqrt(dv),
 * with independent complex Gaussian eta, <|eta|^2> = 1/2 per point.
 */
inline FieldPair sample_initial(const ComplexField &psi_g, double n_atoms, TrajectoryRng &rng) {
    const auto &grid = psi_g.grid();
    const auto &w = grid->weights();
    FieldPair f(grid);
    const double amp = std::sqrt(n_atoms);
    for (std::size_t i = 0; i < psi_g.size(); ++i) {
        const double inv = 1.0 / std::sqrt(w[i]);
        f.a[i] = amp * psi_g[i] + rng.complex_normal(wigner_half_quantum) * inv;
        f.b[i] = rng.complex_normal(wigner_half_quantum) * inv;
    }
    return f;
}

} // namespace bectwist
