#pragma once

#include <cmath>
#include <numbers>

#include "bectwist/core/constants.hpp"
#include "bectwist/core/field.hpp"
#include "bectwist/core/grid.hpp"
#include "bectwist/core/spectral.hpp"
#include "bectwist/meanfield/ground_state.hpp"
#include "bectwist/meanfield/params.hpp"

namespace bectwist::testing {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Zero pointwise energy (free particle).
struct FreeTerm {
    std::array<double, 2> operator()(std::size_t, double, double) const { return {0.0, 0.0}; }
};

inline double mean_r2(const ComplexField &f) {
    const auto &g = *f.grid();
    const auto r2 = g.weighted_r2({1.0, 1.0, 1.0});
    double s = 0.0, n = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        s += r2[i] * std::norm(f[i]) * g.weights()[i];
        n += std::norm(f[i]) * g.weights()[i];
    }
    return s / n;
}

/// psi = exp(-r^2 / (2 sigma^2)), normalised.
inline ComplexField gaussian(const GridPtr &g, double sigma, std::array<double, 3> centre = {}) {
    ComplexField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < g->axes(); ++a) {
            const double x = g->coordinate_of(i, a) - centre[a];
            r2 += x * x;
        }
        f[i] = std::exp(-0.5 * r2 / (sigma * sigma));
    }
    f.scale(1.0 / std::sqrt(f.norm()));
    return f;
}

/// Small 1D spherical system used across tests: N_t atoms, 2 pi x 200 rad/s.
inline PhysicsParams rb_params(double n_atoms, double omega = two_pi * 200.0) {
    return PhysicsParams::rubidium87(omega, n_atoms);
}

} // namespace bectwist::testing
