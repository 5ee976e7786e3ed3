#pragma once

#include <array>
#include <cmath>

#include "bectwist/core/errors.hpp"
#include "bectwist/core/field.hpp"

namespace bectwist {

/**
 * First and (symmetrised) second moments of the collective spin
 *   Jx = Re int psi_a^* psi_b,  Jy = Im int psi_a^* psi_b,  Jz = (N_a - N_b)/2.
 * `second[i][j]` holds <(J_i J_j + J_j J_i)/2>.
 */
struct SpinMoments {
    std::array<double, 3> mean{};
    std::array<std::array<double, 3>, 3> second{};

    [[nodiscard]] double jx() const noexcept { return mean[0]; }
    [[nodiscard]] double jy() const noexcept { return mean[1]; }
    [[nodiscard]] double jz() const noexcept { return mean[2]; }
    [[nodiscard]] double jz2() const noexcept { return second[2][2]; }
    [[nodiscard]] double j_perp() const noexcept { return std::hypot(mean[0], mean[1]); }

    [[nodiscard]] double variance(int axis) const noexcept {
        return second[axis][axis] - mean[axis] * mean[axis];
    }
};

/// Spin moments of a classical (mean-field) state: no fluctuations.
inline SpinMoments spin_moments(const FieldPair &f) {
    const complex c = overlap(f.a, f.b);
    SpinMoments m;
    m.mean = {c.real(), c.imag(), 0.5 * (f.a.norm() - f.b.norm())};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m.second[i][j] = m.mean[i] * m.mean[j];
    return m;
}

/**
 * Mach-Zehnder sequence (50/50 splitter, relative phase phi, 50/50 splitter)
 * acting on the spin:
 *   Jx -> cos(phi) Jx + sin(phi) Jz,  Jy -> -Jy,  Jz -> sin(phi) Jx - cos(phi) Jz.
 */
inline SpinMoments mz_transform(const SpinMoments &in, double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    const double r[3][3] = {{c, 0.0, s}, {0.0, -1.0, 0.0}, {s, 0.0, -c}};
    SpinMoments out;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            out.mean[i] += r[i][k] * in.mean[k];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    acc += r[i][k] * r[j][l] * in.second[k][l];
            out.second[i][j] = acc;
        }
    return out;
}

/// Delta phi = sqrt(V(Jz_out)) / |d<Jz_out>/dphi| for the Mach-Zehnder read-out.
inline double mz_phase_sensitivity(const SpinMoments &in, double phi) {
    const auto out = mz_transform(in, phi);
    const double slope = std::cos(phi) * in.mean[0] + std::sin(phi) * in.mean[2];
    if (!(std::abs(slope) > 1e-12 * std::hypot(in.mean[0], in.mean[2])))
        throw UndefinedQuantity("interferometer signal has zero slope");
    return std::sqrt(std::max(out.variance(2), 0.0)) / std::abs(slope);
}

} // namespace bectwist
