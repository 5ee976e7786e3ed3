#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bectwist/core/field.hpp"
#include "bectwist/core/spectral.hpp"

namespace bectwist {

/// Pointwise energy term for the coupled equations: given a flat index and
/// the two local densities (m^-3), return the energies (J) multiplying psi_a
/// and psi_b. Must be real for the step to be norm preserving.
template <class T>
concept PointwiseTerm = requires(const T &t, std::size_t i, double na, double nb) {
    { t(i, na, nb) } -> std::convertible_to<std::array<double, 2>>;
};

/// Harmonic trap plus contact interactions, optionally with the Wigner
/// 1/dv density corrections.
struct CoupledContactTerm {
    std::span<const double> potential;      // J, per point
    double u_aa = 0.0, u_bb = 0.0, u_ab = 0.0; // J m^3
    std::span<const double> inv_dv;         // empty for mean-field

    std::array<double, 2> operator()(std::size_t i, double na, double nb) const {
        double ca = 0.0, cab = 0.0;
        if (!inv_dv.empty()) {
            ca = inv_dv[i];
            cab = 0.5 * inv_dv[i];
        }
        const double v = potential[i];
        return {v + u_aa * (na - ca) + u_ab * (nb - cab),
                v + u_bb * (nb - ca) + u_ab * (na - cab)};
    }
};

/**
 * Strang split-step integrator for a FieldPair.
 *
 * One step is: half kinetic (spectral), full pointwise phase evaluated at
 * the post-half-kinetic densities, half kinetic. `advance` fuses the
 * adjacent half kinetic steps of consecutive steps, which is algebraically
 * identical. Not thread-safe; use one instance per trajectory.
 */
class SplitStepper {
  public:
    SplitStepper(TransformPtr transform, double mass)
        : transform_(std::move(transform)), mass_(mass) {
        if (!(mass > 0.0))
            throw ConfigError("SplitStepper: mass must be positive");
    }

    [[nodiscard]] std::size_t steps_taken() const noexcept { return steps_; }
    [[nodiscard]] const SpectralTransform &transform() const noexcept { return *transform_; }

    /// One Strang step of length dt.
    template <PointwiseTerm Term>
    void step(FieldPair &f, const Term &term, double dt) {
        advance(f, term, dt, 1);
    }

    /// `n` Strang steps of length dt.
    template <PointwiseTerm Term>
    void advance(FieldPair &f, const Term &term, double dt, std::size_t n) {
        if (n == 0)
            return;
        prepare(dt);
        kinetic(f, half_);
        for (std::size_t s = 0; s < n; ++s) {
            pointwise(f, term, dt);
            kinetic(f, s + 1 == n ? half_ : full_);
            f.time += dt;
        }
    }

  private:
    void prepare(double dt) {
        if (dt == cached_dt_)
            return;
        half_ = kinetic_phase_factors(*transform_->grid(), 0.5 * dt, mass_);
        full_ = kinetic_phase_factors(*transform_->grid(), dt, mass_);
        cached_dt_ = dt;
    }

    void kinetic(FieldPair &f, const std::vector<complex> &m) const {
        transform_->apply_diagonal(f.a.values(), m);
        transform_->apply_diagonal(f.b.values(), m);
    }

    template <PointwiseTerm Term>
    void pointwise(FieldPair &f, const Term &term, double dt) {
        const double c = dt / constants::hbar;
        const std::size_t n = f.a.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double na = std::norm(f.a[i]);
            const double nb = std::norm(f.b[i]);
            const auto e = term(i, na, nb);
            if (!std::isfinite(e[0]) || !std::isfinite(e[1]))
                throw IntegrationError(steps_, "non-finite field value");
            f.a[i] *= std::polar(1.0, -c * e[0]);
            f.b[i] *= std::polar(1.0, -c * e[1]);
        }
        ++steps_;
    }

    TransformPtr transform_;
    double mass_;
    double cached_dt_ = -1.0;
    std::vector<complex> half_, full_;
    std::size_t steps_ = 0;
};

} // namespace bectwist
