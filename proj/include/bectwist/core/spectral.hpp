#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "bectwist/core/field.hpp"
#include "bectwist/core/grid.hpp"

namespace bectwist {

namespace detail {
// FFTW's planner is not re-entrant; plan execution is.
inline std::mutex &fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/**
 * Forward/inverse spectral transform for one Grid.
 *
 * Plans are created once and are immutable afterwards, so one instance may
 * be shared by any number of threads as long as each thread works on its
 * own buffers (allocated through FftwAllocator).
 *
 * Cartesian grids use an in-place 3D complex DFT. The radial grid works on
 * u = r psi with a DST-II forward and DST-III inverse, applied to the real
 * and imaginary parts as two interleaved real transforms.
 */
class SpectralTransform {
  public:
    explicit SpectralTransform(GridPtr grid) : grid_(std::move(grid)) {
        const auto n = grid_->size();
        ComplexVector scratch(n);
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
        if (grid_->geometry() == Geometry::Cartesian3D) {
            const auto &p = grid_->points();
            const int n0 = static_cast<int>(p[0]), n1 = static_cast<int>(p[1]),
                      n2 = static_cast<int>(p[2]);
            forward_ = fftw_plan_dft_3d(n0, n1, n2, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
            inverse_ = fftw_plan_dft_3d(n0, n1, n2, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
            scale_ = 1.0 / static_cast<double>(n);
        } else {
            int len = static_cast<int>(n);
            auto *re = reinterpret_cast<double *>(scratch.data());
            fftw_r2r_kind fwd = FFTW_RODFT10, inv = FFTW_RODFT01;
            forward_ = fftw_plan_many_r2r(1, &len, 2, re, nullptr, 2, 1, re, nullptr, 2, 1,
                                          &fwd, FFTW_ESTIMATE);
            inverse_ = fftw_plan_many_r2r(1, &len, 2, re, nullptr, 2, 1, re, nullptr, 2, 1,
                                          &inv, FFTW_ESTIMATE);
            scale_ = 1.0 / (2.0 * static_cast<double>(n));
        }
        if (forward_ == nullptr || inverse_ == nullptr)
            throw Error("fftw", "failed to create FFTW plans");
    }

    SpectralTransform(const SpectralTransform &) = delete;
    SpectralTransform &operator=(const SpectralTransform &) = delete;

    ~SpectralTransform() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    [[nodiscard]] const GridPtr &grid() const noexcept { return grid_; }

    /// Round-trip normalisation: inverse(forward(x)) == x / scale().
    [[nodiscard]] double scale() const noexcept { return scale_; }

    /// Raw in-place transforms of the transform variable (psi on Cartesian
    /// grids, u = r psi on the radial grid). Unnormalised.
    void forward(complex *data) const { execute(forward_, data); }
    void inverse(complex *data) const { execute(inverse_, data); }

    /// psi -> F^-1 [ m(k) F[psi] ] for a diagonal spectral multiplier,
    /// including the normalisation and the r psi substitution.
    template <class Multiplier>
    void apply_diagonal(std::span<complex> psi, const Multiplier &m) const {
        const bool radial = grid_->geometry() == Geometry::SphericalRadial1D;
        const auto &r = grid_->coordinates(0);
        if (radial)
            for (std::size_t i = 0; i < psi.size(); ++i)
                psi[i] *= r[i];
        forward(psi.data());
        for (std::size_t i = 0; i < psi.size(); ++i)
            psi[i] *= m[i] * scale_;
        inverse(psi.data());
        if (radial)
            for (std::size_t i = 0; i < psi.size(); ++i)
                psi[i] /= r[i];
    }

  private:
    void execute(fftw_plan plan, complex *data) const {
        if (grid_->geometry() == Geometry::Cartesian3D) {
            auto *p = reinterpret_cast<fftw_complex *>(data);
            fftw_execute_dft(plan, p, p);
        } else {
            auto *p = reinterpret_cast<double *>(data);
            fftw_execute_r2r(plan, p, p);
        }
    }

    GridPtr grid_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
    double scale_ = 1.0;
};

using TransformPtr = std::shared_ptr<const SpectralTransform>;

inline TransformPtr make_transform(const GridPtr &grid) {
    return std::make_shared<const SpectralTransform>(grid);
}

/// exp(-i hbar k^2 dt / 2m) per spectral coefficient.
inline std::vector<complex> kinetic_phase_factors(const Grid &grid, double dt, double mass) {
    if (!(dt > 0.0) || !(mass > 0.0))
        throw ConfigError("kinetic_phase_factors: dt and mass must be positive");
    const auto &k2 = grid.k_squared();
    std::vector<complex> out(k2.size());
    const double c = constants::hbar * dt / (2.0 * mass);
    for (std::size_t i = 0; i < k2.size(); ++i)
        out[i] = std::polar(1.0, -c * k2[i]);
    return out;
}

/// Kinetic energy <psi| -hbar^2 nabla^2 / 2m |psi> for an arbitrary field (J).
inline double kinetic_energy(const SpectralTransform &tf, const ComplexField &psi, double mass) {
    ComplexField work = psi;
    const auto &k2 = tf.grid()->k_squared();
    std::vector<double> m(k2.size());
    const double c = constants::hbar * constants::hbar / (2.0 * mass);
    for (std::size_t i = 0; i < k2.size(); ++i)
        m[i] = c * k2[i];
    tf.apply_diagonal(work.values(), m);
    return overlap(psi, work).real();
}

} // namespace bectwist
