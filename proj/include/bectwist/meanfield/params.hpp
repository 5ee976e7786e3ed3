#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "bectwist/core/constants.hpp"
#include "bectwist/core/errors.hpp"
#include "bectwist/core/grid.hpp"

namespace bectwist {

/// Physical parameters of the two-component condensate. Scattering lengths
/// are stored in metres; use `from_bohr` for the usual a0 multiples.
class PhysicsParams {
  public:
    PhysicsParams() { refresh(); }

    PhysicsParams(double mass, double a11, double a22, double a12,
                  std::array<double, 3> omega, double n_atoms, double detuning = 0.0)
        : mass_(mass), a_{a11, a22, a12}, omega_(omega), n_atoms_(n_atoms),
          detuning_(detuning) {
        refresh();
    }

    /// 87Rb |F=1,m=-1>, |F=2,m=+1> with the given spherical trap and atom number.
    static PhysicsParams rubidium87(double omega_r, double n_atoms) {
        return from_bohr(constants::rb87_mass, 100.4, 95.00, 97.66,
                         {omega_r, omega_r, omega_r}, n_atoms);
    }

    static PhysicsParams from_bohr(double mass, double a11_bohr, double a22_bohr,
                                   double a12_bohr, std::array<double, 3> omega,
                                   double n_atoms, double detuning = 0.0) {
        const double a0 = constants::bohr_radius;
        return {mass, a11_bohr * a0, a22_bohr * a0, a12_bohr * a0, omega, n_atoms, detuning};
    }

    [[nodiscard]] double mass() const noexcept { return mass_; }
    [[nodiscard]] double a11() const noexcept { return a_[0]; }
    [[nodiscard]] double a22() const noexcept { return a_[1]; }
    [[nodiscard]] double a12() const noexcept { return a_[2]; }
    [[nodiscard]] const std::array<double, 3> &omega() const noexcept { return omega_; }
    [[nodiscard]] double n_atoms() const noexcept { return n_atoms_; }
    [[nodiscard]] double detuning() const noexcept { return detuning_; }

    /// U_ij = 4 pi hbar^2 a_ij / m (J m^3).
    [[nodiscard]] double u_aa() const noexcept { return u_[0]; }
    [[nodiscard]] double u_bb() const noexcept { return u_[1]; }
    [[nodiscard]] double u_ab() const noexcept { return u_[2]; }

    [[nodiscard]] bool spherical() const noexcept {
        return omega_[0] == omega_[1] && omega_[1] == omega_[2];
    }

    /// Geometric-mean trap frequency.
    [[nodiscard]] double omega_bar() const {
        return std::cbrt(omega_[0] * omega_[1] * omega_[2]);
    }

    PhysicsParams &set_n_atoms(double n) {
        n_atoms_ = n;
        return *this;
    }
    PhysicsParams &set_omega(std::array<double, 3> w) {
        omega_ = w;
        return *this;
    }
    PhysicsParams &set_scattering(double a11, double a22, double a12) {
        a_ = {a11, a22, a12};
        refresh();
        return *this;
    }
    PhysicsParams &set_mass(double m) {
        mass_ = m;
        refresh();
        return *this;
    }
    PhysicsParams &set_detuning(double d) {
        detuning_ = d;
        return *this;
    }

    /// Throws ConfigError with a specific message for each invalid field.
    void validate() const {
        if (!(mass_ > 0.0) || !std::isfinite(mass_))
            throw ConfigError("physics.mass_kg must be positive");
        for (double a : a_)
            if (!std::isfinite(a) || a < 0.0)
                throw ConfigError("physics scattering lengths must be non-negative");
        for (double w : omega_)
            if (!(w > 0.0) || !std::isfinite(w))
                throw ConfigError("physics trap frequencies must be positive");
        if (!(n_atoms_ > 0.0) || !std::isfinite(n_atoms_))
            throw ConfigError("physics.n_atoms must be positive");
        if (!std::isfinite(detuning_))
            throw ConfigError("physics.detuning_rad_per_s must be finite");
    }

    /// 1/2 m sum_a omega_a^2 x_a^2 on the grid points (J).
    [[nodiscard]] std::vector<double> trap_potential(const Grid &grid) const {
        if (grid.geometry() == Geometry::SphericalRadial1D && !spherical())
            throw ConfigError("a spherical radial grid needs equal trap frequencies");
        const double h = 0.5 * mass_;
        return grid.weighted_r2({h * omega_[0] * omega_[0], h * omega_[1] * omega_[1],
                                 h * omega_[2] * omega_[2]});
    }

  private:
    void refresh() {
        const double c = 4.0 * constants::pi * constants::hbar * constants::hbar / mass_;
        u_ = {c * a_[0], c * a_[1], c * a_[2]};
    }

    double mass_ = constants::rb87_mass;
    std::array<double, 3> a_{100.4 * constants::bohr_radius, 95.00 * constants::bohr_radius,
                             97.66 * constants::bohr_radius};
    std::array<double, 3> omega_{200.0, 200.0, 200.0};
    double n_atoms_ = 1.5e5;
    double detuning_ = 0.0;
    std::array<double, 3> u_{};
};

} // namespace bectwist
