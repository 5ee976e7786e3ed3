#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bectwist/core/field.hpp"
#include "bectwist/core/spectral.hpp"
#include "bectwist/meanfield/params.hpp"

namespace bectwist {

struct GroundStateOptions {
    double imag_dt = 0.0;       // s; 0 selects 0.02 / omega_max
    int stages = 3;             // dt is divided by 4 between stages
    double tolerance = 1e-15;   // relative energy change per iteration
    std::size_t max_iterations = 200000;
};

struct GroundState {
    ComplexField psi;         // normalised to 1
    double energy = 0.0;      // per particle (J)
    double chemical_potential = 0.0; // J
    std::size_t iterations = 0;
};

/// Energy per particle and chemical potential of a normalised single-component field.
inline std::array<double, 2> gpe_energy(const SpectralTransform &tf, const ComplexField &psi,
                                        std::span<const double> potential, double mass,
                                        double interaction /* U N */) {
    const double kin = kinetic_energy(tf, psi, mass);
    const auto &w = psi.grid()->weights();
    double pot = 0.0, quartic = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double n = std::norm(psi[i]);
        pot += potential[i] * n * w[i];
        quartic += n * n * w[i];
    }
    return {kin + pot + 0.5 * interaction * quartic, kin + pot + interaction * quartic};
}

/**
 * Ground state of the single-component GPE with all N_t atoms in |a>,
 * by imaginary-time split-step propagation with renormalisation after
 * every step. The result is real and positive up to round-off.
 */
inline GroundState ground_state(const PhysicsParams &params, const TransformPtr &tf,
                                GroundStateOptions opt = {}) {
    params.validate();
    const auto &grid = tf->grid();
    const auto potential = params.trap_potential(*grid);
    const double mass = params.mass();
    const double interaction = params.u_aa() * params.n_atoms();
    const double wmax = *std::max_element(params.omega().begin(), params.omega().end());
    double dtau = opt.imag_dt > 0.0 ? opt.imag_dt : 0.02 / wmax;

    // Thomas-Fermi-sized Gaussian as a starting point.
    ComplexField psi(grid);
    {
        const double aho = std::sqrt(constants::hbar / (mass * params.omega_bar()));
        const double na_ho = params.n_atoms() * params.a11() / aho;
        const double rtf = aho * std::pow(15.0 * na_ho, 0.2);
        const double width = std::max(aho, 0.5 * rtf);
        const double wbar = params.omega_bar();
        const auto scale = std::array<double, 3>{
            params.omega()[0] / wbar, params.omega()[1] / wbar, params.omega()[2] / wbar};
        const auto r2 = grid->weighted_r2(scale);
        for (std::size_t i = 0; i < psi.size(); ++i)
            psi[i] = std::exp(-0.5 * r2[i] / (width * width));
        psi.scale(1.0 / std::sqrt(psi.norm()));
    }

    GroundState out;
    auto energy = gpe_energy(*tf, psi, potential, mass, interaction)[0];
    std::vector<double> half(grid->size()), density(grid->size());
    const auto &k2 = grid->k_squared();
    for (int stage = 0; stage < opt.stages; ++stage, dtau *= 0.25) {
        // The last stage freezes the density at the start of each step, which
        // makes its fixed point second order in dtau; that update is explicit
        // in the nonlinearity, so dtau is also kept below hbar / mu there.
        const bool last = stage + 1 == opt.stages;
        if (last) {
            const double mu = gpe_energy(*tf, psi, potential, mass, interaction)[1];
            dtau = std::min(dtau, 0.25 * constants::hbar / std::abs(mu));
        }
        const double ck = constants::hbar * 0.5 * dtau / (2.0 * mass);
        for (std::size_t i = 0; i < k2.size(); ++i)
            half[i] = std::exp(-ck * k2[i]);
        bool converged = false;
        while (out.iterations < opt.max_iterations) {
            for (std::size_t i = 0; i < psi.size(); ++i)
                density[i] = std::norm(psi[i]);
            tf->apply_diagonal(psi.values(), half);
            for (std::size_t i = 0; i < psi.size(); ++i) {
                const double n = last ? density[i] : std::norm(psi[i]);
                psi[i] *= std::exp(-dtau * (potential[i] + interaction * n) / constants::hbar);
            }
            tf->apply_diagonal(psi.values(), half);
            const double nrm = psi.norm();
            if (!(nrm > 0.0) || !std::isfinite(nrm))
                throw IntegrationError(out.iterations, "imaginary-time propagation diverged");
            psi.scale(1.0 / std::sqrt(nrm));
            ++out.iterations;
            const double e = gpe_energy(*tf, psi, potential, mass, interaction)[0];
            const double change = std::abs(e - energy) / std::abs(e);
            energy = e;
            if (change < opt.tolerance) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw ConvergenceError("ground state did not converge within " +
                                   std::to_string(opt.max_iterations) + " iterations");
    }

    // Fix the global phase: real and positive at the density maximum.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < psi.size(); ++i)
        if (std::norm(psi[i]) > std::norm(psi[imax]))
            imax = i;
    const complex phase = std::conj(psi[imax]) / std::abs(psi[imax]);
    for (auto &v : psi.values())
        v = complex{(v * phase).real(), 0.0};

    const auto em = gpe_energy(*tf, psi, potential, mass, interaction);
    out.energy = em[0];
    out.chemical_potential = em[1];
    out.psi = std::move(psi);
    return out;
}

} // namespace bectwist
