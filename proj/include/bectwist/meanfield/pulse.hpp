#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bectwist/core/constants.hpp"
#include "bectwist/core/errors.hpp"
#include "bectwist/core/field.hpp"

namespace bectwist {

/// Instantaneous resonant rotation of the pseudo-spin.
struct PulseSpec {
    double theta = 0.0; // rotation angle (rad), in [0, 2 pi)
    double phi = 0.0;   // coupling phase (rad)
    double time = 0.0;  // application instant (s)

    friend bool operator==(const PulseSpec &, const PulseSpec &) = default;
};

struct PulseSequence {
    std::vector<PulseSpec> pulses;
    double duration = 0.0; // end of the sequence (s), >= last pulse time

    void validate() const {
        double prev = -1.0;
        for (std::size_t i = 0; i < pulses.size(); ++i) {
            const auto &p = pulses[i];
            if (!std::isfinite(p.theta) || p.theta < 0.0 || p.theta >= 2.0 * constants::pi)
                throw ConfigError("sequence.theta_range",
                                  "pulse " + std::to_string(i) + ": theta must lie in [0, 2pi)");
            if (!std::isfinite(p.phi))
                throw ConfigError("sequence.phi", "pulse " + std::to_string(i) + ": phi must be finite");
            if (!std::isfinite(p.time) || p.time < 0.0)
                throw ConfigError("sequence.time", "pulse " + std::to_string(i) + ": time must be >= 0");
            if (i > 0 && !(p.time > prev))
                throw ConfigError("sequence.order", "pulse times must be strictly increasing");
            prev = p.time;
        }
        if (!std::isfinite(duration) || duration < 0.0 ||
            (!pulses.empty() && duration < pulses.back().time))
            throw ConfigError("sequence.duration", "sequence duration must cover every pulse");
    }

    /**
     * pi/2 at t = 0, then pi pulses every t_pi, readout at 2 n_bounces t_pi.
     * With `readout_theta` >= 0 the readout pulse (phase `readout_phi`) is
     * included; otherwise the sequence ends just before it.
     */
    static PulseSequence echo(double t_pi, int n_bounces = 1, double readout_theta = -1.0,
                              double readout_phi = constants::pi / 2) {
        if (!(t_pi > 0.0))
            throw ConfigError("sequence.t_pi", "T_pi must be positive");
        if (n_bounces < 1)
            throw ConfigError("sequence.n_bounces", "n_bounces must be >= 1");
        PulseSequence s;
        s.pulses.push_back({constants::pi / 2, 0.0, 0.0});
        for (int k = 1; k < 2 * n_bounces; ++k)
            s.pulses.push_back({constants::pi, 0.0, k * t_pi});
        s.duration = 2.0 * n_bounces * t_pi;
        if (readout_theta >= 0.0)
            s.pulses.push_back({readout_theta, readout_phi, s.duration});
        return s;
    }
};

/**
 * psi_a -> cos(theta/2) psi_a - i sin(theta/2) e^{i phi} psi_b
 * psi_b -> cos(theta/2) psi_b - i sin(theta/2) e^{-i phi} psi_a
 */
inline void apply_pulse(FieldPair &f, double theta, double phi) {
    const double c = std::cos(0.5 * theta);
    const complex s_ab = complex{0.0, -std::sin(0.5 * theta)} * std::polar(1.0, phi);
    const complex s_ba = complex{0.0, -std::sin(0.5 * theta)} * std::polar(1.0, -phi);
    for (std::size_t i = 0; i < f.a.size(); ++i) {
        const complex a = f.a[i], b = f.b[i];
        f.a[i] = c * a + s_ab * b;
        f.b[i] = c * b + s_ba * a;
    }
}

inline void apply_pulse(FieldPair &f, const PulseSpec &p) { apply_pulse(f, p.theta, p.phi); }

} // namespace bectwist
