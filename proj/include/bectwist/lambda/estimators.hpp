#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <thread>
#include <vector>

#include "bectwist/core/errors.hpp"
#include "bectwist/meanfield/gpe.hpp"
#include "bectwist/twomode/chi.hpp"
#include "bectwist/twomode/kerr.hpp"

namespace bectwist {

/// Mean-field echo run shared by both estimators.
struct EchoRun {
    ModelPtr model;             // mean-field (no Wigner corrections)
    ComplexField psi_g;         // normalised ground state
    double t_pi = 0.0;          // s
    int n_bounces = 1;
    double cadence = 1e-4;      // snapshot interval (s)
    double first_theta = std::numbers::pi / 2;

    void validate() const {
        if (!model)
            throw ConfigError("lambda.model", "no evolution model");
        if (model->wigner())
            throw ConfigError("lambda.model", "estimators use mean-field evolution");
        if (!(cadence > 0.0))
            throw ConfigError("lambda.cadence", "snapshot cadence must be positive");
    }

    [[nodiscard]] PulseSequence sequence() const {
        auto seq = PulseSequence::echo(t_pi, n_bounces);
        seq.pulses.front().theta = first_theta;
        return seq;
    }

    [[nodiscard]] std::vector<double> snapshot_times() const {
        const double end = 2.0 * n_bounces * t_pi;
        const auto n = static_cast<std::size_t>(std::ceil(end / cadence - 1e-9));
        std::vector<double> ts;
        for (std::size_t i = 0; i <= n; ++i)
            ts.push_back(std::min(end, static_cast<double>(i) * cadence));
        if (ts.size() >= 2 && ts[ts.size() - 2] >= ts.back())
            ts.pop_back();
        return ts;
    }

    /// Runs the sequence (without a readout pulse) and reports every snapshot
    /// and every pre-pulse state.
    void run(const SequenceObserver &obs) const {
        validate();
        auto f = condensate_in_a(psi_g, model->params.n_atoms());
        Propagator(model).run_sequence(f, sequence(), snapshot_times(), obs);
    }
};

/// chi_ij(t) = U_ij / (2 hbar) int |u_i|^2 |u_j|^2 with u_j = psi_j / sqrt(N_j).
inline std::array<double, 3> chi_rates(const FieldPair &f, const PhysicsParams &p) {
    const double na = f.a.norm(), nb = f.b.norm();
    if (!(na > 0.0) || !(nb > 0.0))
        throw UndefinedQuantity("chi rates need both components populated");
    const auto &w = f.grid()->weights();
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double da = std::norm(f.a[i]) / na, db = std::norm(f.b[i]) / nb;
        saa += da * da * w[i];
        sbb += db * db * w[i];
        sab += da * db * w[i];
    }
    const double c = 0.5 / constants::hbar;
    return {c * p.u_aa() * saa, c * p.u_bb() * sbb, c * p.u_ab() * sab};
}

struct ChiEstimate {
    twomode::ChiTrace trace;
    twomode::ChiIntegrals integrals;
};

/**
 * Overlap-integral estimate: chi_ij(t) from the mean-field mode functions
 * over every free-evolution window, integrated per chi_integrals.
 */
inline ChiEstimate lambda_from_chi(const EchoRun &run) {
    ChiEstimate out;
    const auto &p = run.model->params;
    SequenceObserver obs;
    obs.on_snapshot = [&](const FieldPair &f) {
        const auto c = chi_rates(f, p);
        out.trace.push(f.time, c[0], c[1], c[2]);
    };
    obs.on_pulse = [&](const FieldPair &before, const PulseSpec &pulse) {
        if (pulse.time > 0.0) {
            const auto c = chi_rates(before, p);
            out.trace.push(before.time, c[0], c[1], c[2]);
        }
    };
    run.run(obs);
    out.trace.set_echo_windows(run.t_pi, run.n_bounces);
    out.integrals = twomode::chi_integrals(out.trace);
    return out;
}

/// Relative phase arg int psi_b^* psi_a, followed continuously through
/// free evolution and pulses.
class PhaseTracker {
  public:
    static constexpr double min_relative_overlap = 1e-6;

    void sample(const FieldPair &f) {
        const complex i = std::conj(overlap(f.a, f.b)); // int psi_b^* psi_a
        const double na = f.a.norm(), nb = f.b.norm();
        if (!(na > 0.0 && nb > 0.0) ||
            !(std::abs(i) >= min_relative_overlap * std::sqrt(na * nb)))
            throw UndefinedQuantity("relative phase ill-conditioned: overlap " +
                                    std::to_string(std::abs(i)) + " at t = " +
                                    std::to_string(f.time) + " s");
        const double raw = std::arg(i);
        if (!started_) {
            phase_ = raw;
            started_ = true;
        } else {
            phase_ += std::remainder(raw - phase_, 2.0 * std::numbers::pi);
        }
        times_.push_back(f.time);
        phases_.push_back(phase_);
    }

    /// A pulse (theta, phi) maps int psi_b^* psi_a to e^{2 i phi} times its
    /// conjugate when theta = pi; other angles are followed by sampling.
    void pulse(const FieldPair &before, const PulseSpec &p) {
        if (!started_)
            return;
        sample(before);
        if (std::abs(p.theta - std::numbers::pi) < 1e-12)
            phase_ = 2.0 * p.phi - phase_;
    }

    [[nodiscard]] double phase() const noexcept { return phase_; }
    [[nodiscard]] const std::vector<double> &times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<double> &phases() const noexcept { return phases_; }

  private:
    bool started_ = false;
    double phase_ = 0.0;
    std::vector<double> times_, phases_;
};

struct PhaseDiffusionProbe {
    double imbalance = 0.0;     // target N_a - N_b of the + probe
    double phi_plus = 0.0;      // rad, unwrapped, at the end of the sequence
    double phi_minus = 0.0;
    double delta_phi = 0.0;     // phi_plus - phi_minus
    double lambda_estimate = 0.0;
    PhaseTracker plus, minus;
};

/**
 * Phase-diffusion estimate from two mean-field runs whose first pulse leaves
 * N_a - N_b = +/- scale sqrt(N_t)/2, i.e. cos(theta) = +/- scale / (2 sqrt(N_t)).
 * lambda = delta_phi / (2 scale sqrt(N_t)).
 */
inline PhaseDiffusionProbe lambda_from_phase_diffusion(const EchoRun &base,
                                                       double imbalance_scale = 1.0,
                                                       std::size_t workers = 1) {
    const double n = base.model->params.n_atoms();
    const double target = imbalance_scale * std::sqrt(n) / 2.0;
    if (!(std::sqrt(n) / 4.0 >= 1.0))
        throw ConfigError("lambda.n_atoms", "phase-diffusion probe needs sqrt(N_t)/4 >= 1");
    if (!(imbalance_scale > 0.0) || target >= n)
        throw ConfigError("lambda.imbalance", "probe imbalance must lie in (0, N_t)");

    PhaseDiffusionProbe out;
    out.imbalance = target;
    auto probe = [&](double sign, PhaseTracker &tracker) {
        EchoRun run = base;
        run.first_theta = std::acos(sign * target / n);
        SequenceObserver obs;
        obs.on_snapshot = [&](const FieldPair &f) { tracker.sample(f); };
        obs.on_pulse = [&](const FieldPair &before, const PulseSpec &p) { tracker.pulse(before, p); };
        run.run(obs);
    };
    if (workers >= 2) {
        std::exception_ptr err_plus, err_minus;
        {
            std::jthread tp([&] {
                try {
                    probe(+1.0, out.plus);
                } catch (...) {
                    err_plus = std::current_exception();
                }
            });
            try {
                probe(-1.0, out.minus);
            } catch (...) {
                err_minus = std::current_exception();
            }
        }
        if (err_plus)
            std::rethrow_exception(err_plus);
        if (err_minus)
            std::rethrow_exception(err_minus);
    } else {
        probe(+1.0, out.plus);
        probe(-1.0, out.minus);
    }
    out.phi_plus = out.plus.phase();
    out.phi_minus = out.minus.phase();
    out.delta_phi = out.phi_plus - out.phi_minus;
    out.lambda_estimate = out.delta_phi / (2.0 * imbalance_scale * std::sqrt(n));
    return out;
}

enum class SqueezingRegime { UnderSqueezed, NearOptimal, OverSqueezed };

inline std::string_view to_string(SqueezingRegime r) {
    switch (r) {
    case SqueezingRegime::UnderSqueezed:
        return "under-squeezed";
    case SqueezingRegime::NearOptimal:
        return "near-optimal";
    default:
        return "over-squeezed";
    }
}

struct SqueezingPrediction {
    std::vector<double> theta;
    std::vector<double> v;
    twomode::ThetaOptimum optimum;
    double lambda_opt = 0.0;      // asymptotic 0.6 N_t^{-2/3}
    double ratio_to_opt = 0.0;    // |lambda| / lambda_opt
    SqueezingRegime regime = SqueezingRegime::NearOptimal;
};

/**
 * Two-mode v(theta) for an estimated lambda, placed relative to lambda_opt
 * (within a factor 2 counts as near-optimal). An echo with an odd number of
 * pi pulses ends with the labels a and b exchanged, which maps theta to
 * -theta at the readout; `labels_swapped` applies that mirror.
 */
inline SqueezingPrediction predict_squeezing(double lambda, double n_atoms,
                                             const std::vector<double> &theta_grid,
                                             bool labels_swapped = false) {
    const double sign = labels_swapped ? -1.0 : 1.0;
    SqueezingPrediction out;
    out.theta = theta_grid;
    out.v.reserve(theta_grid.size());
    for (double th : theta_grid)
        out.v.push_back(twomode::two_mode_variance(n_atoms, lambda, sign * th));
    out.optimum = twomode::optimal_theta(n_atoms, lambda);
    out.optimum.theta *= sign;
    out.lambda_opt = twomode::lambda_opt_asymptotic(n_atoms);
    out.ratio_to_opt = std::abs(lambda) / out.lambda_opt;
    out.regime = out.ratio_to_opt < 0.5   ? SqueezingRegime::UnderSqueezed
                 : out.ratio_to_opt > 2.0 ? SqueezingRegime::OverSqueezed
                                          : SqueezingRegime::NearOptimal;
    return out;
}

} // namespace bectwist
