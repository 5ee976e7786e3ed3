#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "bectwist/core/field.hpp"
#include "bectwist/core/split_step.hpp"
#include "bectwist/meanfield/params.hpp"
#include "bectwist/meanfield/pulse.hpp"

namespace bectwist {

/// Immutable description of the free-evolution dynamics, shareable across
/// threads. `wigner` switches on the U_ii/dv and U_ij/(2 dv) corrections.
struct EvolutionModel {
    PhysicsParams params;
    TransformPtr transform;
    std::vector<double> potential;
    std::vector<double> inv_dv; // empty for mean-field evolution
    double dt = 1e-6;

    EvolutionModel(PhysicsParams p, TransformPtr tf, double step, bool wigner)
        : params(std::move(p)), transform(std::move(tf)), dt(step) {
        params.validate();
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ConfigError("integrator.dt_s must be positive");
        potential = params.trap_potential(*transform->grid());
        if (wigner) {
            const auto &w = transform->grid()->weights();
            inv_dv.resize(w.size());
            for (std::size_t i = 0; i < w.size(); ++i)
                inv_dv[i] = 1.0 / w[i];
        }
    }

    [[nodiscard]] bool wigner() const noexcept { return !inv_dv.empty(); }
    [[nodiscard]] const GridPtr &grid() const noexcept { return transform->grid(); }

    [[nodiscard]] CoupledContactTerm term() const {
        return {potential, params.u_aa(), params.u_bb(), params.u_ab(), inv_dv};
    }
};

using ModelPtr = std::shared_ptr<const EvolutionModel>;

inline ModelPtr make_model(const PhysicsParams &p, const GridPtr &grid, double dt,
                           bool wigner = false) {
    return std::make_shared<const EvolutionModel>(p, make_transform(grid), dt, wigner);
}

inline ModelPtr make_model(const PhysicsParams &p, const TransformPtr &tf, double dt,
                           bool wigner = false) {
    return std::make_shared<const EvolutionModel>(p, tf, dt, wigner);
}

/// Observer hooks for run_sequence. A snapshot scheduled at the instant of
/// a pulse sees the post-pulse state.
struct SequenceObserver {
    std::function<void(const FieldPair &)> on_snapshot;
    std::function<void(const FieldPair &before, const PulseSpec &)> on_pulse;
};

/// Per-trajectory integrator bound to a shared model (coupling off).
class Propagator {
  public:
    explicit Propagator(ModelPtr model)
        : model_(std::move(model)), stepper_(model_->transform, model_->params.mass()) {}

    [[nodiscard]] const EvolutionModel &model() const noexcept { return *model_; }
    [[nodiscard]] std::size_t steps_taken() const noexcept { return stepper_.steps_taken(); }

    /// Advances by exactly `duration`, using the largest step <= model dt
    /// that divides it evenly.
    void evolve(FieldPair &f, double duration) {
        if (duration < 0.0 || !std::isfinite(duration))
            throw ConfigError("evolve: duration must be >= 0");
        if (duration == 0.0)
            return;
        const double t_end = f.time + duration;
        const auto n = static_cast<std::size_t>(std::ceil(duration / model_->dt - 1e-9));
        const auto steps = std::max<std::size_t>(n, 1);
        stepper_.advance(f, model_->term(), duration / static_cast<double>(steps), steps);
        f.time = t_end;
    }

    /**
     * Alternates free evolution and instantaneous pulses. Snapshot times
     * outside [f.time, f.time + duration] are ignored; the integrator lands
     * on each requested time exactly. Pulse and snapshot times are relative
     * to the start of the sequence.
     */
    void run_sequence(FieldPair &f, const PulseSequence &seq, std::vector<double> snapshot_times,
                      const SequenceObserver &obs = {}) {
        seq.validate();
        const double t0 = f.time;
        std::sort(snapshot_times.begin(), snapshot_times.end());
        std::size_t ip = 0, is = 0;
        double t = 0.0;
        while (true) {
            while (ip < seq.pulses.size() && seq.pulses[ip].time <= t) {
                if (obs.on_pulse)
                    obs.on_pulse(f, seq.pulses[ip]);
                apply_pulse(f, seq.pulses[ip]);
                ++ip;
            }
            while (is < snapshot_times.size() && snapshot_times[is] <= t) {
                if (snapshot_times[is] >= 0.0 && obs.on_snapshot)
                    obs.on_snapshot(f);
                ++is;
            }
            double next = seq.duration;
            if (ip < seq.pulses.size())
                next = std::min(next, seq.pulses[ip].time);
            if (is < snapshot_times.size() && snapshot_times[is] <= seq.duration)
                next = std::min(next, snapshot_times[is]);
            if (next <= t)
                break;
            evolve(f, next - t);
            t = next;
            f.time = t0 + t;
        }
    }

  private:
    ModelPtr model_;
    SplitStepper stepper_;
};

/// Mean-field evolution with the coupling off for `duration`.
inline void evolve_gpe(FieldPair &f, const ModelPtr &model, double duration) {
    Propagator(model).evolve(f, duration);
}

/// Lab-frame view of a rotating-frame state: psi_b -> psi_b e^{-i delta t}.
inline void to_lab_frame(FieldPair &f, double detuning) {
    const complex ph = std::polar(1.0, -detuning * f.time);
    for (auto &v : f.b.values())
        v *= ph;
}

/// |a> holds sqrt(N_t) psi_g, |b> is empty.
inline FieldPair condensate_in_a(const ComplexField &psi_g, double n_atoms) {
    FieldPair f(psi_g.grid());
    const double s = std::sqrt(n_atoms);
    for (std::size_t i = 0; i < psi_g.size(); ++i)
        f.a[i] = s * psi_g[i];
    return f;
}

} // namespace bectwist
