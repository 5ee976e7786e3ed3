#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "bectwist/core/errors.hpp"
#include "bectwist/meanfield/gpe.hpp"
#include "bectwist/wigner/accumulator.hpp"
#include "bectwist/wigner/sampling.hpp"

namespace bectwist {

/// A trajectory failed; the whole ensemble is aborted.
class TrajectoryError : public Error {
  public:
    TrajectoryError(std::uint64_t trajectory, std::size_t step, const std::string &what)
        : Error("ensemble.trajectory", "trajectory " + std::to_string(trajectory) +
                                           " failed at step " + std::to_string(step) + ": " +
                                           what),
          trajectory_(trajectory), step_(step) {}
    [[nodiscard]] std::uint64_t trajectory() const noexcept { return trajectory_; }
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

  private:
    std::uint64_t trajectory_;
    std::size_t step_;
};

struct WignerEnsembleConfig {
    std::size_t n_trajectories = 1000;
    std::uint64_t master_seed = 0;
    std::uint64_t first_index = 0;  // trajectories first_index .. first_index + n - 1
    ModelPtr model;                 // must be built with the Wigner corrections on
    ComplexField psi_g;             // normalised ground state
    PulseSequence sequence;
    std::vector<double> schedule;   // accumulation times, relative to the sequence start
    std::size_t workers = 1;

    /// Optional hooks: per-trajectory snapshot (debug) and progress.
    std::function<void(std::uint64_t, std::size_t, const FieldPair &)> on_trajectory_snapshot;
    std::function<void(std::size_t done, std::size_t total)> on_progress;

    void validate() const {
        if (n_trajectories < 2)
            throw ConfigError("ensemble.n_trajectories", "need at least two trajectories");
        if (!model)
            throw ConfigError("ensemble.model", "no evolution model");
        if (!model->wigner())
            throw ConfigError("ensemble.model", "ensemble model lacks the Wigner corrections");
        if (psi_g.grid() != model->grid())
            throw ConfigError("ensemble.grid", "ground state and model use different grids");
        sequence.validate();
        for (double t : schedule)
            if (!(t >= 0.0) || t > sequence.duration)
                throw ConfigError("ensemble.schedule",
                                  "accumulation times must lie within the sequence");
        if (!std::is_sorted(schedule.begin(), schedule.end()))
            throw ConfigError("ensemble.schedule", "accumulation times must be sorted");
    }
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<MomentAccumulator> moments; // one per scheduled time
    std::size_t modes = 0;                  // grid points per component
};

/// One trajectory: sample, evolve through the sequence, measure at each scheduled time.
inline std::vector<TrajectoryMoments>
run_trajectory(const WignerEnsembleConfig &cfg, std::uint64_t index) {
    TrajectoryRng rng(cfg.master_seed, index);
    auto f = sample_initial(cfg.psi_g, cfg.model->params.n_atoms(), rng);
    std::vector<TrajectoryMoments> out;
    out.reserve(cfg.schedule.size());
    Propagator prop(cfg.model);
    SequenceObserver obs;
    obs.on_snapshot = [&](const FieldPair &s) {
        if (cfg.on_trajectory_snapshot)
            cfg.on_trajectory_snapshot(index, out.size(), s);
        out.push_back(measure(s, index));
    };
    try {
        prop.run_sequence(f, cfg.sequence, cfg.schedule, obs);
    } catch (const IntegrationError &e) {
        throw TrajectoryError(index, e.step(), e.what());
    }
    if (out.size() != cfg.schedule.size())
        throw Error("ensemble.schedule", "trajectory " + std::to_string(index) + " recorded " +
                                             std::to_string(out.size()) + " of " +
                                             std::to_string(cfg.schedule.size()) + " times");
    return out;
}

/**
 * Runs the trajectories on a bounded pool of workers. Each worker owns its
 * fields; results are merged by trajectory index, so the output does not
 * depend on the worker count. The first failure stops all workers and is
 * rethrown (the lowest failing index wins when several fail).
 */
inline EnsembleResult run_ensemble(const WignerEnsembleConfig &cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_trajectories;
    const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, n);

    std::vector<MomentAccumulator> partial_init(cfg.schedule.size());
    std::vector<std::vector<MomentAccumulator>> partial(workers, partial_init);
    std::atomic<std::size_t> next{0}, done{0};
    std::atomic<bool> abort{false};
    std::mutex fail_mutex;
    std::optional<std::uint64_t> fail_index;
    std::exception_ptr failure;

    auto work = [&](std::size_t w) {
        while (!abort.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                break;
            try {
                auto rec = run_trajectory(cfg, cfg.first_index + i);
                for (std::size_t k = 0; k < rec.size(); ++k)
                    partial[w][k].add(rec[k]);
            } catch (...) {
                std::lock_guard lock(fail_mutex);
                if (!fail_index || cfg.first_index + i < *fail_index) {
                    fail_index = cfg.first_index + i;
                    failure = std::current_exception();
                }
                abort = true;
                break;
            }
            const auto d = done.fetch_add(1) + 1;
            if (cfg.on_progress) {
                std::lock_guard lock(fail_mutex);
                cfg.on_progress(d, n);
            }
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
    }
    if (failure)
        std::rethrow_exception(failure);

    EnsembleResult out;
    out.times = cfg.schedule;
    out.modes = cfg.model->grid()->size();
    out.moments.resize(cfg.schedule.size());
    for (std::size_t k = 0; k < cfg.schedule.size(); ++k)
        for (std::size_t w = 0; w < workers; ++w)
            out.moments[k].merge(partial[w][k]);
    return out;
}

/// Truncated-Wigner free evolution: evolve_gpe with the 1/dv corrections on.
inline void evolve_tw(FieldPair &f, const ModelPtr &model, double duration) {
    if (!model->wigner())
        throw ConfigError("evolve_tw needs a model with the Wigner corrections");
    Propagator(model).evolve(f, duration);
}

} // namespace bectwist
