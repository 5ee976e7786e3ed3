#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "bectwist/core/snapshot.hpp"
#include "bectwist/lambda/estimators.hpp"
#include "bectwist/meanfield/ground_state.hpp"
#include "bectwist/observables/spin.hpp"
#include "bectwist/orchestration/config.hpp"
#include "bectwist/orchestration/manifest.hpp"
#include "bectwist/orchestration/revival.hpp"
#include "bectwist/twomode/chi.hpp"
#include "bectwist/twomode/kerr.hpp"
#include "bectwist/wigner/ensemble.hpp"

namespace bectwist {

struct RunOptions {
    /// Progress lines (stage names, trajectory counts); may be empty.
    std::function<void(const std::string &)> log;
};

namespace pipeline {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// JSON cannot hold NaN; undefined values are written as null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

/// Q where both components are populated, NaN otherwise.
inline double q_or_nan(const FieldPair &f) {
    return f.a.norm() > 0.0 && f.b.norm() > 0.0 ? overlap_Q(f) : nan;
}

inline double get_num(const json &j, const char *key) {
    auto it = j.find(key);
    return (it == j.end() || !it->is_number()) ? nan : it->get<double>();
}

struct Prepared {
    PhysicsParams params;
    GridPtr grid;
    TransformPtr transform;
    GroundState gs;
};

inline Prepared prepare(const ExperimentConfig &cfg, const RunContext &ctx) {
    return ctx.stage("ground_state", [&] {
        Prepared p;
        p.params = cfg.physics_params();
        p.params.validate();
        p.grid = cfg.make_grid();
        p.transform = make_transform(p.grid);
        GroundStateOptions opt;
        opt.imag_dt = cfg.ground_state.imag_dt_s;
        opt.tolerance = cfg.ground_state.tolerance;
        opt.max_iterations = cfg.ground_state.max_iterations;
        p.gs = ground_state(p.params, p.transform, opt);

        const double hw = constants::hbar * p.params.omega_bar();
        ctx.write_json("ground_state_summary.json",
                       {{"energy_per_particle_J", p.gs.energy},
                        {"energy_per_particle_hbar_omega", p.gs.energy / hw},
                        {"chemical_potential_J", p.gs.chemical_potential},
                        {"chemical_potential_hbar_omega", p.gs.chemical_potential / hw},
                        {"iterations", p.gs.iterations},
                        {"n_atoms", p.params.n_atoms()}});
        const auto files = write_snapshot(ctx.path("psi_ground"), p.gs.psi, 0.0, "g");
        for (const auto &f : files)
            ctx.record(f);
        if (p.grid->geometry() == Geometry::SphericalRadial1D) {
            CsvTable t({"r_m", "density_per_m3"});
            const auto &r = p.grid->coordinates(0);
            for (std::size_t i = 0; i < r.size(); ++i)
                t.row({r[i], p.params.n_atoms() * std::norm(p.gs.psi[i])});
            ctx.write_csv("density_profile.csv", t);
        }
        return p;
    });
}

inline ModelPtr mean_field_model(const ExperimentConfig &cfg, const Prepared &p) {
    return make_model(p.params, p.transform, cfg.integrator.dt_s, false);
}

struct TPi {
    double t_pi = 0.0;
    double q = nan; // mean-field Q at the revival (detected runs only)
    std::string source;
};

inline TPi resolve_t_pi(const ExperimentConfig &cfg, const Prepared &p, const RunContext &ctx) {
    if (cfg.sequence.kind == "explicit")
        return {nan, nan, "explicit"};
    if (cfg.sequence.t_pi_s > 0.0)
        return {cfg.sequence.t_pi_s, nan, "config"};
    return ctx.stage("t_pi", [&] {
        const auto series = overlap_series(mean_field_model(cfg, p), p.gs.psi,
                                           cfg.sequence.search_window_s,
                                           cfg.sequence.search_cadence_s);
        CsvTable t({"t_s", "q"});
        for (std::size_t i = 0; i < series.time.size(); ++i)
            t.row({series.time[i], series.q[i]});
        ctx.write_csv("overlap_search.csv", t);
        return TPi{series.revival.t_pi, series.revival.q, "detected"};
    });
}

/// Pulse sequence without the readout pulse, plus the readout to apply.
inline PulseSequence base_sequence(const ExperimentConfig &cfg, double t_pi) {
    if (cfg.sequence.kind == "explicit")
        return {cfg.sequence.pulses, cfg.sequence.duration_s};
    return PulseSequence::echo(t_pi, cfg.sequence.n_bounces);
}

/// Cadence grid on [0, duration] merged with the pulse times; grid points
/// within 1e-6 cadence of a pulse or of the end are replaced by it.
inline std::vector<double> schedule(const ExperimentConfig &cfg, const PulseSequence &seq) {
    const double end = seq.duration;
    const double dt = cfg.snapshots.cadence_s;
    const double tol = 1e-6 * dt;
    std::vector<double> exact;
    for (const auto &p : seq.pulses)
        exact.push_back(p.time);
    exact.push_back(end);
    auto near_exact = [&](double t) {
        return std::any_of(exact.begin(), exact.end(),
                           [&](double e) { return std::abs(t - e) <= tol; });
    };
    std::vector<double> ts = exact;
    const auto n = static_cast<std::size_t>(std::floor(end / dt + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        if (t <= end && !near_exact(t))
            ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

inline std::size_t nearest_index(const std::vector<double> &ts, double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (std::abs(ts[i] - t) < std::abs(ts[best] - t))
            best = i;
    return best;
}

inline void log(const RunOptions &opt, const std::string &msg) {
    if (opt.log)
        opt.log(msg);
}

// ---------------------------------------------------------------- groundstate

inline json run_groundstate(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    log(opt, "ground state");
    const auto p = prepare(cfg, ctx);
    const double hw = constants::hbar * p.params.omega_bar();
    json s = {{"mode", "groundstate"},
              {"energy_per_particle_hbar_omega", p.gs.energy / hw},
              {"chemical_potential_hbar_omega", p.gs.chemical_potential / hw},
              {"iterations", p.gs.iterations}};
    ctx.write_json("summary.json", s);
    return s;
}

// ------------------------------------------------------------------------ gpe

inline json run_gpe(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    log(opt, "ground state");
    const auto p = prepare(cfg, ctx);
    log(opt, "T_pi");
    const auto tpi = resolve_t_pi(cfg, p, ctx);
    auto seq = base_sequence(cfg, tpi.t_pi);
    if (cfg.sequence.readout_theta_rad && cfg.sequence.kind == "echo")
        seq.pulses.push_back({*cfg.sequence.readout_theta_rad, cfg.sequence.readout_phi_rad,
                              seq.duration});
    const auto times = schedule(cfg, seq);

    log(opt, "mean-field sequence");
    return ctx.stage("sequence", [&] {
        CsvTable series({"t_s", "n_a", "n_b", "q", "jx", "jy", "jz", "rel_phase_rad"});
        CsvTable pulses({"t_s", "theta_rad", "phi_rad", "q_before", "n_a_before", "n_b_before"});
        std::vector<double> pulse_q;
        const auto snap = ctx.sub("snapshots");
        std::size_t k = 0;
        SequenceObserver obs;
        obs.on_snapshot = [&](const FieldPair &f) {
            const auto m = spin_moments(f);
            const double q = q_or_nan(f);
            series.row({f.time, f.a.norm(), f.b.norm(), q, m.jx(), m.jy(), m.jz(),
                        std::arg(std::conj(overlap(f.a, f.b)))});
            if (cfg.snapshots.write_fields) {
                for (auto [field, name] : {std::pair{&f.a, "a"}, std::pair{&f.b, "b"}})
                    for (const auto &file :
                         write_snapshot(snap.path(fmt::format("t{:05}_{}", k, name)), *field,
                                        f.time, name))
                        snap.record(file);
            }
            ++k;
        };
        obs.on_pulse = [&](const FieldPair &f, const PulseSpec &ps) {
            const double q = q_or_nan(f);
            pulse_q.push_back(q);
            pulses.row({ps.time, ps.theta, ps.phi, q, f.a.norm(), f.b.norm()});
        };
        auto f = condensate_in_a(p.gs.psi, p.params.n_atoms());
        const double n0 = f.a.norm();
        Propagator(mean_field_model(cfg, p)).run_sequence(f, seq, times, obs);
        ctx.write_csv("timeseries.csv", series);
        ctx.write_csv("pulses.csv", pulses);

        json s = {{"mode", "gpe"},
                  {"t_pi_s", num(tpi.t_pi)},
                  {"t_pi_source", tpi.source},
                  {"q_revival_search", num(tpi.q)},
                  {"n_bounces", cfg.sequence.n_bounces},
                  {"duration_s", seq.duration},
                  {"norm_drift", (f.a.norm() + f.b.norm()) / n0 - 1.0}};
        // Q just before the pi pulses and at the end of the echo (before any readout).
        json qp = json::array();
        for (std::size_t i = 1; i < pulse_q.size(); ++i)
            qp.push_back(num(pulse_q[i]));
        s["q_before_pulses"] = qp;
        if (cfg.sequence.kind == "echo") {
            s["q_t_pi"] = pulse_q.size() > 1 ? num(pulse_q[1]) : json(nullptr);
            const bool readout = cfg.sequence.readout_theta_rad.has_value();
            s["q_end"] = readout ? num(pulse_q.back()) : num(q_or_nan(f));
        }
        ctx.write_json("summary.json", s);
        return s;
    });
}

// ------------------------------------------------------------------ lambda-est

struct LambdaResult {
    ChiEstimate chi;
    PhaseDiffusionProbe phi;
    SqueezingPrediction prediction;
};

inline LambdaResult estimate_lambda(const ExperimentConfig &cfg, const Prepared &p, double t_pi,
                                    const RunContext &ctx) {
    EchoRun run;
    run.model = mean_field_model(cfg, p);
    run.psi_g = p.gs.psi;
    run.t_pi = t_pi;
    run.n_bounces = cfg.sequence.n_bounces;
    run.cadence = cfg.snapshots.cadence_s;
    LambdaResult r;
    r.chi = ctx.stage("lambda_chi", [&] { return lambda_from_chi(run); });
    twomode::write_chi_csv(ctx.path("chi_trace.csv"), r.chi.trace);
    ctx.record(ctx.path("chi_trace.csv"));

    r.phi = ctx.stage("lambda_phase", [&] {
        return lambda_from_phase_diffusion(run, cfg.lambda.imbalance_scale, cfg.output.workers);
    });
    CsvTable ph({"t_s", "phi_plus_rad", "phi_minus_rad"});
    const auto &tp = r.phi.plus.times();
    const auto &tm = r.phi.minus.times();
    if (tp.size() != tm.size())
        throw Error("lambda.phase", "phase traces sampled at different times");
    for (std::size_t i = 0; i < tp.size(); ++i)
        ph.row({tp[i], r.phi.plus.phases()[i], r.phi.minus.phases()[i]});
    ctx.write_csv("phase_trace.csv", ph);

    // 2 n_bounces - 1 pi pulses: always an odd count.
    r.prediction = predict_squeezing(r.phi.lambda_estimate, p.params.n_atoms(), cfg.theta_grid(),
                                     /*labels_swapped=*/true);
    CsvTable v({"theta_rad", "v"});
    for (std::size_t i = 0; i < r.prediction.theta.size(); ++i)
        v.row({r.prediction.theta[i], r.prediction.v[i]});
    ctx.write_csv("twomode_prediction.csv", v);
    return r;
}

inline json lambda_json(const LambdaResult &r, double t_pi) {
    const auto &pr = r.prediction;
    return {{"T_pi", t_pi},
            {"lambda_rchi", r.chi.integrals.lambda},
            {"lambda1_rchi", r.chi.integrals.lambda1},
            {"lambda2_rchi", r.chi.integrals.lambda2},
            {"rchi_asymmetric", r.chi.integrals.asymmetric},
            {"lambda_rphi", r.phi.lambda_estimate},
            {"delta_phi", r.phi.delta_phi},
            {"imbalance", r.phi.imbalance},
            {"lambda_opt", pr.lambda_opt},
            {"ratio_to_opt", pr.ratio_to_opt},
            {"regime", to_string(pr.regime)},
            {"theta_opt_twomode", pr.optimum.theta},
            {"v_min_twomode", pr.optimum.v}};
}

inline json run_lambda_est(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    if (cfg.sequence.kind != "echo")
        throw ConfigError("sequence.kind", "lambda-est needs an echo sequence");
    log(opt, "ground state");
    const auto p = prepare(cfg, ctx);
    log(opt, "T_pi");
    const auto tpi = resolve_t_pi(cfg, p, ctx);
    log(opt, "lambda estimators");
    const auto r = estimate_lambda(cfg, p, tpi.t_pi, ctx);
    json s = lambda_json(r, tpi.t_pi);
    s["mode"] = "lambda-est";
    s["t_pi_source"] = tpi.source;
    s["q_t_pi"] = num(tpi.q);
    ctx.write_json("lambda.json", s);
    return s;
}

// ------------------------------------------------------------------------- tw

struct TwState {
    Prepared prepared;
    TPi tpi;
    EnsembleResult ensemble;
};

inline TwState run_tw_ensemble(const ExperimentConfig &cfg, const RunContext &ctx,
                               const RunOptions &opt) {
    TwState st;
    log(opt, "ground state");
    st.prepared = prepare(cfg, ctx);
    log(opt, "T_pi");
    st.tpi = resolve_t_pi(cfg, st.prepared, ctx);
    const auto seq = base_sequence(cfg, st.tpi.t_pi);

    WignerEnsembleConfig ec;
    ec.n_trajectories = cfg.ensemble.n_trajectories;
    ec.master_seed = cfg.ensemble.master_seed;
    ec.model = make_model(st.prepared.params, st.prepared.transform, cfg.integrator.dt_s, true);
    ec.psi_g = st.prepared.gs.psi;
    ec.sequence = seq;
    ec.schedule = schedule(cfg, seq);
    ec.workers = cfg.output.workers;
    const auto debug = ctx.sub("trajectories");
    if (cfg.ensemble.debug_trajectory_snapshots > 0) {
        ec.on_trajectory_snapshot = [&, k = cfg.ensemble.debug_trajectory_snapshots](
                                        std::uint64_t index, std::size_t slot, const FieldPair &f) {
            if (index >= k)
                return;
            for (auto [field, name] : {std::pair{&f.a, "a"}, std::pair{&f.b, "b"}})
                for (const auto &file : write_snapshot(
                         debug.path(fmt::format("traj{:04}_t{:05}_{}", index, slot, name)),
                         *field, f.time, name))
                    debug.record(file);
        };
    }
    const std::size_t step = std::max<std::size_t>(1, ec.n_trajectories / 20);
    ec.on_progress = [&](std::size_t done, std::size_t total) {
        if (done % step == 0 || done == total)
            log(opt, fmt::format("trajectories {}/{}", done, total));
    };
    log(opt, fmt::format("ensemble: {} trajectories, {} workers", ec.n_trajectories, ec.workers));
    st.ensemble = ctx.stage("ensemble", [&] { return run_ensemble(ec); });

    CsvTable m({"t_s", "n_a", "n_b", "v", "q", "jx", "var_jx", "v_stderr", "q_stderr",
                "var_jx_stderr"});
    for (std::size_t k = 0; k < st.ensemble.times.size(); ++k) {
        const auto c = corrected_moments(st.ensemble.moments[k], st.ensemble.modes);
        m.row({st.ensemble.times[k], c.n_a, c.n_b, c.v, c.q, c.jx, c.var_jx, c.v_stderr,
               c.q_stderr, c.var_jx_stderr});
    }
    ctx.write_csv("tw_moments.csv", m);
    return st;
}

inline std::vector<SqueezingReport> theta_reports(const TwState &st, const std::vector<double> &thetas,
                                                  double phi) {
    std::vector<SqueezingReport> out;
    const auto &acc = st.ensemble.moments.back();
    for (double th : thetas)
        out.push_back(readout_report(acc, st.ensemble.modes, th, phi, st.prepared.params.n_atoms()));
    return out;
}

inline CsvTable report_table(const std::vector<SqueezingReport> &rows) {
    CsvTable t({"theta_rad", "v", "v_stderr", "q", "xi_s", "delta_phi"});
    for (const auto &r : rows)
        t.row({r.theta, r.v, r.v_stderr, r.q, r.xi_s, r.delta_phi});
    return t;
}

inline json tw_summary(const ExperimentConfig &cfg, const TwState &st,
                       const std::vector<SqueezingReport> &rows) {
    json s = {{"mode", "tw"},
              {"t_pi_s", num(st.tpi.t_pi)},
              {"t_pi_source", st.tpi.source},
              {"n_trajectories", cfg.ensemble.n_trajectories},
              {"master_seed", cfg.ensemble.master_seed},
              {"n_bounces", cfg.sequence.n_bounces},
              {"readout_phi_rad", cfg.sequence.readout_phi_rad}};
    const auto &ts = st.ensemble.times;
    if (std::isfinite(st.tpi.t_pi)) {
        const auto c = corrected_moments(st.ensemble.moments[nearest_index(ts, st.tpi.t_pi)],
                                         st.ensemble.modes);
        s["q_t_pi"] = num(c.q);
    }
    const auto end = corrected_moments(st.ensemble.moments.back(), st.ensemble.modes);
    s["q_end"] = num(end.q);
    s["q_end_stderr"] = num(end.q_stderr);
    s["n_total_end"] = num(end.n_total);

    const SqueezingReport *vmin = nullptr, *ximin = nullptr;
    for (const auto &r : rows) {
        if (std::isfinite(r.v) && (!vmin || r.v < vmin->v))
            vmin = &r;
        if (std::isfinite(r.xi_s) && (!ximin || r.xi_s < ximin->xi_s))
            ximin = &r;
    }
    if (vmin)
        s["minimum"] = {{"theta_opt_rad", vmin->theta},
                        {"v_min", vmin->v},
                        {"v_min_stderr", num(vmin->v_stderr)},
                        {"q", num(vmin->q)}};
    if (ximin)
        s["xi_minimum"] = {{"theta_rad", ximin->theta},
                           {"xi_min", ximin->xi_s},
                           {"delta_phi", num(ximin->delta_phi)}};
    return s;
}

inline json run_tw(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    const auto st = run_tw_ensemble(cfg, ctx, opt);
    const auto rows = theta_reports(st, cfg.theta_grid(), cfg.sequence.readout_phi_rad);
    ctx.write_csv("theta_sweep.csv", report_table(rows));
    json s = tw_summary(cfg, st, rows);
    if (cfg.lambda.with_tw && cfg.sequence.kind == "echo") {
        log(opt, "lambda estimators");
        const auto r = estimate_lambda(cfg, st.prepared, st.tpi.t_pi, ctx);
        s["twomode"] = lambda_json(r, st.tpi.t_pi);
    }
    ctx.write_json("summary.json", s);
    return s;
}

// -------------------------------------------------------------------- twomode

inline json run_twomode(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    log(opt, "two-mode model");
    return ctx.stage("twomode", [&] {
        auto ns = cfg.twomode.n_atoms_values;
        if (ns.empty())
            ns.push_back(cfg.physics.n_atoms);
        const auto thetas = cfg.theta_grid();
        CsvTable curves({"n_atoms", "lambda", "theta_rad", "v"});
        CsvTable optima({"n_atoms", "lambda", "theta_opt_rad", "v_min"});
        CsvTable best({"n_atoms", "lambda_opt", "theta_opt_rad", "v_min", "lambda_opt_asymptotic",
                       "v_min_asymptotic"});
        json opt_json = json::array();
        for (double n : ns) {
            for (double l : cfg.twomode.lambda_values) {
                for (double th : thetas)
                    curves.row({n, l, th, twomode::two_mode_variance(n, l, th)});
                const auto o = twomode::optimal_theta(n, l);
                optima.row({n, l, o.theta, o.v});
            }
            if (n >= 100.0) {
                const auto o = twomode::optimal_squeezing(n);
                best.row({n, o.lambda_opt, o.theta_opt, o.v_min, o.lambda_asymptotic,
                          o.v_asymptotic});
                opt_json.push_back({{"n_atoms", n},
                                    {"lambda_opt", o.lambda_opt},
                                    {"theta_opt_rad", o.theta_opt},
                                    {"v_min", o.v_min},
                                    {"lambda_opt_asymptotic", o.lambda_asymptotic},
                                    {"v_min_asymptotic", o.v_asymptotic}});
            }
        }
        ctx.write_csv("twomode_curves.csv", curves);
        ctx.write_csv("twomode_optima.csv", optima);
        ctx.write_csv("twomode_best.csv", best);
        json s = {{"mode", "twomode"}, {"optimal_squeezing", opt_json}};
        ctx.write_json("summary.json", s);
        return s;
    });
}

// ---------------------------------------------------------------------- sweep

inline const std::vector<std::string> &sweep_columns() {
    static const std::vector<std::string> cols = {
        "value",        "status",       "t_pi_s",           "q_t_pi",
        "lambda_rphi",  "lambda_rchi",  "theta_opt_tw_rad", "v_min_tw",
        "v_min_tw_stderr", "xi_min_tw", "theta_opt_twomode_rad", "v_min_twomode",
        "error_code"};
    return cols;
}

/// One aggregated row from a sub-run summary; the same function serves
/// sweeps and individually run values.
inline std::vector<std::string> summary_row(double value, const json &s) {
    const json empty = json::object();
    const json &lam = s.contains("twomode") ? s["twomode"] : s;
    const json &mn = s.contains("minimum") ? s["minimum"] : empty;
    const json &xi = s.contains("xi_minimum") ? s["xi_minimum"] : empty;
    double t_pi = get_num(s, "t_pi_s");
    if (!std::isfinite(t_pi))
        t_pi = get_num(s, "T_pi");
    return {csv_number(value),
            "ok",
            csv_number(t_pi),
            csv_number(get_num(s, "q_t_pi")),
            csv_number(get_num(lam, "lambda_rphi")),
            csv_number(get_num(lam, "lambda_rchi")),
            csv_number(get_num(mn, "theta_opt_rad")),
            csv_number(get_num(mn, "v_min")),
            csv_number(get_num(mn, "v_min_stderr")),
            csv_number(get_num(xi, "xi_min")),
            csv_number(get_num(lam, "theta_opt_twomode")),
            csv_number(get_num(lam, "v_min_twomode")),
            ""};
}

/// Sub-run configuration for one sweep value.
inline ExperimentConfig sweep_value_config(const ExperimentConfig &cfg, double value) {
    ExperimentConfig c = cfg;
    c.mode = run_mode_from_string(cfg.sweep.run);
    c.sweep.values.clear();
    const auto &param = cfg.sweep.parameter;
    if (param == "omega_r") {
        c.physics.omega_rad_per_s = {value, value, value};
    } else if (param == "n_atoms") {
        c.physics.n_atoms = value;
    } else if (param == "n_bounces") {
        if (value != std::round(value))
            throw ConfigError("sweep.values", "n_bounces values must be integers");
        c.sequence.n_bounces = static_cast<int>(value);
    } else if (param == "theta") {
        c.sequence.readout_theta_rad = value;
        c.observables.theta_min_rad = value;
        c.observables.theta_max_rad = value + 1.0;
        c.observables.theta_points = 1;
    }
    c.validate();
    return c;
}

inline json run_single(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt);

inline json run_sweep(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    CsvTable table([&] {
        auto cols = sweep_columns();
        cols.front() = cfg.sweep.parameter;
        return cols;
    }());
    json values = json::array();
    auto failed = [&](double v, const std::string &code, const std::string &msg) {
        std::vector<std::string> row(sweep_columns().size(), csv_number(nan));
        row.front() = csv_number(v);
        row[1] = "failed";
        row.back() = code;
        table.row(row);
        values.push_back({{"value", v}, {"status", "failed"}, {"error", {{"code", code}, {"message", msg}}}});
    };

    // A theta sweep of TW runs reads every angle from one ensemble: the
    // readout pulse acts on the stored pre-readout moments.
    const bool shared_theta = cfg.sweep.parameter == "theta" && cfg.sweep.run == "tw";
    std::optional<TwState> shared;
    if (shared_theta && !cfg.sweep.values.empty()) {
        ExperimentConfig base = cfg;
        base.mode = RunMode::Tw;
        base.sweep.values.clear();
        try {
            shared = run_tw_ensemble(base, ctx.sub("shared"), opt);
        } catch (const Error &e) {
            for (double v : cfg.sweep.values)
                failed(v, e.code(), e.what());
        }
    }

    for (std::size_t i = 0; i < cfg.sweep.values.size() && (!shared_theta || shared); ++i) {
        const double v = cfg.sweep.values[i];
        log(opt, fmt::format("sweep {} = {} ({}/{})", cfg.sweep.parameter, v, i + 1,
                             cfg.sweep.values.size()));
        const auto sub = ctx.sub(fmt::format("value-{:03}", i));
        try {
            const auto c = sweep_value_config(cfg, v);
            json s;
            if (shared_theta) {
                const auto rows = theta_reports(*shared, {v}, c.sequence.readout_phi_rad);
                sub.write_csv("theta_sweep.csv", report_table(rows));
                s = tw_summary(c, *shared, rows);
                sub.write_json("summary.json", s);
            } else {
                s = run_single(c, sub, opt);
            }
            table.row(summary_row(v, s));
            values.push_back({{"value", v}, {"status", "ok"}, {"summary", s}});
        } catch (const Error &e) {
            failed(v, e.code(), e.what());
        }
    }
    ctx.write_csv("sweep.csv", table);
    json s = {{"mode", "sweep"},
              {"parameter", cfg.sweep.parameter},
              {"run", cfg.sweep.run},
              {"values", values}};
    ctx.write_json("summary.json", s);
    return s;
}

inline json run_single(const ExperimentConfig &cfg, const RunContext &ctx, const RunOptions &opt) {
    switch (cfg.mode) {
    case RunMode::GroundState:
        return run_groundstate(cfg, ctx, opt);
    case RunMode::Gpe:
        return run_gpe(cfg, ctx, opt);
    case RunMode::Tw:
        return run_tw(cfg, ctx, opt);
    case RunMode::TwoMode:
        return run_twomode(cfg, ctx, opt);
    case RunMode::LambdaEst:
        return run_lambda_est(cfg, ctx, opt);
    default:
        return run_sweep(cfg, ctx, opt);
    }
}

} // namespace pipeline

/// Result of run_experiment: the manifest plus the mode's summary JSON.
struct RunResult {
    RunManifest manifest;
    json summary;
};

/// Raised when a stage fails after the run directory was created; the
/// manifest (with the failed stage) has been written already.
class StageError : public Error {
  public:
    StageError(const Error &cause, std::string run_dir)
        : Error(cause.code(), cause.what()), run_dir_(std::move(run_dir)) {}
    [[nodiscard]] const std::string &run_dir() const noexcept { return run_dir_; }

  private:
    std::string run_dir_;
};

/**
 * Validates the configuration, runs the selected pipeline in a fresh run
 * directory under cfg.output.dir and writes config.json and manifest.json
 * there. Validation errors are thrown before anything is written.
 */
inline RunResult run_experiment(const ExperimentConfig &cfg, const RunOptions &opt = {}) {
    cfg.validate();
    auto manifest = std::make_shared<RunManifest>();
    manifest->config_hash = config_hash(cfg);
    manifest->mode = std::string(to_string(cfg.mode));
    const auto dir = allocate_run_dir(cfg.output.dir, cfg, manifest->config_hash);
    manifest->run_dir = dir.string();
    RunContext ctx(dir, manifest);
    // Output location and worker count do not affect results and are left
    // out so that config.json checksums match across them.
    ctx.write_json("config.json", json::parse(canonical_config(cfg)));

    RunResult out;
    auto write_manifest = [&] {
        std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest->to_json().dump(2) << '\n';
    };
    try {
        out.summary = pipeline::run_single(cfg, ctx, opt);
    } catch (const Error &e) {
        manifest->ok = false;
        write_manifest();
        throw StageError(e, dir.string());
    } catch (const std::exception &e) {
        manifest->ok = false;
        write_manifest();
        throw StageError(Error("internal", e.what()), dir.string());
    }
    write_manifest();
    out.manifest = *manifest;
    return out;
}

} // namespace bectwist
