#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bectwist/core/errors.hpp"
#include "bectwist/core/grid.hpp"
#include "bectwist/meanfield/params.hpp"
#include "bectwist/meanfield/pulse.hpp"

namespace bectwist {

using json = nlohmann::json;

enum class RunMode { GroundState, Gpe, Tw, TwoMode, LambdaEst, Sweep };

inline std::string_view to_string(RunMode m) {
    switch (m) {
    case RunMode::GroundState:
        return "groundstate";
    case RunMode::Gpe:
        return "gpe";
    case RunMode::Tw:
        return "tw";
    case RunMode::TwoMode:
        return "twomode";
    case RunMode::LambdaEst:
        return "lambda-est";
    default:
        return "sweep";
    }
}

inline RunMode run_mode_from_string(std::string_view s) {
    for (auto m : {RunMode::GroundState, RunMode::Gpe, RunMode::Tw, RunMode::TwoMode,
                   RunMode::LambdaEst, RunMode::Sweep})
        if (to_string(m) == s)
            return m;
    throw ConfigError("mode", "unknown run mode '" + std::string(s) + "'");
}

/**
 * Experiment configuration. Every dimensional key spells out its unit;
 * frequencies are angular (rad/s), so 2 pi x 200 Hz is 1256.637... .
 */
struct ExperimentConfig {
    std::string name = "custom";
    RunMode mode = RunMode::Gpe;
    std::string notes;

    struct Physics {
        double mass_kg = constants::rb87_mass;
        double a11_bohr = 100.4;
        double a22_bohr = 95.00;
        double a12_bohr = 97.66;
        std::array<double, 3> omega_rad_per_s{2 * std::numbers::pi * 200, 2 * std::numbers::pi * 200,
                                              2 * std::numbers::pi * 200};
        double n_atoms = 1.5e5;
        double detuning_rad_per_s = 0.0;
        friend bool operator==(const Physics &, const Physics &) = default;
    } physics;

    struct GridSpec {
        Geometry geometry = Geometry::SphericalRadial1D;
        std::vector<std::size_t> points{256};
        std::vector<double> lengths_m{20e-6};
        friend bool operator==(const GridSpec &, const GridSpec &) = default;
    } grid;

    struct Integrator {
        double dt_s = 1e-6;
        friend bool operator==(const Integrator &, const Integrator &) = default;
    } integrator;

    struct GroundStateSpec {
        double imag_dt_s = 0.0;
        double tolerance = 1e-15;
        std::size_t max_iterations = 200000;
        friend bool operator==(const GroundStateSpec &, const GroundStateSpec &) = default;
    } ground_state;

    struct SequenceSpec {
        std::string kind = "echo"; // echo | explicit
        double t_pi_s = 0.0;       // 0: detect from the mean-field Q(t)
        double search_window_s = 0.03;
        double search_cadence_s = 1e-5;
        int n_bounces = 1;
        double readout_phi_rad = std::numbers::pi / 2;
        std::optional<double> readout_theta_rad; // gpe mode only
        std::vector<PulseSpec> pulses;           // explicit only
        double duration_s = 0.0;                 // explicit only
        friend bool operator==(const SequenceSpec &, const SequenceSpec &) = default;
    } sequence;

    struct Snapshots {
        double cadence_s = 1e-4;
        bool write_fields = false;
        friend bool operator==(const Snapshots &, const Snapshots &) = default;
    } snapshots;

    struct Ensemble {
        std::size_t n_trajectories = 1000;
        std::uint64_t master_seed = 1;
        std::size_t debug_trajectory_snapshots = 0; // write fields of the first k trajectories
        friend bool operator==(const Ensemble &, const Ensemble &) = default;
    } ensemble;

    struct Observables {
        std::size_t theta_points = 100; // sweep [theta_min, theta_max) in equal steps
        double theta_min_rad = 0.0;
        double theta_max_rad = std::numbers::pi;
        friend bool operator==(const Observables &, const Observables &) = default;
    } observables;

    struct TwoMode {
        std::vector<double> lambda_values{1e-4, 2e-4, 4e-4};
        std::vector<double> n_atoms_values; // empty: physics.n_atoms
        friend bool operator==(const TwoMode &, const TwoMode &) = default;
    } twomode;

    struct Lambda {
        double imbalance_scale = 1.0;
        bool with_tw = true; // tw mode also runs the estimators for the two-mode comparison
        friend bool operator==(const Lambda &, const Lambda &) = default;
    } lambda;

    struct Sweep {
        std::string parameter = "omega_r"; // omega_r | theta | n_bounces | n_atoms
        std::vector<double> values;
        std::string run = "tw";            // sub-run mode: tw | lambda-est | gpe
        friend bool operator==(const Sweep &, const Sweep &) = default;
    } sweep;

    struct Output {
        std::string dir = "runs";
        std::size_t workers = 1;
        friend bool operator==(const Output &, const Output &) = default;
    } output;

    friend bool operator==(const ExperimentConfig &, const ExperimentConfig &) = default;

    [[nodiscard]] PhysicsParams physics_params() const {
        const double a0 = constants::bohr_radius;
        return {physics.mass_kg,          physics.a11_bohr * a0, physics.a22_bohr * a0,
                physics.a12_bohr * a0,    physics.omega_rad_per_s, physics.n_atoms,
                physics.detuning_rad_per_s};
    }

    [[nodiscard]] GridPtr make_grid() const {
        return bectwist::make_grid(grid.geometry, grid.points, grid.lengths_m);
    }

    [[nodiscard]] std::vector<double> theta_grid() const {
        std::vector<double> out(observables.theta_points);
        const double step = (observables.theta_max_rad - observables.theta_min_rad) /
                            static_cast<double>(observables.theta_points);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = observables.theta_min_rad + static_cast<double>(i) * step;
        return out;
    }

    void validate() const;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string &code, const std::string &what) {
    throw ConfigError(code, what);
}

inline void require(bool ok, const std::string &code, const std::string &what) {
    if (!ok)
        config_fail(code, what);
}

inline bool positive(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace detail

inline void ExperimentConfig::validate() const {
    using detail::positive;
    using detail::require;
    require(positive(physics.mass_kg), "physics.mass_kg", "mass must be positive");
    for (auto [key, a] : {std::pair{"physics.a11_bohr", physics.a11_bohr},
                          std::pair{"physics.a22_bohr", physics.a22_bohr},
                          std::pair{"physics.a12_bohr", physics.a12_bohr}})
        require(std::isfinite(a) && a >= 0.0, key, std::string(key) + " must be >= 0");
    for (std::size_t i = 0; i < 3; ++i)
        require(positive(physics.omega_rad_per_s[i]), "physics.omega",
                "trap frequencies must be positive (rad/s)");
    require(positive(physics.n_atoms), "physics.n_atoms", "atom number must be positive");
    require(std::isfinite(physics.detuning_rad_per_s), "physics.detuning_rad_per_s",
            "detuning must be finite");
    const bool radial = grid.geometry == Geometry::SphericalRadial1D;
    require(!radial || (physics.omega_rad_per_s[0] == physics.omega_rad_per_s[1] &&
                        physics.omega_rad_per_s[1] == physics.omega_rad_per_s[2]),
            "grid.geometry", "the spherical radial grid needs equal trap frequencies");
    const std::size_t axes = radial ? 1 : 3;
    require(grid.points.size() == axes || (grid.points.size() == 1 && axes == 3),
            "grid.points", "grid.points must list one value per axis");
    require(grid.lengths_m.size() == axes || (grid.lengths_m.size() == 1 && axes == 3),
            "grid.lengths_m", "grid.lengths_m must list one value per axis");
    for (auto p : grid.points)
        require(p >= Grid::min_points && p <= Grid::max_points, "grid.points",
                "grid points per axis must lie in [8, 4096]");
    for (auto l : grid.lengths_m)
        require(positive(l), "grid.lengths_m", "grid lengths must be positive");
    require(positive(integrator.dt_s), "integrator.dt_s", "time step must be positive");
    require(ground_state.imag_dt_s >= 0.0, "ground_state.imag_dt_s", "must be >= 0");
    require(positive(ground_state.tolerance), "ground_state.tolerance", "must be positive");
    require(ground_state.max_iterations > 0, "ground_state.max_iterations", "must be positive");

    require(sequence.kind == "echo" || sequence.kind == "explicit", "sequence.kind",
            "sequence.kind must be 'echo' or 'explicit'");
    require(sequence.t_pi_s >= 0.0 && std::isfinite(sequence.t_pi_s), "sequence.t_pi_s",
            "T_pi must be >= 0 (0 selects detection)");
    require(sequence.t_pi_s > 0.0 || positive(sequence.search_window_s),
            "sequence.search_window_s", "T_pi search window must be positive");
    require(positive(sequence.search_cadence_s), "sequence.search_cadence_s",
            "T_pi search cadence must be positive");
    require(sequence.n_bounces >= 1, "sequence.n_bounces", "n_bounces must be >= 1");
    require(std::isfinite(sequence.readout_phi_rad), "sequence.readout_phi_rad", "must be finite");
    if (sequence.readout_theta_rad)
        require(*sequence.readout_theta_rad >= 0.0 &&
                    *sequence.readout_theta_rad < 2 * std::numbers::pi,
                "sequence.readout_theta_rad", "readout theta must lie in [0, 2pi)");
    if (sequence.kind == "explicit") {
        PulseSequence seq{sequence.pulses, sequence.duration_s};
        seq.validate();
    }
    require(positive(snapshots.cadence_s), "snapshots.cadence_s", "cadence must be positive");
    require(ensemble.n_trajectories >= 2, "ensemble.n_trajectories",
            "need at least two trajectories");
    require(observables.theta_points >= 1, "observables.theta_points", "must be >= 1");
    require(observables.theta_max_rad > observables.theta_min_rad, "observables.theta_max_rad",
            "theta range must be increasing");
    for (double l : twomode.lambda_values)
        require(std::isfinite(l), "twomode.lambda_values", "lambda values must be finite");
    for (double n : twomode.n_atoms_values)
        require(positive(n), "twomode.n_atoms_values", "atom numbers must be positive");
    require(positive(lambda.imbalance_scale), "lambda.imbalance_scale", "must be positive");
    require(sweep.parameter == "omega_r" || sweep.parameter == "theta" ||
                sweep.parameter == "n_bounces" || sweep.parameter == "n_atoms",
            "sweep.parameter", "sweep.parameter must be omega_r, theta, n_bounces or n_atoms");
    require(sweep.run == "tw" || sweep.run == "lambda-est" || sweep.run == "gpe", "sweep.run",
            "sweep.run must be tw, lambda-est or gpe");
    require(output.workers >= 1, "output.workers", "need at least one worker");
}

// JSON mapping. Unknown keys are rejected so typos surface as errors.

inline void to_json(json &j, const PulseSpec &p) {
    j = {{"theta_rad", p.theta}, {"phi_rad", p.phi}, {"time_s", p.time}};
}
inline void from_json(const json &j, PulseSpec &p) {
    p.theta = j.at("theta_rad").get<double>();
    p.phi = j.value("phi_rad", 0.0);
    p.time = j.at("time_s").get<double>();
}

inline json to_json(const ExperimentConfig &c) {
    json seq = {{"kind", c.sequence.kind},
                {"t_pi_s", c.sequence.t_pi_s},
                {"search_window_s", c.sequence.search_window_s},
                {"search_cadence_s", c.sequence.search_cadence_s},
                {"n_bounces", c.sequence.n_bounces},
                {"readout_phi_rad", c.sequence.readout_phi_rad},
                {"pulses", c.sequence.pulses},
                {"duration_s", c.sequence.duration_s}};
    seq["readout_theta_rad"] =
        c.sequence.readout_theta_rad ? json(*c.sequence.readout_theta_rad) : json(nullptr);
    return {
        {"name", c.name},
        {"mode", to_string(c.mode)},
        {"notes", c.notes},
        {"physics",
         {{"mass_kg", c.physics.mass_kg},
          {"a11_bohr", c.physics.a11_bohr},
          {"a22_bohr", c.physics.a22_bohr},
          {"a12_bohr", c.physics.a12_bohr},
          {"omega_x_rad_per_s", c.physics.omega_rad_per_s[0]},
          {"omega_y_rad_per_s", c.physics.omega_rad_per_s[1]},
          {"omega_z_rad_per_s", c.physics.omega_rad_per_s[2]},
          {"n_atoms", c.physics.n_atoms},
          {"detuning_rad_per_s", c.physics.detuning_rad_per_s}}},
        {"grid",
         {{"geometry", to_string(c.grid.geometry)},
          {"points", c.grid.points},
          {"lengths_m", c.grid.lengths_m}}},
        {"integrator", {{"dt_s", c.integrator.dt_s}}},
        {"ground_state",
         {{"imag_dt_s", c.ground_state.imag_dt_s},
          {"tolerance", c.ground_state.tolerance},
          {"max_iterations", c.ground_state.max_iterations}}},
        {"sequence", seq},
        {"snapshots",
         {{"cadence_s", c.snapshots.cadence_s}, {"write_fields", c.snapshots.write_fields}}},
        {"ensemble",
         {{"n_trajectories", c.ensemble.n_trajectories},
          {"master_seed", c.ensemble.master_seed},
          {"debug_trajectory_snapshots", c.ensemble.debug_trajectory_snapshots}}},
        {"observables",
         {{"theta_points", c.observables.theta_points},
          {"theta_min_rad", c.observables.theta_min_rad},
          {"theta_max_rad", c.observables.theta_max_rad}}},
        {"twomode",
         {{"lambda_values", c.twomode.lambda_values},
          {"n_atoms_values", c.twomode.n_atoms_values}}},
        {"lambda",
         {{"imbalance_scale", c.lambda.imbalance_scale}, {"with_tw", c.lambda.with_tw}}},
        {"sweep",
         {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}, {"run", c.sweep.run}}},
        {"output", {{"dir", c.output.dir}, {"workers", c.output.workers}}},
    };
}

namespace detail {

/// Reads the keys of `j` into `fields`, rejecting anything unexpected.
class Reader {
  public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            config_fail(path_.empty() ? "config" : path_, "expected an object at '" + path_ + "'");
    }

    template <class T> void get(const char *key, T &out) {
        seen_.emplace_back(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return;
        try {
            out = it->template get<T>();
        } catch (const json::exception &e) {
            config_fail(full(key), "bad value for '" + full(key) + "': " + e.what());
        }
    }

    Reader sub(const char *key) {
        seen_.emplace_back(key);
        auto it = j_.find(key);
        static const json empty = json::object();
        return Reader(it == j_.end() ? empty : *it, full(key));
    }

    [[nodiscard]] bool has(const char *key) const { return j_.contains(key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                config_fail(full(it.key()), "unknown configuration key '" + full(it.key()) + "'");
    }

    [[nodiscard]] std::string full(const std::string &key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

  private:
    const json &j_;
    std::string path_;
    std::vector<std::string> seen_;
};

} // namespace detail

inline ExperimentConfig config_from_json(const json &j) {
    ExperimentConfig c;
    detail::Reader r(j, "");
    r.get("name", c.name);
    r.get("notes", c.notes);
    std::string mode{to_string(c.mode)};
    r.get("mode", mode);
    c.mode = run_mode_from_string(mode);
    {
        auto p = r.sub("physics");
        p.get("mass_kg", c.physics.mass_kg);
        p.get("a11_bohr", c.physics.a11_bohr);
        p.get("a22_bohr", c.physics.a22_bohr);
        p.get("a12_bohr", c.physics.a12_bohr);
        json omega_r = nullptr;
        p.get("omega_r_rad_per_s", omega_r);
        if (!omega_r.is_null()) {
            if (!omega_r.is_number())
                detail::config_fail("physics.omega", "omega_r_rad_per_s must be a number");
            if (p.has("omega_x_rad_per_s") || p.has("omega_y_rad_per_s") ||
                p.has("omega_z_rad_per_s"))
                detail::config_fail("physics.omega",
                                    "give either omega_r_rad_per_s or per-axis frequencies");
            const double w = omega_r.get<double>();
            c.physics.omega_rad_per_s = {w, w, w};
        }
        p.get("omega_x_rad_per_s", c.physics.omega_rad_per_s[0]);
        p.get("omega_y_rad_per_s", c.physics.omega_rad_per_s[1]);
        p.get("omega_z_rad_per_s", c.physics.omega_rad_per_s[2]);
        p.get("n_atoms", c.physics.n_atoms);
        p.get("detuning_rad_per_s", c.physics.detuning_rad_per_s);
        p.finish();
    }
    {
        auto g = r.sub("grid");
        std::string geom{to_string(c.grid.geometry)};
        g.get("geometry", geom);
        try {
            c.grid.geometry = geometry_from_string(geom);
        } catch (const ConfigError &e) {
            detail::config_fail("grid.geometry", e.what());
        }
        g.get("points", c.grid.points);
        g.get("lengths_m", c.grid.lengths_m);
        g.finish();
    }
    {
        auto s = r.sub("integrator");
        s.get("dt_s", c.integrator.dt_s);
        s.finish();
    }
    {
        auto s = r.sub("ground_state");
        s.get("imag_dt_s", c.ground_state.imag_dt_s);
        s.get("tolerance", c.ground_state.tolerance);
        s.get("max_iterations", c.ground_state.max_iterations);
        s.finish();
    }
    {
        auto s = r.sub("sequence");
        s.get("kind", c.sequence.kind);
        s.get("t_pi_s", c.sequence.t_pi_s);
        s.get("search_window_s", c.sequence.search_window_s);
        s.get("search_cadence_s", c.sequence.search_cadence_s);
        s.get("n_bounces", c.sequence.n_bounces);
        s.get("readout_phi_rad", c.sequence.readout_phi_rad);
        json theta = nullptr;
        s.get("readout_theta_rad", theta);
        if (!theta.is_null()) {
            if (!theta.is_number())
                detail::config_fail("sequence.readout_theta_rad", "readout theta must be a number");
            c.sequence.readout_theta_rad = theta.get<double>();
        }
        s.get("pulses", c.sequence.pulses);
        s.get("duration_s", c.sequence.duration_s);
        s.finish();
    }
    {
        auto s = r.sub("snapshots");
        s.get("cadence_s", c.snapshots.cadence_s);
        s.get("write_fields", c.snapshots.write_fields);
        s.finish();
    }
    {
        auto s = r.sub("ensemble");
        s.get("n_trajectories", c.ensemble.n_trajectories);
        s.get("master_seed", c.ensemble.master_seed);
        s.get("debug_trajectory_snapshots", c.ensemble.debug_trajectory_snapshots);
        s.finish();
    }
    {
        auto s = r.sub("observables");
        s.get("theta_points", c.observables.theta_points);
        s.get("theta_min_rad", c.observables.theta_min_rad);
        s.get("theta_max_rad", c.observables.theta_max_rad);
        s.finish();
    }
    {
        auto s = r.sub("twomode");
        s.get("lambda_values", c.twomode.lambda_values);
        s.get("n_atoms_values", c.twomode.n_atoms_values);
        s.finish();
    }
    {
        auto s = r.sub("lambda");
        s.get("imbalance_scale", c.lambda.imbalance_scale);
        s.get("with_tw", c.lambda.with_tw);
        s.finish();
    }
    {
        auto s = r.sub("sweep");
        s.get("parameter", c.sweep.parameter);
        s.get("values", c.sweep.values);
        s.get("run", c.sweep.run);
        s.finish();
    }
    {
        auto s = r.sub("output");
        s.get("dir", c.output.dir);
        s.get("workers", c.output.workers);
        s.finish();
    }
    r.finish();
    c.validate();
    return c;
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
inline void apply_override(json &doc, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override", "override must look like key=value: '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;
    json *node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty())
            throw ConfigError("override", "empty key in override '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key))
            (*node)[key] = json::object();
        node = &(*node)[key];
        if (!node->is_object())
            throw ConfigError("override", "'" + path.substr(0, dot) + "' is not a section");
        start = dot + 1;
    }
}

inline json load_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config.file", "cannot open config file " + path.string());
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error &e) {
        throw ConfigError("config.parse", path.string() + ": " + e.what());
    }
}

/// Canonical JSON of the fields that determine results (output location and
/// worker count excluded).
inline std::string canonical_config(const ExperimentConfig &c) {
    auto j = to_json(c);
    j.erase("output");
    return j.dump();
}

} // namespace bectwist
