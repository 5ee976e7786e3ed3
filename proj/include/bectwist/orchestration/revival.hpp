#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bectwist/core/errors.hpp"
#include "bectwist/meanfield/gpe.hpp"
#include "bectwist/observables/squeezing.hpp"

namespace bectwist {

class NoRevivalError : public Error {
  public:
    explicit NoRevivalError(const std::string &what) : Error("no_revival", what) {}
};

struct Revival {
    double t_pi = 0.0;      // s, refined by a parabola through the peak samples
    double q = 0.0;         // Q at the sampled peak
    std::size_t index = 0;  // sample index of the peak
};

/**
 * First local maximum of Q(t) after its initial minimum. Plateaus resolve
 * to their earliest sample; dips shallower than `min_depth` do not count.
 */
inline Revival detect_T_pi(std::span<const double> t, std::span<const double> q,
                           double min_depth = 1e-9) {
    if (t.size() != q.size())
        throw ConfigError("revival.input", "time and Q series differ in length");
    const std::size_t n = q.size();
    std::size_t k = 1;
    // Descend to the first minimum.
    while (k < n && q[k] <= q[k - 1])
        ++k;
    const std::size_t i_min = k - 1;
    if (k >= n || q[0] - q[i_min] < min_depth)
        throw NoRevivalError("Q(t) shows no revival in the search window");
    // Climb to the first maximum.
    while (k < n && q[k] > q[k - 1])
        ++k;
    if (k >= n)
        throw NoRevivalError("Q(t) still rising at the end of the search window");
    const std::size_t i = k - 1;
    Revival r{t[i], q[i], i};
    if (i > 0 && i + 1 < n) {
        const double y0 = q[i - 1], y1 = q[i], y2 = q[i + 1];
        const double den = y0 - 2.0 * y1 + y2;
        const double h = 0.5 * (t[i + 1] - t[i - 1]);
        if (y1 > y0 && y1 > y2 && std::abs(t[i + 1] - t[i] - (t[i] - t[i - 1])) < 1e-9 * h)
            r.t_pi = t[i] + 0.5 * h * (y0 - y2) / den;
    }
    return r;
}

struct OverlapSeries {
    std::vector<double> time;
    std::vector<double> q;
    Revival revival;
};

/// Mean-field Q(t) after a pi/2 pulse, sampled every `cadence` up to `window`.
inline OverlapSeries overlap_series(const ModelPtr &model, const ComplexField &psi_g,
                                    double window, double cadence) {
    if (!(window > 0.0) || !(cadence > 0.0))
        throw ConfigError("revival.window", "search window and cadence must be positive");
    auto f = condensate_in_a(psi_g, model->params.n_atoms());
    apply_pulse(f, std::numbers::pi / 2, 0.0);
    OverlapSeries out;
    Propagator prop(model);
    const auto steps = static_cast<std::size_t>(std::ceil(window / cadence - 1e-9));
    out.time.push_back(0.0);
    out.q.push_back(overlap_Q(f));
    for (std::size_t s = 1; s <= steps; ++s) {
        prop.evolve(f, static_cast<double>(s) * cadence - f.time);
        out.time.push_back(f.time);
        out.q.push_back(overlap_Q(f));
    }
    out.revival = detect_T_pi(out.time, out.q);
    return out;
}

} // namespace bectwist
