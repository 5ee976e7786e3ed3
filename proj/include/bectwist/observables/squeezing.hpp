#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "bectwist/core/errors.hpp"
#include "bectwist/core/field.hpp"
#include "bectwist/observables/spin.hpp"

namespace bectwist {

/// Q = |<int psi_a^* psi_b>| / sqrt(<N_a><N_b>).
inline double overlap_Q(complex mean_cross_integral, double n_a, double n_b) {
    if (!(n_a > 0.0) || !(n_b > 0.0))
        throw UndefinedQuantity("overlap Q needs both populations > 0");
    return std::abs(mean_cross_integral) / std::sqrt(n_a * n_b);
}

inline double overlap_Q(const FieldPair &f) {
    return overlap_Q(overlap(f.a, f.b), f.a.norm(), f.b.norm());
}

/// v(N_a - N_b) = (<D^2> - <D>^2) / <N_a + N_b> with D = N_a - N_b.
inline double number_difference_variance(double mean_d2, double mean_d, double mean_total) {
    if (!(mean_total > 0.0))
        throw UndefinedQuantity("number-difference variance needs a positive population");
    return (mean_d2 - mean_d * mean_d) / mean_total;
}

/// Wineland parameter xi_s = sqrt(v) / Q.
inline double wineland_xi(double v, double q) {
    if (!(q > 0.0))
        throw UndefinedQuantity("visibility Q is zero");
    if (v < 0.0)
        throw UndefinedQuantity("negative number-difference variance");
    return std::sqrt(v) / q;
}

/// Same parameter from spin moments: sqrt(N_t V(Jz)) / J_perp.
inline double wineland_xi(double n_atoms, const SpinMoments &m) {
    const double jp = m.j_perp();
    if (!(jp > 0.0))
        throw UndefinedQuantity("transverse spin length is zero");
    return std::sqrt(n_atoms * m.variance(2)) / jp;
}

/// Interferometric phase sensitivity xi_s / sqrt(N_t).
inline double phase_sensitivity(double xi_s, double n_atoms) {
    if (!(n_atoms > 0.0))
        throw UndefinedQuantity("phase sensitivity needs N_t > 0");
    return xi_s / std::sqrt(n_atoms);
}

struct SqueezingReport {
    double theta = 0.0;
    double v = 0.0;
    double v_stderr = 0.0;
    double q = 0.0;
    double q_stderr = 0.0;
    double xi_s = std::numeric_limits<double>::quiet_NaN();
    double delta_phi = std::numeric_limits<double>::quiet_NaN();
};

/// Fills xi_s and delta_phi from v and Q where defined.
inline SqueezingReport make_report(double theta, double v, double v_se, double q, double q_se,
                                   double n_atoms) {
    SqueezingReport r{theta, v, v_se, q, q_se};
    if (q > 0.0 && v >= 0.0) {
        r.xi_s = wineland_xi(v, q);
        r.delta_phi = phase_sensitivity(r.xi_s, n_atoms);
    }
    return r;
}

struct JackknifeEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/**
 * Delete-one jackknife. `full` is the estimate on all n samples and
 * `leave_out(i)` the estimate without sample i.
 */
inline JackknifeEstimate jackknife(std::size_t n, double full,
                                   const std::function<double(std::size_t)> &leave_out) {
    if (n < 2)
        throw UndefinedQuantity("jackknife needs at least two samples");
    std::vector<double> loo(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = leave_out(i);
        mean += loo[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : loo)
        ss += (x - mean) * (x - mean);
    const double nn = static_cast<double>(n);
    return {full, std::sqrt((nn - 1.0) / nn * ss)};
}

} // namespace bectwist
