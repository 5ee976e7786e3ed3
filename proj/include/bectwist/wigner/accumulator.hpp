#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "bectwist/core/errors.hpp"
#include "bectwist/core/field.hpp"
#include "bectwist/observables/squeezing.hpp"

namespace bectwist {

/// Mode functionals of one trajectory at one scheduled time.
struct TrajectoryMoments {
    std::uint64_t index = 0;
    double n_a = 0.0;    // sum |psi_a|^2 dv
    double n_b = 0.0;    // sum |psi_b|^2 dv
    complex cross{};     // sum conj(psi_a) psi_b dv

    friend bool operator==(const TrajectoryMoments &, const TrajectoryMoments &) = default;
};

inline TrajectoryMoments measure(const FieldPair &f, std::uint64_t index) {
    return {index, f.a.norm(), f.b.norm(), overlap(f.a, f.b)};
}

/// Neumaier-compensated running sum.
class KahanSum {
  public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/**
 * Per-trajectory records of one scheduled time. Sums are always formed in
 * trajectory-index order, so merging accumulators in any grouping gives
 * bit-identical statistics.
 */
class MomentAccumulator {
  public:
    void add(const TrajectoryMoments &m) {
        auto pos = std::lower_bound(records_.begin(), records_.end(), m.index,
                                    [](const auto &r, std::uint64_t i) { return r.index < i; });
        if (pos != records_.end() && pos->index == m.index)
            throw Error("ensemble.duplicate",
                        "trajectory " + std::to_string(m.index) + " accumulated twice");
        records_.insert(pos, m);
    }

    void merge(const MomentAccumulator &other) {
        const auto mid = static_cast<std::ptrdiff_t>(records_.size());
        records_.insert(records_.end(), other.records_.begin(), other.records_.end());
        std::inplace_merge(records_.begin(), records_.begin() + mid, records_.end(),
                           [](const auto &x, const auto &y) { return x.index < y.index; });
        const auto dup = std::adjacent_find(records_.begin(), records_.end(),
                                            [](const auto &x, const auto &y) { return x.index == y.index; });
        if (dup != records_.end())
            throw Error("ensemble.duplicate",
                        "trajectory " + std::to_string(dup->index) + " accumulated twice");
    }

    [[nodiscard]] std::size_t count() const noexcept { return records_.size(); }
    [[nodiscard]] std::span<const TrajectoryMoments> records() const noexcept { return records_; }

    friend bool operator==(const MomentAccumulator &, const MomentAccumulator &) = default;

  private:
    std::vector<TrajectoryMoments> records_; // sorted by index, unique
};

/// Physical (normally ordered) moments recovered from Wigner averages.
struct CorrectedMoments {
    std::size_t trajectories = 0;
    double n_a = 0.0;
    double n_b = 0.0;
    double n_total = 0.0;
    double mean_d = 0.0;  // <N_a - N_b>
    double var_d = 0.0;   // V(N_a - N_b)
    double v = 0.0;
    double v_stderr = 0.0;
    complex cross{};      // <int psi_a^* psi_b>
    double q = 0.0;
    double q_stderr = 0.0;
    double jx = 0.0;      // <Re int psi_a^* psi_b>
    double var_jx = 0.0;
    double var_jx_stderr = 0.0;
};

namespace detail {

/// Wigner sums over a subset (all, or all but one record).
struct WignerSums {
    double n = 0.0;
    double na = 0.0, nb = 0.0, d = 0.0, d2 = 0.0, s = 0.0;
    double cre = 0.0, cim = 0.0, jx2 = 0.0;
};

struct CorrectedScalars {
    double na, nb, total, mean_d, var_d, v, q, jx, var_jx;
    complex cross;
};

/**
 * Symmetric-ordering corrections with M modes per component:
 *   <N_j> = W(N_j) - M/2,  V(D) = V_W(D) - M/2,  <(Re C)^2> = W - M/8,
 * and no correction for <C>. D is the (possibly rotated) number difference.
 */
inline CorrectedScalars correct(const WignerSums &w, double modes) {
    CorrectedScalars c{};
    const double inv = 1.0 / w.n;
    c.na = w.na * inv - 0.5 * modes;
    c.nb = w.nb * inv - 0.5 * modes;
    c.total = w.s * inv - modes;
    c.mean_d = w.d * inv;
    // Unbiased sample variance of D, minus the vacuum contribution.
    const double vw = (w.d2 - w.d * w.d * inv) / (w.n - 1.0);
    c.var_d = vw - 0.5 * modes;
    c.v = c.total > 0.0 ? c.var_d / c.total : std::numeric_limits<double>::quiet_NaN();
    c.cross = {w.cre * inv, w.cim * inv};
    c.q = (c.na > 0.0 && c.nb > 0.0) ? std::abs(c.cross) / std::sqrt(c.na * c.nb)
                                     : std::numeric_limits<double>::quiet_NaN();
    c.jx = w.cre * inv;
    c.var_jx = (w.jx2 - w.cre * w.cre * inv) / (w.n - 1.0) - 0.125 * modes;
    return c;
}

} // namespace detail

/**
 * Corrected moments at a scheduled time. With `readout` set, the number
 * difference is evaluated after an instantaneous pulse (theta, phi):
 *   D' = cos(theta) D + 2 sin(theta) Im(e^{i phi} C),
 * which lets a whole theta sweep be read from one set of trajectories.
 * Standard errors are delete-one jackknife estimates.
 */
struct Readout {
    double theta = 0.0;
    double phi = 0.0;
};

inline CorrectedMoments corrected_moments(const MomentAccumulator &acc, std::size_t modes,
                                          const Readout *readout = nullptr) {
    const std::size_t n = acc.count();
    if (n < 2)
        throw UndefinedQuantity("corrected moments need at least two trajectories, got " +
                                std::to_string(n));
    const auto rs = acc.records();
    const double ct = readout ? std::cos(readout->theta) : 1.0;
    const double st = readout ? std::sin(readout->theta) : 0.0;
    const complex ph = readout ? std::polar(1.0, readout->phi) : complex{1.0, 0.0};

    std::vector<double> dvals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &r = rs[i];
        dvals[i] = ct * (r.n_a - r.n_b) + 2.0 * st * (ph * r.cross).imag();
    }
    auto sums = [&](std::size_t skip) {
        KahanSum na, nb, d, d2, s, cre, cim, jx2;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == skip)
                continue;
            const auto &r = rs[i];
            na.add(r.n_a);
            nb.add(r.n_b);
            s.add(r.n_a + r.n_b);
            d.add(dvals[i]);
            d2.add(dvals[i] * dvals[i]);
            cre.add(r.cross.real());
            cim.add(r.cross.imag());
            jx2.add(r.cross.real() * r.cross.real());
        }
        detail::WignerSums w;
        w.n = static_cast<double>(skip < n ? n - 1 : n);
        w.na = na.value();
        w.nb = nb.value();
        w.d = d.value();
        w.d2 = d2.value();
        w.s = s.value();
        w.cre = cre.value();
        w.cim = cim.value();
        w.jx2 = jx2.value();
        return w;
    };

    const double m = static_cast<double>(modes);
    const auto full = detail::correct(sums(n), m);
    CorrectedMoments out;
    out.trajectories = n;
    out.n_a = full.na;
    out.n_b = full.nb;
    out.n_total = full.total;
    out.mean_d = full.mean_d;
    out.var_d = full.var_d;
    out.v = full.v;
    out.cross = full.cross;
    out.q = full.q;
    out.jx = full.jx;
    out.var_jx = full.var_jx;

    if (n >= 3) {
        std::vector<detail::CorrectedScalars> loo(n);
        for (std::size_t i = 0; i < n; ++i)
            loo[i] = detail::correct(sums(i), m);
        auto se = [&](auto get, double value) {
            if (!std::isfinite(value))
                return std::numeric_limits<double>::quiet_NaN();
            return jackknife(n, value, [&](std::size_t i) { return get(loo[i]); }).stderr_;
        };
        out.v_stderr = se([](const auto &c) { return c.v; }, full.v);
        out.q_stderr = se([](const auto &c) { return c.q; }, full.q);
        out.var_jx_stderr = se([](const auto &c) { return c.var_jx; }, full.var_jx);
    } else {
        out.v_stderr = out.q_stderr = out.var_jx_stderr = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

/// Squeezing report for a readout pulse applied to the pre-readout moments.
/// Q is the visibility at the instant of the pulse.
inline SqueezingReport readout_report(const MomentAccumulator &acc, std::size_t modes,
                                      double theta, double phi, double n_atoms) {
    const Readout ro{theta, phi};
    const auto before = corrected_moments(acc, modes);
    const auto after = corrected_moments(acc, modes, &ro);
    return make_report(theta, after.v, after.v_stderr, before.q, before.q_stderr, n_atoms);
}

} // namespace bectwist
