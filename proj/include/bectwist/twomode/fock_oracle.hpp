#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bectwist/core/errors.hpp"
#include "bectwist/twomode/kerr.hpp"

namespace bectwist::twomode {

/**
 * Brute-force two-mode state on the truncated Fock basis |n1, n2>,
 * 0 <= n1, n2 <= n_max:
 *   C_{n1,n2} = e^{-(|a|^2+|b|^2)/2} a^{n1} b^{n2} / sqrt(n1! n2!) e^{-i Phi},
 *   Phi = lambda1 n1 (n1 - 1) + lambda2 n2 (n2 - 1).
 * Operators act by direct index arithmetic; amplitudes pushed beyond n_max
 * are dropped, which is harmless once the tail weight is negligible.
 */
class FockState {
  public:
    static constexpr double default_tail_tolerance = 1e-14;

    FockState(const TwoModeState &s, std::size_t n_max,
              double tail_tolerance = default_tail_tolerance)
        : n_max_(n_max), dim_(n_max + 1), amp_(dim_ * dim_) {
        const double na = std::norm(s.alpha), nb = std::norm(s.beta);
        const double la = na > 0 ? std::log(std::sqrt(na)) : 0.0;
        const double lb = nb > 0 ? std::log(std::sqrt(nb)) : 0.0;
        for (std::size_t n1 = 0; n1 < dim_; ++n1) {
            for (std::size_t n2 = 0; n2 < dim_; ++n2) {
                const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
                if ((na == 0.0 && n1 > 0) || (nb == 0.0 && n2 > 0))
                    continue;
                const double logmag = -0.5 * (na + nb) + d1 * la + d2 * lb -
                                      0.5 * (std::lgamma(d1 + 1.0) + std::lgamma(d2 + 1.0));
                const double phase = d1 * std::arg(s.alpha) + d2 * std::arg(s.beta) -
                                     (s.lambda1 * d1 * (d1 - 1.0) + s.lambda2 * d2 * (d2 - 1.0));
                amp_[idx(n1, n2)] = std::polar(std::exp(logmag), phase);
            }
        }
        // Poisson tails P(n > n_max) of each mode, free of summation round-off.
        const double nm1 = static_cast<double>(n_max) + 1.0;
        const double t1 = na > 0 ? boost::math::gamma_p(nm1, na) : 0.0;
        const double t2 = nb > 0 ? boost::math::gamma_p(nm1, nb) : 0.0;
        tail_ = t1 + t2 - t1 * t2;
        if (tail_ > tail_tolerance)
            throw ConfigError("fock.truncation",
                              "Fock truncation n_max=" + std::to_string(n_max) +
                                  " leaves tail weight " + std::to_string(tail_) +
                                  " (tolerance " + std::to_string(tail_tolerance) + ")");
    }

    /// n_max ~ N + 10 sqrt(N), enough for tail weights far below 1e-14.
    static std::size_t suggested_n_max(double n_atoms) {
        return static_cast<std::size_t>(std::ceil(n_atoms + 10.0 * std::sqrt(n_atoms) + 10.0));
    }

    using Vector = std::vector<complex>;

    [[nodiscard]] const Vector &amplitudes() const noexcept { return amp_; }
    [[nodiscard]] double tail_weight() const noexcept { return tail_; }
    [[nodiscard]] std::size_t n_max() const noexcept { return n_max_; }

    // Single-mode ladder operators acting on a state vector.
    [[nodiscard]] Vector a(const Vector &v) const { return lower(v, true); }
    [[nodiscard]] Vector b(const Vector &v) const { return lower(v, false); }
    [[nodiscard]] Vector ad(const Vector &v) const { return raise(v, true); }
    [[nodiscard]] Vector bd(const Vector &v) const { return raise(v, false); }

    [[nodiscard]] complex inner(const Vector &x, const Vector &y) const {
        complex s{0.0, 0.0};
        for (std::size_t i = 0; i < x.size(); ++i)
            s += std::conj(x[i]) * y[i];
        return s;
    }
    [[nodiscard]] complex expect(const Vector &op_psi) const { return inner(amp_, op_psi); }

  private:
    [[nodiscard]] std::size_t idx(std::size_t n1, std::size_t n2) const { return n1 * dim_ + n2; }

    [[nodiscard]] Vector lower(const Vector &v, bool first) const {
        Vector out(v.size());
        for (std::size_t n1 = 0; n1 < dim_; ++n1)
            for (std::size_t n2 = 0; n2 < dim_; ++n2) {
                const std::size_t n = first ? n1 : n2;
                if (n == 0)
                    continue;
                const auto target = first ? idx(n1 - 1, n2) : idx(n1, n2 - 1);
                out[target] += std::sqrt(static_cast<double>(n)) * v[idx(n1, n2)];
            }
        return out;
    }

    [[nodiscard]] Vector raise(const Vector &v, bool first) const {
        Vector out(v.size());
        for (std::size_t n1 = 0; n1 < dim_; ++n1)
            for (std::size_t n2 = 0; n2 < dim_; ++n2) {
                const std::size_t n = first ? n1 : n2;
                if (n + 1 > n_max_)
                    continue;
                const auto target = first ? idx(n1 + 1, n2) : idx(n1, n2 + 1);
                out[target] += std::sqrt(static_cast<double>(n + 1)) * v[idx(n1, n2)];
            }
        return out;
    }

    std::size_t n_max_;
    std::size_t dim_;
    Vector amp_;
    double tail_ = 0.0;
};

/// Twist moments by direct summation on the Fock basis.
inline TwistMoments fock_oracle(const TwoModeState &s, std::size_t n_max) {
    const FockState f(s, n_max);
    const auto &psi = f.amplitudes();
    TwistMoments t;
    t.ada = f.expect(f.ad(f.a(psi)));
    t.bdb = f.expect(f.bd(f.b(psi)));
    t.adb = f.expect(f.ad(f.b(psi)));
    t.ada_bdb = f.expect(f.ad(f.a(f.bd(f.b(psi)))));
    t.ada_ada = f.expect(f.ad(f.a(f.ad(f.a(psi)))));
    t.bdb_bdb = f.expect(f.bd(f.b(f.bd(f.b(psi)))));
    t.ada_a_bd = f.expect(f.ad(f.a(f.a(f.bd(psi)))));
    t.a_bd_bd_b = f.expect(f.a(f.bd(f.bd(f.b(psi)))));
    t.adad_bb = f.expect(f.ad(f.ad(f.b(f.b(psi)))));
    return t;
}

/**
 * v(N_a - N_b) after the final rotation (theta, phi) computed as
 * (||D psi||^2 - <psi|D psi>^2) / <N_a + N_b> with D applied directly.
 */
inline double fock_variance(const TwoModeState &s, double theta, double phi, std::size_t n_max) {
    const FockState f(s, n_max);
    const auto &psi = f.amplitudes();
    const complex i{0.0, 1.0};
    const double c = std::cos(theta), sn = std::sin(theta);
    const auto na = f.ad(f.a(psi));
    const auto nb = f.bd(f.b(psi));
    const auto bda = f.bd(f.a(psi));
    const auto adb = f.ad(f.b(psi));
    FockState::Vector d(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k)
        d[k] = c * (na[k] - nb[k]) +
               i * sn * (bda[k] * std::exp(-i * phi) - adb[k] * std::exp(i * phi));
    const double mean = f.inner(psi, d).real();
    const double second = f.inner(d, d).real();
    const double total = (f.expect(na) + f.expect(nb)).real();
    return (second - mean * mean) / total;
}

/// V(a b^+ + b a^+) by direct summation.
inline double fock_jx_variance(const TwoModeState &s, std::size_t n_max) {
    const FockState f(s, n_max);
    const auto &psi = f.amplitudes();
    const auto bda = f.bd(f.a(psi));
    const auto adb = f.ad(f.b(psi));
    FockState::Vector x(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k)
        x[k] = bda[k] + adb[k];
    const double mean = f.inner(psi, x).real();
    return f.inner(x, x).real() - mean * mean;
}

} // namespace bectwist::twomode
