#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>

#include <boost/math/tools/minima.hpp>

#include "bectwist/core/constants.hpp"
#include "bectwist/core/errors.hpp"

namespace bectwist::twomode {

using complex = std::complex<double>;

/**
 * Two-mode coherent state |alpha, beta> after the Kerr (one-axis twisting)
 * evolution with effective squeezing parameters lambda1, lambda2.
 */
struct TwoModeState {
    complex alpha;
    complex beta;
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    [[nodiscard]] double n_atoms() const { return std::norm(alpha) + std::norm(beta); }
    [[nodiscard]] double lambda() const { return 0.5 * (lambda1 + lambda2); }

    /// State after a pi/2 pulse on |alpha0, 0>: alpha = alpha0/sqrt2, beta = -i alpha0/sqrt2.
    static TwoModeState after_half_pi(double n_atoms, double lambda) {
        const double a = std::sqrt(0.5 * n_atoms);
        return {complex{a, 0.0}, complex{0.0, -a}, lambda, lambda};
    }
};

/// Expectation values listed for the twisted coherent state (lambda1 = lambda2).
struct TwistMoments {
    complex ada;      // a^+ a
    complex bdb;      // b^+ b
    complex adb;      // a^+ b
    complex ada_bdb;  // a^+ a b^+ b
    complex ada_ada;  // a^+ a a^+ a
    complex bdb_bdb;  // b^+ b b^+ b
    complex ada_a_bd; // a^+ a a b^+
    complex a_bd_bd_b; // a b^+ b^+ b
    complex adad_bb;  // a^+ a^+ b b
};

inline TwistMoments twist_moments(const TwoModeState &s) {
    const double lam = s.lambda();
    const double na = std::norm(s.alpha), nb = std::norm(s.beta);
    const complex i{0.0, 1.0};
    auto kerr = [&](double sa, double sb) {
        // exp[|a|^2 (e^{i sa} - 1) + |b|^2 (e^{i sb} - 1)]
        return std::exp(na * (std::exp(i * sa) - 1.0) + nb * (std::exp(i * sb) - 1.0));
    };
    const complex ab_star = s.alpha * std::conj(s.beta);
    TwistMoments t;
    t.ada = na;
    t.bdb = nb;
    t.adb = std::conj(s.alpha) * s.beta * kerr(2.0 * lam, -2.0 * lam);
    t.ada_bdb = na * nb;
    t.ada_ada = na * na + na;
    t.bdb_bdb = nb * nb + nb;
    t.ada_a_bd = ab_star * na * std::exp(-2.0 * i * lam) * kerr(-2.0 * lam, 2.0 * lam);
    t.a_bd_bd_b = ab_star * nb * std::exp(2.0 * i * lam) * kerr(-2.0 * lam, 2.0 * lam);
    // No e^{2 i lambda} prefactor: the phase difference of |n1+2, n2-2> and
    // |n1, n2> is 4 lambda (n1 - n2 + 2) exactly.
    t.adad_bb = std::pow(std::conj(s.alpha), 2) * std::pow(s.beta, 2) * kerr(4.0 * lam, -4.0 * lam);
    return t;
}

/**
 * v(N_a - N_b) after a final rotation (theta, phi), assembled from the
 * Twist moments and their Hermitian conjugates. D = cos(theta) (a^+a - b^+b)
 *   + i sin(theta) (a b^+ e^{-i phi} - b a^+ e^{i phi}).
 */
inline double variance_from_moments(const TwistMoments &t, double theta, double phi) {
    const complex i{0.0, 1.0};
    const double c = std::cos(theta), s = std::sin(theta);
    const complex e = std::exp(i * phi);
    // K = i (a b^+ e^{-i phi} - b a^+ e^{i phi}) = i (b^+a e^{-i phi} - a^+b e^{i phi})
    const complex bda = std::conj(t.adb);
    const double mean_z = (t.ada - t.bdb).real();
    const double mean_k = (i * (bda / e - t.adb * e)).real();
    const double z2 = (t.ada_ada + t.bdb_bdb - 2.0 * t.ada_bdb).real();
    // K^2 = -(b^+a)^2 e^{-2i phi} - (a^+b)^2 e^{2i phi} + b^+a a^+b + a^+b b^+a
    //     = -(...) + N_b (N_a + 1) + N_a (N_b + 1)
    const complex bdbd_aa = std::conj(t.adad_bb);
    const double k2 = (-bdbd_aa / (e * e) - t.adad_bb * e * e + 2.0 * t.ada_bdb + t.ada + t.bdb).real();
    // {Z, K} with Z = a^+a - b^+b. Using a^+a a b^+ = <ada_a_bd> etc:
    //   Z b^+a = (a^+a - b^+b) b^+a;  b^+a Z = b^+a (a^+a - b^+b)
    // Z K + K Z = i e^{-i phi} (Z b^+a + b^+a Z) - i e^{i phi} (Z a^+b + a^+b Z)
    // b^+a a^+a = a^+a a b^+ + b^+a,  a^+a b^+a = a^+a a b^+,
    // b^+b b^+a = a b^+ b^+ b + b^+a, b^+a b^+b = a b^+ b^+ b.
    const complex za_plus_az = 2.0 * t.ada_a_bd + bda - 2.0 * t.a_bd_bd_b - bda; // Z b^+a + b^+a Z
    const complex zk = i / e * za_plus_az + std::conj(i / e * za_plus_az);
    const double n = (t.ada + t.bdb).real();
    const double mean_d = c * mean_z + s * mean_k;
    const double mean_d2 = c * c * z2 + s * s * k2 + c * s * zk.real();
    return (mean_d2 - mean_d * mean_d) / n;
}

namespace detail {
/// Coefficients of v(theta) = 1 + P (1 - cos 2 theta) + C sin 2 theta at phi = pi/2,
/// evaluated without catastrophic cancellation.
inline std::pair<double, double> variance_coefficients(double n, double lambda) {
    const double x = -2.0 * n * std::pow(std::sin(2.0 * lambda), 2); // N (cos 4 lambda - 1)
    const double s1 = std::sin(lambda);
    const double p = -0.25 * n * std::expm1(x);
    const double c = n * std::sin(2.0 * lambda) * std::exp(-2.0 * n * s1 * s1);
    return {p, c};
}
} // namespace detail

/**
 * Closed-form v(N_a - N_b) at phi = pi/2 for the pi/2-split coherent state:
 *   1 + N/2 sin^2 theta (1 - e^{N (cos 4 lambda - 1)})
 *     + N e^{-2 N sin^2 lambda} sin 2 lambda sin 2 theta.
 * For lambda > 0 the squeezed quadrature lies at negative theta (mod pi).
 */
inline double two_mode_variance(double n_atoms, double lambda, double theta) {
    if (!(n_atoms > 0.0))
        throw ConfigError("two_mode_variance: N_t must be positive");
    const auto [p, c] = detail::variance_coefficients(n_atoms, lambda);
    const double s = std::sin(theta);
    return 1.0 + 2.0 * p * s * s + c * std::sin(2.0 * theta);
}

/// Small-lambda form of the closed expression.
inline double two_mode_variance_small_lambda(double n, double lambda, double theta) {
    const double s = std::sin(theta);
    return 1.0 + 0.5 * n * s * s * (1.0 - std::exp(-8.0 * lambda * lambda * n)) +
           2.0 * lambda * n * std::exp(-2.0 * lambda * lambda * n) * std::sin(2.0 * theta);
}

/// V(a b^+ + b a^+) = N + N^2/2 (1 - e^{N (cos 4 lambda - 1)}).
inline double jx_variance(double n, double lambda) {
    const double x = -2.0 * n * std::pow(std::sin(2.0 * lambda), 2);
    return n - 0.5 * n * n * std::expm1(x);
}

inline double jx_variance_small_lambda(double n, double lambda) {
    return n + 4.0 * lambda * lambda * n * n * n;
}

struct ThetaOptimum {
    double theta = 0.0;
    double v = 1.0;
};

/// Exact minimum over theta of the closed form (theta in (-pi/2, pi/2]).
inline ThetaOptimum optimal_theta(double n_atoms, double lambda) {
    const auto [p, c] = detail::variance_coefficients(n_atoms, lambda);
    const double h = std::hypot(p, c);
    if (h == 0.0)
        return {0.0, 1.0};
    return {0.5 * std::atan2(-c, p), 1.0 - c * c / (p + h)};
}

struct SqueezingOptimum {
    double lambda_opt = 0.0;
    double theta_opt = 0.0;
    double v_min = 1.0;
    // Asymptotic large-N estimates for comparison.
    double lambda_asymptotic = 0.0;
    double v_asymptotic = 0.0;
};

/// lambda_opt ~ 0.6 N^{-2/3}
inline double lambda_opt_asymptotic(double n) { return 0.6 * std::pow(n, -2.0 / 3.0); }
/// v_min ~ N^{-2/3}
inline double v_min_asymptotic(double n) { return std::pow(n, -2.0 / 3.0); }

/**
 * Minimises v over (lambda, theta): Brent's method on log lambda in
 * [1e-3, 1e2] x N^{-2/3}, with the exact theta minimum inside.
 */
inline SqueezingOptimum optimal_squeezing(double n_atoms) {
    if (!(n_atoms >= 100.0))
        throw ConfigError("optimal_squeezing: asymptotic regime needs N_t >= 100");
    const double scale = std::pow(n_atoms, -2.0 / 3.0);
    auto f = [&](double log_lambda) { return optimal_theta(n_atoms, std::exp(log_lambda)).v; };
    std::uintmax_t iters = 500;
    const auto [x, fx] = boost::math::tools::brent_find_minima(
        f, std::log(1e-3 * scale), std::log(1e2 * scale), 52, iters);
    if (iters >= 500)
        throw ConvergenceError("optimal_squeezing: optimiser did not converge");
    const double lam = std::exp(x);
    const auto th = optimal_theta(n_atoms, lam);
    return {lam, th.theta, fx, lambda_opt_asymptotic(n_atoms), v_min_asymptotic(n_atoms)};
}

} // namespace bectwist::twomode
