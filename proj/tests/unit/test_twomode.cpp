// Two-mode Kerr model: closed forms against the Fock-basis oracle.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "bectwist/twomode/chi.hpp"
#include "bectwist/twomode/fock_oracle.hpp"
#include "bectwist/twomode/kerr.hpp"

using namespace bectwist;
using namespace bectwist::twomode;

namespace {

constexpr double pi = std::numbers::pi;

std::size_t nmax(double n) { return FockState::suggested_n_max(n); }

void expect_close(complex x, complex y, double tol, const char *what) {
    EXPECT_LT(std::abs(x - y), tol * std::max(1.0, std::abs(y))) << what << " " << x << " vs " << y;
}

void expect_table_close(const TwistMoments &x, const TwistMoments &y, double tol) {
    expect_close(x.ada, y.ada, tol, "ada");
    expect_close(x.bdb, y.bdb, tol, "bdb");
    expect_close(x.adb, y.adb, tol, "adb");
    expect_close(x.ada_bdb, y.ada_bdb, tol, "ada_bdb");
    expect_close(x.ada_ada, y.ada_ada, tol, "ada_ada");
    expect_close(x.bdb_bdb, y.bdb_bdb, tol, "bdb_bdb");
    expect_close(x.ada_a_bd, y.ada_a_bd, tol, "ada_a_bd");
    expect_close(x.a_bd_bd_b, y.a_bd_bd_b, tol, "a_bd_bd_b");
    expect_close(x.adad_bb, y.adad_bb, tol, "adad_bb");
}

} // namespace

TEST(TwistMoments, UntwistedCrossMomentIsCoherent) {
    const auto s = TwoModeState::after_half_pi(37.0, 0.0);
    const auto t = twist_moments(s);
    EXPECT_EQ(t.adb, std::conj(s.alpha) * s.beta);
    EXPECT_NEAR(s.n_atoms(), 37.0, 1e-12);
}

TEST(TwistMoments, NumberSquaredIsIndependentOfTwist) {
    for (double lam : {0.0, 1e-3, 0.05, 0.7}) {
        const TwoModeState s{{2.0, 1.0}, {0.5, -3.0}, lam, lam};
        const double na = std::norm(s.alpha);
        EXPECT_DOUBLE_EQ(twist_moments(s).ada_ada.real(), na * na + na);
    }
}

TEST(TwistMoments, MatchesFockOracleAtTwentyAtoms) {
    const auto s = TwoModeState::after_half_pi(20.0, 0.05);
    expect_table_close(twist_moments(s), fock_oracle(s, nmax(20.0)), 1e-10);
}

TEST(TwistMoments, MatchesFockOracleForGeneralAmplitudes) {
    const TwoModeState s{std::polar(3.0, 0.4), std::polar(2.0, -1.1), 0.03, 0.03};
    expect_table_close(twist_moments(s), fock_oracle(s, nmax(13.0)), 1e-10);
}

TEST(TwistMoments, ConjugationOfCrossMoment) {
    const auto s = TwoModeState::after_half_pi(20.0, 0.05);
    const FockState f(s, nmax(20.0));
    const complex bda = f.expect(f.bd(f.a(f.amplitudes())));
    expect_close(bda, std::conj(twist_moments(s).adb), 1e-10, "b^+a");
}

TEST(FockOracle, UntwistedStateHasCoherentMoments) {
    const TwoModeState s{std::polar(2.0, 0.3), std::polar(1.5, 2.0), 0.0, 0.0};
    const auto t = fock_oracle(s, nmax(6.25));
    const double na = 4.0, nb = 2.25;
    expect_close(t.ada, na, 1e-12, "ada");
    expect_close(t.adb, std::conj(s.alpha) * s.beta, 1e-12, "adb");
    expect_close(t.ada_bdb, na * nb, 1e-12, "ada_bdb");
    expect_close(t.adad_bb, std::pow(std::conj(s.alpha), 2) * std::pow(s.beta, 2), 1e-12, "adad_bb");
    EXPECT_NEAR(fock_variance(s, 0.3, pi / 2, nmax(6.25)), 1.0, 1e-12);
}

TEST(FockOracle, RejectsInsufficientTruncation) {
    const auto s = TwoModeState::after_half_pi(50.0, 0.0);
    try {
        FockState f(s, 30);
        FAIL() << "expected truncation error";
    } catch (const ConfigError &e) {
        EXPECT_EQ(e.code(), "fock.truncation");
    }
}

TEST(Variance, ClosedFormMatchesOracleOnGrid) {
    for (double n : {5.0, 20.0, 50.0})
        for (double lam : {0.0, 1e-3, 0.05})
            for (double th : {0.0, 0.1 * pi, 0.5 * pi}) {
                const auto s = TwoModeState::after_half_pi(n, lam);
                EXPECT_NEAR(two_mode_variance(n, lam, th), fock_variance(s, th, pi / 2, nmax(n)), 1e-9)
                    << n << " " << lam << " " << th;
            }
}

TEST(Variance, ClosedFormEqualsAssemblyFromMoments) {
    for (double n : {10.0, 1e3, 1.5e5})
        for (double lam : {1e-6, 1e-4, 3e-3})
            for (double th = -1.5; th < 1.6; th += 0.25) {
                const auto t = twist_moments(TwoModeState::after_half_pi(n, lam));
                const double v = two_mode_variance(n, lam, th);
                EXPECT_NEAR(variance_from_moments(t, th, pi / 2), v, 1e-9 * std::max(1.0, n * v))
                    << n << " " << lam << " " << th;
            }
}

TEST(Variance, MomentAssemblyMatchesOracleAtGeneralPhase) {
    const auto s = TwoModeState::after_half_pi(20.0, 0.02);
    const auto t = fock_oracle(s, nmax(20.0));
    for (double phi : {0.0, 0.4, pi / 2, 2.5})
        for (double th : {0.2, 1.0, 2.0})
            EXPECT_NEAR(variance_from_moments(t, th, phi), fock_variance(s, th, phi, nmax(20.0)), 1e-9);
}

TEST(Variance, TrivialLimitsAreExactlyOne) {
    for (int k = 0; k < 100; ++k) {
        const double th = -pi + 2 * pi * k / 99.0;
        EXPECT_NEAR(two_mode_variance(1.5e5, 0.0, th), 1.0, 1e-12);
        const double lam = 1e-7 * std::pow(1.2, k);
        EXPECT_NEAR(two_mode_variance(1.5e5, lam, 0.0), 1.0, 1e-12);
    }
}

TEST(Variance, PeriodicInThetaWithPeriodPi) {
    for (double lam : {1e-5, 3e-4})
        for (double th = 0.0; th < pi; th += 0.1) {
            const double v = two_mode_variance(1e5, lam, th);
            EXPECT_NEAR(v, two_mode_variance(1e5, lam, th + pi), 1e-12 * std::max(1.0, v));
        }
}

TEST(Variance, SmallLambdaFormWithinOnePercent) {
    for (double n : {100.0, 1e4, 1.5e5})
        for (double frac : {0.1, 0.5, 1.0}) {
            const double lam = frac * std::sqrt(0.01 / n);
            for (double th = -1.5; th < 1.6; th += 0.05) {
                const double v = two_mode_variance(n, lam, th);
                EXPECT_NEAR(two_mode_variance_small_lambda(n, lam, th) / v, 1.0, 0.01)
                    << n << " " << lam << " " << th;
            }
        }
}

TEST(Variance, RejectsNonPositiveAtomNumber) {
    EXPECT_THROW(two_mode_variance(0.0, 1e-3, 0.1), ConfigError);
}

TEST(JxVariance, OracleMatchesClosedFormAndExpansion) {
    for (double n : {5.0, 20.0, 50.0})
        for (double lam : {0.0, 1e-3, 0.1 / n}) {
            const auto s = TwoModeState::after_half_pi(n, lam);
            const double fock = fock_jx_variance(s, nmax(n));
            EXPECT_NEAR(fock / jx_variance(n, lam), 1.0, 1e-10);
            EXPECT_NEAR(fock / jx_variance_small_lambda(n, lam), 1.0, 0.01);
        }
}

TEST(Optimum, ThetaOptimumMatchesDenseScan) {
    for (double lam : {9.18e-6, 1e-4}) {
        const auto opt = optimal_theta(1.5e5, lam);
        double best = 1e9;
        for (int k = 0; k < 200000; ++k) {
            const double th = -pi / 2 + pi * k / 200000.0;
            best = std::min(best, two_mode_variance(1.5e5, lam, th));
        }
        EXPECT_LE(opt.v, best);
        EXPECT_NEAR(opt.v, best, 1e-4 * best);
        for (double d : {-1e-6, 1e-6})
            EXPECT_GT(two_mode_variance(1.5e5, lam, opt.theta + d), opt.v);
        EXPECT_NEAR(two_mode_variance(1.5e5, lam, opt.theta), opt.v, 1e-12);
        EXPECT_LT(opt.theta, 0.0);
    }
}

TEST(Optimum, AsymptoticFormsAtOneMillion) {
    const auto o = optimal_squeezing(1e6);
    EXPECT_NEAR(o.lambda_opt / 0.6e-4, 1.0, 0.25);
    EXPECT_NEAR(o.v_min / 1e-4, 1.0, 0.25);
    EXPECT_DOUBLE_EQ(o.lambda_asymptotic, lambda_opt_asymptotic(1e6));
}

TEST(Optimum, AsymptoticVarianceAtTenThousand) {
    const auto o = optimal_squeezing(1e4);
    EXPECT_NEAR(o.v_min / std::pow(1e4, -2.0 / 3.0), 1.0, 0.25);
}

TEST(Optimum, MinimumIsInterior) {
    for (double n : {1e3, 1e5}) {
        const auto o = optimal_squeezing(n);
        EXPECT_GT(optimal_theta(n, 0.5 * o.lambda_opt).v, o.v_min);
        EXPECT_GT(optimal_theta(n, 2.0 * o.lambda_opt).v, o.v_min);
    }
}

TEST(Optimum, RequiresAsymptoticRegime) { EXPECT_THROW(optimal_squeezing(50.0), ConfigError); }

namespace {

ChiTrace constant_trace(double aa, double bb, double ab, double t_end, int samples) {
    ChiTrace tr;
    for (int i = 0; i <= samples; ++i)
        tr.push(t_end * i / samples, aa, bb, ab);
    return tr;
}

} // namespace

TEST(ChiIntegrals, ConstantRatesGiveExactProducts) {
    auto tr = constant_trace(30.0, 30.0, 25.0, 2e-2, 7);
    tr.set_echo_windows(1e-2);
    const auto r = chi_integrals(tr);
    EXPECT_DOUBLE_EQ(r.lambda1, 5.0 * 2e-2);
    EXPECT_DOUBLE_EQ(r.lambda2, 5.0 * 2e-2);
    EXPECT_DOUBLE_EQ(r.lambda, 0.1);
    EXPECT_FALSE(r.asymmetric);
}

TEST(ChiIntegrals, EchoExchangesRolesAfterPiPulse) {
    // Static but unequal rates: the pi pulse swaps which component holds
    // each mode, so both lambdas collect one window of each difference.
    auto tr = constant_trace(30.0, 20.0, 25.0, 2e-2, 4);
    tr.set_echo_windows(1e-2);
    const auto r = chi_integrals(tr);
    EXPECT_NEAR(r.lambda1, 0.0, 1e-15);
    EXPECT_NEAR(r.lambda2, 0.0, 1e-15);
    tr.windows = {{0.0, 2e-2, false}};
    const auto bare = chi_integrals(tr);
    EXPECT_NEAR(bare.lambda1, 0.1, 1e-15);
    EXPECT_NEAR(bare.lambda2, -0.1, 1e-15);
    EXPECT_NEAR(bare.lambda, 0.0, 1e-15);
}

TEST(ChiIntegrals, SymmetricScatteringGivesZero) {
    auto tr = constant_trace(12.0, 12.0, 12.0, 1e-2, 10);
    tr.set_echo_windows(5e-3);
    const auto r = chi_integrals(tr);
    EXPECT_EQ(r.lambda, 0.0);
    EXPECT_FALSE(r.asymmetric);
}

TEST(ChiIntegrals, TrapezoidOnLinearRatesIsExact) {
    ChiTrace tr;
    for (int i = 0; i <= 10; ++i) {
        const double t = 1e-3 * i;
        tr.push(t, 100.0 + 1e4 * t, 50.0, 40.0);
    }
    tr.windows = {{0.0, 1e-2, false}};
    // int_0^T (60 + 1e4 t) dt = 0.6 + 0.5
    EXPECT_NEAR(chi_integrals(tr).lambda1, 0.6 + 0.5, 1e-14);
    // A window ending between samples interpolates linearly.
    tr.windows = {{0.0, 2.5e-3, false}};
    EXPECT_NEAR(chi_integrals(tr).lambda1, 60.0 * 2.5e-3 + 0.5e4 * 2.5e-3 * 2.5e-3, 1e-14);
}

TEST(ChiIntegrals, FlagsAsymmetry) {
    auto tr = constant_trace(30.0, 26.0, 25.0, 1e-2, 4);
    tr.windows = {{0.0, 1e-2, false}};
    const auto r = chi_integrals(tr);
    EXPECT_TRUE(r.asymmetric);
    EXPECT_DOUBLE_EQ(r.lambda, 0.5 * (r.lambda1 + r.lambda2));
}

TEST(ChiIntegrals, CoverageAndOrderingErrors) {
    auto tr = constant_trace(30.0, 30.0, 25.0, 1e-2, 4);
    tr.set_echo_windows(1e-2);
    try {
        chi_integrals(tr);
        FAIL() << "expected coverage error";
    } catch (const ConfigError &e) {
        EXPECT_EQ(e.code(), "chi.coverage");
    }
    tr.windows.clear();
    EXPECT_THROW(chi_integrals(tr), ConfigError);
    tr.set_echo_windows(5e-3);
    std::swap(tr.time[1], tr.time[2]);
    EXPECT_THROW(chi_integrals(tr), ConfigError);
}

TEST(ChiIntegrals, CsvRoundTrip) {
    ChiTrace tr;
    for (int i = 0; i < 5; ++i)
        tr.push(1e-3 * i / 3.0, 10.0 / (i + 1), std::sqrt(2.0) * i, 1.0 / 7.0);
    const auto path = std::filesystem::temp_directory_path() / "bectwist_chi_roundtrip.csv";
    write_chi_csv(path, tr);
    const auto back = read_chi_csv(path);
    EXPECT_EQ(back.time, tr.time);
    EXPECT_EQ(back.chi_aa, tr.chi_aa);
    EXPECT_EQ(back.chi_bb, tr.chi_bb);
    EXPECT_EQ(back.chi_ab, tr.chi_ab);
    std::filesystem::remove(path);
}
