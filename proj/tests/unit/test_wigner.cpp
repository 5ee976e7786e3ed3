// Truncated-Wigner sampling, ensemble execution and moment corrections.

#include <gtest/gtest.h>

#include <cmath>

#include "bectwist/wigner/ensemble.hpp"
#include "support.hpp"

using namespace bectwist;
using namespace bectwist::testing;

namespace {

constexpr double pi = std::numbers::pi;

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double> &x) {
    double m = 0.0;
    for (double v : x)
        m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x)
        ss += (v - m) * (v - m);
    const double n = static_cast<double>(x.size());
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

struct SmallSystem {
    PhysicsParams params = rb_params(1e4);
    TransformPtr tf = make_transform(make_grid(Geometry::SphericalRadial1D, {64}, {10e-6}));
    ComplexField psi = ground_state(params, tf).psi;

    [[nodiscard]] WignerEnsembleConfig ensemble(std::size_t n, PulseSequence seq,
                                                std::vector<double> schedule) const {
        WignerEnsembleConfig c;
        c.n_trajectories = n;
        c.master_seed = 424242;
        c.model = make_model(params, tf, 1e-6, true);
        c.psi_g = psi;
        c.sequence = std::move(seq);
        c.schedule = std::move(schedule);
        return c;
    }
};

const SmallSystem &small() {
    static const SmallSystem s;
    return s;
}

PulseSequence split_only() { return {{{pi / 2, 0.0, 0.0}}, 0.0}; }

PulseSequence split_and_hold(double t) { return {{{pi / 2, 0.0, 0.0}}, t}; }

} // namespace

TEST(Sampling, QuadratureCovarianceFollowsHalfQuantumLaw) {
    for (auto g : {make_grid(Geometry::SphericalRadial1D, {8}, {1e-5}),
                   make_grid(Geometry::SphericalRadial1D, {200}, {3e-5}),
                   make_grid(Geometry::Cartesian3D, {8}, {1e-5})}) {
        ComplexField vac(g);
        std::vector<double> re2, im2, reim, neighbour;
        for (std::uint64_t k = 0; k < 400; ++k) {
            TrajectoryRng rng(7, k);
            const auto f = sample_initial(vac, 0.0, rng);
            for (std::size_t i = 0; i + 1 < g->size(); i += 2) {
                const complex e = f.b[i] * std::sqrt(g->weights()[i]);
                const complex e1 = f.b[i + 1] * std::sqrt(g->weights()[i + 1]);
                re2.push_back(e.real() * e.real());
                im2.push_back(e.imag() * e.imag());
                reim.push_back(e.real() * e.imag());
                neighbour.push_back(e.real() * e1.real());
            }
        }
        const auto a = mean_se(re2), b = mean_se(im2), c = mean_se(reim), d = mean_se(neighbour);
        EXPECT_NEAR(a.mean, 0.25, 3 * a.se) << g->size();
        EXPECT_NEAR(b.mean, 0.25, 3 * b.se) << g->size();
        EXPECT_NEAR(c.mean, 0.0, 3 * c.se) << g->size();
        EXPECT_NEAR(d.mean, 0.0, 3 * d.se) << g->size();
    }
}

TEST(Sampling, PerPointVarianceIsOneHalf) {
    const auto &s = small();
    const auto &w = s.tf->grid()->weights();
    for (std::size_t i : {0u, 17u, 63u}) {
        std::vector<double> x;
        for (std::uint64_t k = 0; k < 2000; ++k) {
            TrajectoryRng rng(11, k);
            const auto f = sample_initial(s.psi, s.params.n_atoms(), rng);
            x.push_back(std::norm(f.b[i]) * w[i]);
        }
        const auto m = mean_se(x);
        EXPECT_NEAR(m.mean, 0.5, 3 * m.se) << i;
    }
}

TEST(Sampling, VacuumOccupationIsHalfPerMode) {
    const auto &s = small();
    std::vector<double> nb;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        TrajectoryRng rng(12, k);
        nb.push_back(sample_initial(s.psi, s.params.n_atoms(), rng).b.norm());
    }
    const auto m = mean_se(nb);
    EXPECT_NEAR(m.mean, 0.5 * 64.0, 3 * m.se);
}

TEST(Sampling, MeanCondensateAmplitudeIsCoherent) {
    const auto &s = small();
    std::vector<double> re, im;
    for (std::uint64_t k = 0; k < 2000; ++k) {
        TrajectoryRng rng(13, k);
        const complex c = overlap(s.psi, sample_initial(s.psi, s.params.n_atoms(), rng).a);
        re.push_back(c.real());
        im.push_back(c.imag());
    }
    const auto r = mean_se(re), i = mean_se(im);
    EXPECT_NEAR(r.mean, std::sqrt(s.params.n_atoms()), 3 * r.se);
    EXPECT_NEAR(i.mean, 0.0, 3 * i.se);
    EXPECT_NEAR(r.se, std::sqrt(0.25 / 2000.0), 0.1 * r.se);
}

TEST(Sampling, StreamsArePureFunctionsOfSeedAndIndex) {
    TrajectoryRng a(5, 9), b(5, 9), c(5, 10), d(6, 9);
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
    EXPECT_NE(x, d.normal());
}

TEST(Corrections, VacuumGivesZeroPopulations) {
    const auto &s = small();
    MomentAccumulator acc;
    ComplexField vac(s.tf->grid());
    std::vector<double> na;
    for (std::uint64_t k = 0; k < 500; ++k) {
        TrajectoryRng rng(21, k);
        const auto f = sample_initial(vac, 0.0, rng);
        acc.add(measure(f, k));
        na.push_back(f.a.norm());
    }
    const auto c = corrected_moments(acc, 64);
    const double se = mean_se(na).se;
    EXPECT_NEAR(c.n_a, 0.0, 3 * se);
    EXPECT_NEAR(c.n_b, 0.0, 3 * se);
}

TEST(Corrections, CoherentSplitIsShotNoiseLimited) {
    const auto &s = small();
    const auto res = run_ensemble(s.ensemble(400, split_only(), {0.0}));
    const auto c = corrected_moments(res.moments[0], res.modes);
    const double n = s.params.n_atoms();
    EXPECT_NEAR(c.v, 1.0, 3 * c.v_stderr);
    EXPECT_NEAR(c.var_jx / (n / 4), 1.0, 3 * c.var_jx_stderr / (n / 4));
    EXPECT_NEAR(c.q, 1.0, 3 * c.q_stderr + 1e-3);
    EXPECT_NEAR(c.n_total / n, 1.0, 0.01);
}

TEST(Corrections, NeedsTwoTrajectories) {
    MomentAccumulator acc;
    acc.add({0, 1.0, 1.0, {}});
    EXPECT_THROW(corrected_moments(acc, 8), UndefinedQuantity);
}

TEST(Corrections, ReadoutAtZeroAngleIsTheBareDifference) {
    const auto &s = small();
    const auto res = run_ensemble(s.ensemble(50, split_and_hold(2e-4), {2e-4}));
    const Readout zero{0.0, pi / 2};
    const auto a = corrected_moments(res.moments[0], res.modes);
    const auto b = corrected_moments(res.moments[0], res.modes, &zero);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.var_d, b.var_d);
}

TEST(Accumulator, MergeEqualsUnion) {
    const auto &s = small();
    const auto whole = run_ensemble(s.ensemble(100, split_and_hold(1e-4), {0.0, 1e-4}));
    std::vector<MomentAccumulator> merged(2);
    for (std::uint64_t b = 0; b < 4; ++b) {
        auto cfg = s.ensemble(25, split_and_hold(1e-4), {0.0, 1e-4});
        cfg.first_index = 25 * b;
        const auto part = run_ensemble(cfg);
        for (std::size_t k = 0; k < 2; ++k)
            merged[k].merge(part.moments[k]);
    }
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(merged[k], whole.moments[k]);
        const auto x = corrected_moments(merged[k], whole.modes);
        const auto y = corrected_moments(whole.moments[k], whole.modes);
        EXPECT_NEAR(x.v, y.v, 1e-12);
        EXPECT_NEAR(x.q, y.q, 1e-12);
        EXPECT_NEAR(x.n_a, y.n_a, 1e-12 * std::abs(y.n_a));
    }
}

TEST(Accumulator, RejectsDuplicateTrajectories) {
    MomentAccumulator a, b;
    a.add({3, 1.0, 2.0, {}});
    b.add({3, 1.0, 2.0, {}});
    EXPECT_THROW(a.add({3, 0.0, 0.0, {}}), Error);
    EXPECT_THROW(a.merge(b), Error);
}

TEST(Accumulator, CompensatedSumKeepsSmallTerms) {
    KahanSum k;
    k.add(1e16);
    for (int i = 0; i < 1000; ++i)
        k.add(1.0);
    k.add(-1e16);
    EXPECT_EQ(k.value(), 1000.0);
}

TEST(Ensemble, BitIdenticalAcrossWorkerCounts) {
    const auto &s = small();
    auto cfg = s.ensemble(24, split_and_hold(3e-4), {1e-4, 3e-4});
    const auto one = run_ensemble(cfg);
    cfg.workers = 3;
    const auto three = run_ensemble(cfg);
    cfg.workers = 8;
    const auto eight = run_ensemble(cfg);
    EXPECT_EQ(one.moments, three.moments);
    EXPECT_EQ(one.moments, eight.moments);
}

TEST(Ensemble, SameSeedSameResultDifferentSeedDifferentResult) {
    const auto &s = small();
    auto cfg = s.ensemble(10, split_and_hold(1e-4), {1e-4});
    const auto a = run_ensemble(cfg);
    const auto b = run_ensemble(cfg);
    EXPECT_EQ(a.moments, b.moments);
    cfg.master_seed += 1;
    EXPECT_NE(run_ensemble(cfg).moments, a.moments);
}

TEST(Ensemble, FailureReportsLowestTrajectoryIndexAndStep) {
    const auto &s = small();
    auto cfg = s.ensemble(16, split_and_hold(1e-4), {0.0, 1e-4});
    cfg.workers = 4;
    cfg.on_trajectory_snapshot = [](std::uint64_t index, std::size_t k, const FieldPair &) {
        if ((index == 5 || index == 11) && k == 1)
            throw IntegrationError(77, "injected");
    };
    try {
        run_ensemble(cfg);
        FAIL() << "expected TrajectoryError";
    } catch (const TrajectoryError &e) {
        EXPECT_EQ(e.trajectory(), 5u);
        EXPECT_EQ(e.step(), 77u);
        EXPECT_EQ(e.code(), "ensemble.trajectory");
    }
}

TEST(Ensemble, ValidationRejectsBadConfigs) {
    const auto &s = small();
    auto cfg = s.ensemble(1, split_only(), {0.0});
    EXPECT_THROW(run_ensemble(cfg), ConfigError);
    cfg = s.ensemble(4, split_only(), {0.0});
    cfg.model = make_model(s.params, s.tf, 1e-6, false);
    EXPECT_THROW(run_ensemble(cfg), ConfigError);
    cfg = s.ensemble(4, split_and_hold(1e-4), {2e-4});
    EXPECT_THROW(run_ensemble(cfg), ConfigError);
    cfg = s.ensemble(4, split_and_hold(1e-4), {1e-4, 0.0});
    EXPECT_THROW(run_ensemble(cfg), ConfigError);
}

TEST(EvolveTw, NoiselessCorrectionIsAPhaseScalingAsInverseCellVolume) {
    // On a Cartesian grid the 1/dv terms are uniform energy shifts, so a
    // noiseless field differs from mean-field evolution by a phase of
    // (U_aa + U_ab / 2) t / (hbar dv) on |a>.
    const auto p = rb_params(2000);
    const double t = 2e-4;
    std::vector<double> phase_per_inv_dv;
    for (double len : {10e-6, 12e-6}) {
        const auto g = make_grid(Geometry::Cartesian3D, {16}, {len});
        const auto tf = make_transform(g);
        FieldPair f(g);
        f.a = gaussian(g, 1.2e-6);
        f.a.scale(std::sqrt(p.n_atoms()));
        FieldPair tw = f;
        evolve_gpe(f, make_model(p, tf, 1e-6), t);
        evolve_tw(tw, make_model(p, tf, 1e-6, true), t);
        const double dv = g->cell_volume();
        const double expected = (p.u_aa() + 0.5 * p.u_ab()) * t / (constants::hbar * dv);
        const complex rot = overlap(f.a, tw.a) / f.a.norm();
        EXPECT_NEAR(std::abs(rot), 1.0, 1e-10);
        EXPECT_NEAR(std::remainder(std::arg(rot) - expected, 2 * pi), 0.0, 1e-8);
        phase_per_inv_dv.push_back(expected * dv);
    }
    EXPECT_NEAR(phase_per_inv_dv[0], phase_per_inv_dv[1], 1e-12 * phase_per_inv_dv[0]);
}

TEST(EvolveTw, RequiresWignerModel) {
    const auto &s = small();
    FieldPair f(s.tf->grid());
    EXPECT_THROW(evolve_tw(f, make_model(s.params, s.tf, 1e-6), 1e-6), ConfigError);
}
