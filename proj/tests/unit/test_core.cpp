// Grid, spectral transforms, split-step kernel and snapshot format.

#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <complex>
#include <filesystem>
#include <numbers>

#include "bectwist/core/snapshot.hpp"
#include "bectwist/core/split_step.hpp"
#include "bectwist/meanfield/gpe.hpp"
#include "support.hpp"

using namespace bectwist;
using namespace bectwist::testing;

namespace {

constexpr double pi = std::numbers::pi;

} // namespace

TEST(Grid, Cartesian32CubedHas32768Points) {
    const auto g = make_grid(Geometry::Cartesian3D, {32, 32, 32}, {16e-6, 16e-6, 16e-6});
    EXPECT_EQ(g->size(), 32768u);
}

TEST(Grid, CartesianCellVolumeIsProductOfSpacings) {
    const auto g = make_grid(Geometry::Cartesian3D, {8}, {1.0});
    EXPECT_DOUBLE_EQ(g->cell_volume(), 1.0 / 512.0);
    EXPECT_NEAR(g->total_weight() / g->volume(), 1.0, 1e-12);
}

TEST(Grid, AnisotropicBoxWeightsSumToVolume) {
    const auto g = make_grid(Geometry::Cartesian3D, {16, 8, 32}, {3e-6, 5e-6, 7e-6});
    EXPECT_NEAR(g->total_weight() / (3e-6 * 5e-6 * 7e-6), 1.0, 1e-12);
}

TEST(Grid, RadialWeightsMatchMidpointClosedForm) {
    for (std::size_t n : {8u, 64u, 256u, 1000u}) {
        const double r = 50e-6;
        const auto g = make_grid(Geometry::SphericalRadial1D, {n}, {r});
        const double nn = static_cast<double>(n);
        const double exact = 4.0 / 3.0 * pi * r * r * r * (1.0 - 1.0 / (4.0 * nn * nn));
        EXPECT_NEAR(g->total_weight() / exact, 1.0, 1e-12) << n;
    }
}

TEST(Grid, RadialWeightsApproachSphereVolume) {
    const double r = 50e-6;
    const auto g256 = make_grid(Geometry::SphericalRadial1D, {256}, {r});
    EXPECT_NEAR(g256->total_weight() / g256->volume(), 1.0, 5e-6);
    const auto g512 = make_grid(Geometry::SphericalRadial1D, {512}, {r});
    EXPECT_NEAR(g512->total_weight() / g512->volume(), 1.0, 1e-6);
}

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW(make_grid(Geometry::Cartesian3D, {4}, {1.0}), ConfigError);
    EXPECT_THROW(make_grid(Geometry::Cartesian3D, {8192}, {1.0}), ConfigError);
    EXPECT_THROW(make_grid(Geometry::Cartesian3D, {8}, {-1.0}), ConfigError);
    EXPECT_THROW(make_grid(Geometry::SphericalRadial1D, {64}, {0.0}), ConfigError);
    EXPECT_THROW(make_grid(Geometry::Cartesian3D, {8, 8}, {1.0}), ConfigError);
}

TEST(Grid, WavenumbersFollowDftOrdering) {
    const auto g = make_grid(Geometry::Cartesian3D, {8}, {2.0 * pi});
    const auto &k = g->wavenumbers(0);
    const std::vector<double> expected{0, 1, 2, 3, -4, -3, -2, -1};
    for (std::size_t i = 0; i < 8; ++i)
        EXPECT_DOUBLE_EQ(k[i], expected[i]);
}

TEST(Kinetic, ZeroModeMultiplierIsOne) {
    const auto g = make_grid(Geometry::Cartesian3D, {8}, {1e-5});
    const auto m = kinetic_phase_factors(*g, 1e-6, constants::rb87_mass);
    EXPECT_EQ(m[0], complex(1.0, 0.0));
    for (const auto &z : m)
        EXPECT_NEAR(std::abs(z), 1.0, 1e-15);
}

TEST(Kinetic, PlaneWaveAcquiresDispersionPhase) {
    const double len = 20e-6, mass = constants::rb87_mass, t = 2e-3;
    const auto g = make_grid(Geometry::Cartesian3D, {16}, {len});
    const auto tf = make_transform(g);
    const double k = 3.0 * 2.0 * pi / len;
    FieldPair f(g);
    for (std::size_t i = 0; i < f.a.size(); ++i)
        f.a[i] = std::polar(1.0, k * g->coordinate_of(i, 0));
    const FieldPair start = f;
    SplitStepper(tf, mass).advance(f, FreeTerm{}, t / 10, 10);
    const complex expected = std::polar(1.0, -constants::hbar * k * k * t / (2.0 * mass));
    for (std::size_t i = 0; i < f.a.size(); ++i)
        EXPECT_LT(std::abs(f.a[i] - start.a[i] * expected), 1e-12);
}

TEST(Kinetic, FreeGaussianWidthFollowsAnalyticLaw) {
    // |psi|^2 ~ exp(-r^2/sigma^2) has <r^2> = 3 sigma^2 / 2 in three dimensions.
    const double mass = constants::rb87_mass, s0 = 1e-6, t = 1e-3;
    const auto g = make_grid(Geometry::SphericalRadial1D, {512}, {20e-6});
    const auto tf = make_transform(g);
    FieldPair f(g);
    f.a = gaussian(g, s0);
    SplitStepper(tf, mass).step(f, FreeTerm{}, t);
    const double tau = constants::hbar * t / (mass * s0 * s0);
    const double sigma = s0 * std::sqrt(1.0 + tau * tau);
    const double measured = std::sqrt(mean_r2(f.a) / 1.5);
    EXPECT_NEAR(measured / sigma, 1.0, 1e-6);
}

TEST(Spectral, RoundTripReproducesField) {
    for (auto g : {make_grid(Geometry::Cartesian3D, {16, 8, 32}, {1e-5, 2e-5, 3e-5}),
                   make_grid(Geometry::SphericalRadial1D, {128}, {1e-5})}) {
        const auto tf = make_transform(g);
        ComplexField f(g);
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = {std::sin(0.37 * static_cast<double>(i)), std::cos(1.3 * static_cast<double>(i))};
        ComplexField w = f;
        tf->forward(w.data());
        tf->inverse(w.data());
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            err = std::max(err, std::abs(w[i] * tf->scale() - f[i]));
            ref = std::max(ref, std::abs(f[i]));
        }
        EXPECT_LT(err / ref, 1e-12);
    }
}

TEST(SplitStep, UniformZeroModeIsStationary) {
    const auto g = make_grid(Geometry::Cartesian3D, {8}, {1e-5});
    const auto tf = make_transform(g);
    FieldPair f(g);
    for (auto &v : f.a.values())
        v = {0.3, -0.4};
    const FieldPair start = f;
    SplitStepper(tf, constants::rb87_mass).advance(f, FreeTerm{}, 1e-5, 100);
    for (std::size_t i = 0; i < f.a.size(); ++i)
        EXPECT_LT(std::abs(f.a[i] - start.a[i]), 1e-13);
}

TEST(SplitStep, DisplacedGaussianOscillatesAtTrapPeriod) {
    const double omega = two_pi * 200.0, dt = 1e-6;
    auto p = rb_params(1.0, omega);
    p.set_scattering(0.0, 0.0, 0.0);
    const auto g = make_grid(Geometry::Cartesian3D, {32}, {16e-6});
    const auto model = make_model(p, g, dt);
    const double aho = std::sqrt(constants::hbar / (p.mass() * omega));
    FieldPair f(g);
    f.a = gaussian(g, 1.5 * aho, {1.0e-6, 0.0, 0.0});
    auto mean_x = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < f.a.size(); ++i)
            s += g->coordinate_of(i, 0) * std::norm(f.a[i]) * g->weights()[i];
        return s / f.a.norm();
    };
    Propagator prop(model);
    std::vector<double> crossings;
    double prev = mean_x(), t = 0.0;
    const double h = 1e-5;
    while (crossings.size() < 3 && t < 0.02) {
        prop.evolve(f, h);
        t += h;
        const double x = mean_x();
        if ((prev > 0.0) != (x > 0.0))
            crossings.push_back(t - h * x / (x - prev));
        prev = x;
    }
    ASSERT_EQ(crossings.size(), 3u);
    const double period = crossings[2] - crossings[0];
    EXPECT_NEAR(period * omega / two_pi, 1.0, 1e-3);
}

namespace {

/// pi/2-split interacting condensate on the 1D spherical grid.
FieldPair split_condensate(const ModelPtr &model, double n_atoms) {
    const auto gs = ground_state(model->params, model->transform);
    auto f = condensate_in_a(gs.psi, n_atoms);
    apply_pulse(f, pi / 2, 0.0);
    return f;
}

double fidelity_error(const FieldPair &x, const FieldPair &ref) {
    double num = 0.0;
    const auto &w = x.grid()->weights();
    for (std::size_t i = 0; i < w.size(); ++i)
        num += (std::norm(x.a[i] - ref.a[i]) + std::norm(x.b[i] - ref.b[i])) * w[i];
    return std::sqrt(num / ref.total_norm());
}

} // namespace

TEST(SplitStep, NormDriftBelow1e8Over1e4Steps) {
    const auto p = rb_params(1e4);
    const auto g = make_grid(Geometry::SphericalRadial1D, {256}, {12e-6});
    const auto model = make_model(p, g, 1e-6);
    auto f = split_condensate(model, p.n_atoms());
    const double n0 = f.total_norm();
    Propagator prop(model);
    prop.evolve(f, 1e-2);
    EXPECT_EQ(prop.steps_taken(), 10000u);
    EXPECT_LT(std::abs(f.total_norm() / n0 - 1.0), 1e-8);
}

TEST(SplitStep, SecondOrderInTimeStep) {
    const auto p = rb_params(1e4);
    const auto g = make_grid(Geometry::SphericalRadial1D, {128}, {12e-6});
    const auto tf = make_transform(g);
    const auto start = split_condensate(make_model(p, tf, 1e-6), p.n_atoms());
    auto run = [&](double dt) {
        FieldPair f = start;
        Propagator(make_model(p, tf, dt)).evolve(f, 2e-3);
        return f;
    };
    const auto ref = run(2.5e-7);
    const double e1 = fidelity_error(run(8e-6), ref);
    const double e2 = fidelity_error(run(4e-6), ref);
    const double e3 = fidelity_error(run(2e-6), ref);
    EXPECT_NEAR(e1 / e2, 4.0, 0.6);
    EXPECT_NEAR(e2 / e3, 4.0, 0.6);
}

TEST(SplitStep, SignalsNonFiniteValuesWithStepIndex) {
    const auto g = make_grid(Geometry::SphericalRadial1D, {16}, {1e-5});
    FieldPair f(g);
    f.a[3] = {std::nan(""), 0.0};
    SplitStepper stepper(make_transform(g), constants::rb87_mass);
    struct Echo {
        std::array<double, 2> operator()(std::size_t, double na, double) const { return {na, 0.0}; }
    };
    try {
        stepper.advance(f, Echo{}, 1e-6, 5);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError &e) {
        EXPECT_EQ(e.step(), 0u);
    }
}

TEST(SplitStep, SphericalAndCartesianAgreeOnRadialProfile) {
    const auto p = rb_params(2000);
    const double s0 = 1e-6, t = 5e-4, dt = 2e-6;
    const auto gr = make_grid(Geometry::SphericalRadial1D, {256}, {12e-6});
    const auto gc = make_grid(Geometry::Cartesian3D, {64}, {12e-6});
    auto evolve = [&](const GridPtr &g) {
        FieldPair f(g);
        f.a = gaussian(g, s0);
        f.a.scale(std::sqrt(p.n_atoms()));
        Propagator(make_model(p, g, dt)).evolve(f, t);
        return f;
    };
    const auto fr = evolve(gr);
    const auto fc = evolve(gc);
    EXPECT_NEAR(mean_r2(fc.a) / mean_r2(fr.a), 1.0, 1e-3);
    // Central density: radial innermost shell against the Cartesian origin.
    const auto &cr = gr->coordinates(0);
    const std::size_t origin = (32 * 64 + 32) * 64 + 32;
    ASSERT_NEAR(gc->coordinate_of(origin, 0), 0.0, 1e-18);
    const double rho_c = std::norm(fc.a[origin]);
    // Extrapolate the radial density to r = 0 from the first two shells (even in r).
    const double d0 = std::norm(fr.a[0]), d1 = std::norm(fr.a[1]);
    const double rho_r = d0 + (d0 - d1) * cr[0] * cr[0] / (cr[1] * cr[1] - cr[0] * cr[0]);
    EXPECT_NEAR(rho_c / rho_r, 1.0, 1e-3);
}

TEST(Snapshot, RoundTripsFieldAndMetadata) {
    const auto g = make_grid(Geometry::Cartesian3D, {8, 8, 16}, {1e-5, 1e-5, 2e-5});
    ComplexField f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = {1.0 / (1.0 + static_cast<double>(i)), -std::sqrt(static_cast<double>(i))};
    const auto dir = std::filesystem::temp_directory_path() / "bectwist_snapshot_test";
    std::filesystem::create_directories(dir);
    const auto files = write_snapshot(dir / "psi", f, 1.25e-3, "a");
    EXPECT_EQ(std::filesystem::file_size(files[0]), f.size() * 16);
    const auto info = read_snapshot_info(dir / "psi");
    EXPECT_EQ(info.geometry, Geometry::Cartesian3D);
    EXPECT_EQ(info.points, (std::vector<std::size_t>{8, 8, 16}));
    EXPECT_DOUBLE_EQ(info.time, 1.25e-3);
    EXPECT_EQ(info.component, "a");
    const auto back = read_snapshot(dir / "psi", g);
    for (std::size_t i = 0; i < f.size(); ++i)
        EXPECT_EQ(back[i], f[i]);
    std::filesystem::remove_all(dir);
}
