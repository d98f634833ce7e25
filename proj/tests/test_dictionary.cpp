#include "wbce/dictionary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace wbce;

namespace {

struct Scene {
    PulseSpec spec;
    GridSpec grid;
    SymbolSequence b;
    SampleGrid samples;
    double fc = 10000.0;
};

Scene small_scene(long n_symbols = 100)
{
    Scene s;
    s.spec.symbol_period_s = 1e-4;
    s.grid = build_grid(0.0100, 0.0102, 1e-3, 5e-5, 5e-4, s.spec.symbol_period_s);
    s.b = generate_qpsk(33, static_cast<std::size_t>(n_symbols));
    s.samples = covering_grid(s.spec, s.b.size(), s.grid.gamma(s.grid.p_first()), s.grid.gamma(s.grid.p_last()),
                              std::abs(s.grid.a(s.grid.q_first())), 16);
    return s;
}

} // namespace

TEST(BuildGrid, DegenerateCoverage)
{
    const GridSpec g = build_grid(0.0, 0.0, 0.0, 0.25, 1e-4, 1.0);
    EXPECT_EQ(g.n0, 0);
    EXPECT_EQ(g.n_gamma, 1);
    EXPECT_EQ(g.n_a, 2);
    EXPECT_EQ(g.n_b, 1);
}

TEST(BuildGrid, SolverScenarioCoverage)
{
    const double T = 1e-4;
    const GridSpec g = build_grid(0.010, 0.015, 2.5e-3, T / 2, 5e-4, T);
    EXPECT_TRUE(covers(g, 0.010, 0.015, 2.5e-3));
    EXPECT_LE(g.gamma(g.p_first()), 0.010 + 1e-15);
    EXPECT_GE(g.gamma(g.p_last()), 0.015 - 1e-15);
    EXPECT_LE(g.a(g.q_first()), -2.5e-3);
    EXPECT_GE(g.a(g.q_last()), 2.5e-3 - 1e-15);
}

TEST(BuildGrid, RandomGridsMinimalAndCovering)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double T = 1.0;
        const double gmin = 10.0 * u(rng);
        const double gmax = gmin + 5.0 * u(rng);
        const double amax = 0.01 * u(rng);
        const double dg = 0.5 * T * (0.05 + 0.95 * u(rng));
        const double da = 1e-3 * (0.05 + u(rng));
        const GridSpec g = build_grid(gmin, gmax, amax, dg, da, T);
        ASSERT_TRUE(covers(g, gmin, gmax, amax));
        ASSERT_EQ(g.n_a % 2, 0);
        GridSpec fewer = g;
        fewer.n_gamma -= 1;
        if (fewer.n_gamma >= 1) {
            ASSERT_FALSE(covers(fewer, gmin, gmax, amax));
        }
        GridSpec later = g;
        later.n0 += 1;
        later.n_gamma -= 1;
        if (later.n_gamma >= 1) {
            ASSERT_FALSE(covers(later, gmin, gmax, amax));
        }
        GridSpec narrower = g;
        narrower.n_a -= 2;
        if (narrower.n_a >= 2) {
            ASSERT_FALSE(covers(narrower, gmin, gmax, amax));
        }
    }
}

TEST(BuildGrid, SpacingAboveHalfSymbolRejected)
{
    try {
        build_grid(0.0, 1.0, 0.0, 0.6, 1e-3, 1.0);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("T/2"), std::string::npos);
    }
    EXPECT_THROW(build_grid(0.0, 1.0, 0.0, 0.0, 1e-3, 1.0), std::invalid_argument);
    EXPECT_THROW(build_grid(1.0, 0.5, 0.0, 0.1, 1e-3, 1.0), std::invalid_argument);
}

TEST(Atom, ZeroRateModelsCoincide)
{
    const Scene s = small_scene(30);
    const long q0 = 0;
    ASSERT_EQ(s.grid.a(q0), 0.0);
    for (long p = s.grid.p_first(); p <= s.grid.p_last(); ++p) {
        EXPECT_EQ(atom(s.grid, p, q0, s.b, s.spec, s.fc, s.samples, ModelKind::wideband),
                  atom(s.grid, p, q0, s.b, s.spec, s.fc, s.samples, ModelKind::narrowband));
    }
}

TEST(Atom, EqualsSinglePathChannel)
{
    const Scene s = small_scene(30);
    const long p = s.grid.p_first() + 2;
    const long q = s.grid.q_first() + 1;
    const Channel ch{{ChannelPath{s.grid.gamma(p), s.grid.a(q), {1, 0}}}};
    EXPECT_EQ(atom(s.grid, p, q, s.b, s.spec, s.fc, s.samples, ModelKind::wideband),
              apply_wideband(ch, s.b, s.spec, s.fc, s.samples));
    EXPECT_EQ(atom(s.grid, p, q, s.b, s.spec, s.fc, s.samples, ModelKind::narrowband),
              apply_narrowband(ch, s.b, s.spec, s.fc, s.samples));
}

TEST(Atom, SquaredNormNearSymbolCount)
{
    Scene s = small_scene(100);
    s.samples = covering_grid(s.spec, 100, s.grid.gamma(s.grid.p_first()), s.grid.gamma(s.grid.p_last()), 2e-3, 128);
    for (long q = s.grid.q_first(); q <= s.grid.q_last(); ++q) {
        const cvec c = atom(s.grid, s.grid.p_first() + 1, q, s.b, s.spec, s.fc, s.samples, ModelKind::wideband);
        EXPECT_NEAR(c.squaredNorm() * s.samples.step_s, 100.0, 1.0) << "q = " << q;
    }
}

TEST(Atom, OutOfRangeRejected)
{
    const Scene s = small_scene(10);
    EXPECT_THROW(atom(s.grid, s.grid.p_last() + 1, 0, s.b, s.spec, s.fc, s.samples, ModelKind::wideband),
                 std::out_of_range);
    EXPECT_THROW(atom(s.grid, s.grid.p_first(), s.grid.q_first() - 1, s.b, s.spec, s.fc, s.samples,
                      ModelKind::wideband),
                 std::out_of_range);
}

TEST(Assemble, SmallGridMatchesAtoms)
{
    Scene s = small_scene(20);
    s.grid = build_grid(0.0100, 0.0100, 0.0, 5e-5, 5e-4, s.spec.symbol_period_s);
    ASSERT_EQ(s.grid.columns(), 2);
    const Dictionary d = assemble(s.grid, s.b, s.spec, s.fc, s.samples, ModelKind::wideband);
    ASSERT_EQ(d.cols(), 2);
    for (long j = 0; j < 2; ++j) {
        const auto& ix = d.index_map[static_cast<std::size_t>(j)];
        EXPECT_EQ(d.columns.col(j), atom(s.grid, ix.p, ix.q, s.b, s.spec, s.fc, s.samples, ModelKind::wideband));
    }
}

TEST(Assemble, OrderingBijectionAndOneHot)
{
    const Scene s = small_scene(20);
    const Dictionary d = assemble(s.grid, s.b, s.spec, s.fc, s.samples, ModelKind::narrowband);
    ASSERT_EQ(d.cols(), s.grid.columns());
    std::set<std::pair<long, long>> seen;
    long expect = 0;
    for (long p = s.grid.p_first(); p <= s.grid.p_last(); ++p) {
        for (long q = s.grid.q_first(); q <= s.grid.q_last(); ++q) {
            const auto& ix = d.index_map[static_cast<std::size_t>(expect)];
            EXPECT_EQ(ix.p, p);
            EXPECT_EQ(ix.q, q);
            EXPECT_EQ(d.column_of(p, q), expect);
            seen.insert({p, q});
            ++expect;
        }
    }
    EXPECT_EQ(static_cast<long>(seen.size()), d.cols());
    const long j = d.column_of(s.grid.p_first() + 1, 1);
    cvec e = cvec::Zero(d.cols());
    e[j] = 1.0;
    EXPECT_EQ(cvec(d.columns * e),
              atom(s.grid, s.grid.p_first() + 1, 1, s.b, s.spec, s.fc, s.samples, ModelKind::narrowband));
}

TEST(Assemble, Deterministic)
{
    const Scene s = small_scene(20);
    const Dictionary a = assemble(s.grid, s.b, s.spec, s.fc, s.samples, ModelKind::wideband);
    const Dictionary b = assemble(s.grid, s.b, s.spec, s.fc, s.samples, ModelKind::wideband);
    EXPECT_EQ(a.columns, b.columns);
}

TEST(Assemble, SolverScenarioIsUnderdetermined)
{
    PulseSpec spec;
    spec.symbol_period_s = 1e-4;
    const GridSpec g = build_grid(0.010, 0.015, 2.5e-3, 5e-5, 5e-4, spec.symbol_period_s);
    const SampleGrid samples = covering_grid(spec, 200, g.gamma(g.p_first()), g.gamma(g.p_last()), 3e-3, 8);
    EXPECT_LT(samples.length, g.columns());
}

TEST(Assemble, Guards)
{
    const Scene s = small_scene(10);
    EXPECT_THROW(assemble(s.grid, s.b, s.spec, s.fc, s.samples, ModelKind::wideband, 3), std::length_error);
    GridSpec g = s.grid;
    g.n_b = 2;
    EXPECT_THROW(assemble(g, s.b, s.spec, s.fc, s.samples, ModelKind::wideband), std::invalid_argument);
}

TEST(Nearest, OnLatticeAndTies)
{
    const GridSpec g = build_grid(1.0, 3.0, 0.004, 0.25, 1e-3, 1.0);
    const GridPoint on = nearest_grid_point(g, g.gamma(g.p_first() + 3), g.a(1));
    EXPECT_EQ(on.p, g.p_first() + 3);
    EXPECT_EQ(on.q, 1);
    const GridPoint tie = nearest_grid_point(g, g.gamma(5) + 0.125, g.a(-2) + 5e-4);
    EXPECT_EQ(tie.p, 5);
    EXPECT_EQ(tie.q, -2);
}

TEST(Nearest, RandomPointsAgainstBruteForce)
{
    const GridSpec g = build_grid(0.010, 0.015, 2.5e-3, 5e-5, 5e-4, 1e-4);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ug(g.gamma(g.p_first()), g.gamma(g.p_last()));
    std::uniform_real_distribution<double> ua(g.a(g.q_first()), g.a(g.q_last()));
    for (int i = 0; i < 10000; ++i) {
        const double gm = ug(rng);
        const double a = ua(rng);
        const GridPoint r = nearest_grid_point(g, gm, a);
        ASSERT_LE(std::abs(g.gamma(r.p) - gm), g.delta_gamma_s / 2 * (1 + 1e-9));
        ASSERT_LE(std::abs(g.a(r.q) - a), g.delta_a / 2 * (1 + 1e-9));
        double best_g = 1e9;
        for (long p = g.p_first(); p <= g.p_last(); ++p) {
            best_g = std::min(best_g, std::abs(g.gamma(p) - gm));
        }
        double best_a = 1e9;
        for (long q = g.q_first(); q <= g.q_last(); ++q) {
            best_a = std::min(best_a, std::abs(g.a(q) - a));
        }
        ASSERT_NEAR(std::abs(g.gamma(r.p) - gm), best_g, 1e-12);
        ASSERT_NEAR(std::abs(g.a(r.q) - a), best_a, 1e-12);
    }
}

TEST(Nearest, OutsideCoverageRejected)
{
    const GridSpec g = build_grid(1.0, 3.0, 0.004, 0.25, 1e-3, 1.0);
    EXPECT_THROW(nearest_grid_point(g, 10.0, 0.0), std::out_of_range);
    EXPECT_THROW(nearest_grid_point(g, 2.0, 1.0), std::out_of_range);
}
