#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "deauto/experiments.hpp"
#include "deauto/grid.hpp"
#include "deauto/phantoms.hpp"
#include "deauto/regularize.hpp"

using namespace deauto;

namespace {

GridFn random_grid(const GridSpec& spec, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(spec.size());
    for (double& x : v) x = dist(eng);
    return GridFn(spec, std::move(v));
}

GridFn constant(const GridSpec& spec, double c) {
    return sample([c](std::span<const double>) { return c; }, spec);
}

}  // namespace

TEST_CASE("objective basics") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 12);
    GridFn y = autoconvolve(xd, DataCase::Full);
    TikhonovConfig cfg(xd);
    cfg.alpha = 0.37;
    CHECK(objective(xd, y, cfg) <= 1e-20);

    std::mt19937_64 eng(3);
    GridFn x = random_grid(xd.spec(), eng);
    // At x = xbar only the misfit remains.
    TikhonovConfig cfg2(x);
    cfg2.alpha = 5.0;
    double misfit = l2_norm(combine(1.0, autoconvolve(x, DataCase::Full), -1.0, y));
    CHECK(objective(x, y, cfg2) == Catch::Approx(misfit * misfit));

    // Affine in alpha.
    TikhonovConfig cfga(xd);
    cfga.alpha = 0.7;
    double f1 = objective(x, y, cfga);
    cfga.alpha = 1.4;
    double f2 = objective(x, y, cfga);
    double pen = l2_norm(combine(1.0, x, -1.0, xd));
    CHECK(f2 - f1 == Catch::Approx(0.7 * pen * pen).epsilon(1e-10));
}

TEST_CASE("gradient vanishes at a noise-free stationary point") {
    for (DataCase c : {DataCase::Full, DataCase::Limited}) {
        GridFn xd = sample_phantom(PhantomId::Product2D, 10);
        GridFn y = autoconvolve(xd, c);
        TikhonovConfig cfg(xd);
        cfg.alpha = 0.9;
        cfg.data_case = c;
        CHECK(l2_norm(gradient(xd, y, cfg)) <= 1e-12);
        // alpha = 0 with exact fit: zero gradient regardless of xbar.
        TikhonovConfig cfg0(constant(xd.spec(), 0.5));
        cfg0.alpha = 0.0;
        cfg0.data_case = c;
        CHECK(l2_norm(gradient(xd, y, cfg0)) <= 1e-12);
    }
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 eng(19);
    GridSpec spec = GridSpec::unit_cube(2, 12);
    for (DataCase c : {DataCase::Full, DataCase::Limited}) {
        for (bool nonneg : {false, true}) {
            GridFn ydelta = random_grid(output_spec(spec, c), eng);
            for (int trial = 0; trial < 5; ++trial) {
                // Interior point for the constrained variant.
                GridFn x = combine(1.0, random_grid(spec, eng), 3.0, constant(spec, 1.0));
                GridFn d = random_grid(spec, eng);
                TikhonovConfig cfg(constant(spec, 0.5));
                cfg.alpha = 1e-3;
                cfg.data_case = c;
                cfg.nonneg = nonneg;
                GridFn g = gradient(x, ydelta, cfg);
                const double eps = 1e-6;
                double fd = (objective(combine(1.0, x, eps, d), ydelta, cfg) -
                             objective(combine(1.0, x, -eps, d), ydelta, cfg)) /
                            (2 * eps);
                double dir = l2_inner(g, d);
                CHECK(std::fabs(dir - fd) <= 1e-5 * std::fabs(dir));
            }
        }
    }
}

TEST_CASE("minimize: stationary start returns immediately") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 12);
    GridFn y = autoconvolve(xd, DataCase::Full);
    TikhonovConfig cfg(xd);
    cfg.alpha = 1e-3;
    SolveResult res = minimize(y, xd, cfg);
    CHECK(res.converged);
    CHECK(res.iterations <= 1);
    CHECK(l2_norm(combine(1.0, res.x, -1.0, xd)) <= 1e-12);
}

TEST_CASE("minimize: huge alpha pins the solution to xbar") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 12);
    GridFn y = autoconvolve(xd, DataCase::Full);
    GridFn xbar = constant(xd.spec(), 0.5);
    TikhonovConfig cfg(xbar);
    double yn = l2_norm(y);
    cfg.alpha = 1e6 * yn * yn;
    SolveResult res = minimize(y, xbar, cfg);
    CHECK(l2_norm(combine(1.0, res.x, -1.0, xbar)) <= 1e-3 * l2_norm(xbar));
}

TEST_CASE("minimize: monotone objective and feasible iterates") {
    std::mt19937_64 eng(23);
    GridFn xd = sample_phantom(PhantomId::Product2D, 12);
    GridFn y = add_noise(autoconvolve(xd, DataCase::Limited), NoiseSpec{0.02, 99});
    GridFn xbar = constant(xd.spec(), 0.5);
    TikhonovConfig cfg(xbar);
    cfg.alpha = 1e-4;
    cfg.data_case = DataCase::Limited;
    cfg.nonneg = true;
    cfg.max_iters = 300;
    std::vector<double> trace;
    cfg.objective_trace = &trace;
    double min_value = 0.0;
    std::function<void(const GridFn&)> observer = [&](const GridFn& x) {
        for (double v : x.values()) min_value = std::min(min_value, v);
    };
    cfg.iterate_observer = &observer;
    minimize(y, xbar, cfg);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) CHECK(trace[i + 1] <= trace[i] + 1e-15);
    CHECK(min_value >= 0.0);
}

TEST_CASE("minimize: sign symmetry of the functional with xbar = 0") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 10);
    GridFn y = autoconvolve(xd, DataCase::Full);
    TikhonovConfig cfg(GridFn(xd.spec()));  // xbar = 0
    cfg.alpha = 1e-5;
    cfg.max_iters = 400;
    SolveResult res = minimize(y, constant(xd.spec(), 0.5), cfg);
    GridFn neg = combine(-1.0, res.x, 0.0, res.x);
    CHECK(objective(neg, y, cfg) == Catch::Approx(objective(res.x, y, cfg)).epsilon(1e-12));
}

TEST_CASE("minimize: deterministic") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 12);
    GridFn y = add_noise(autoconvolve(xd, DataCase::Full), NoiseSpec{0.01, 5});
    GridFn xbar = constant(xd.spec(), 0.5);
    TikhonovConfig cfg(xbar);
    cfg.alpha = 1e-5;
    cfg.max_iters = 200;
    SolveResult a = minimize(y, xbar, cfg);
    SolveResult b = minimize(y, xbar, cfg);
    CHECK(a.iterations == b.iterations);
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.x.values() == b.x.values());
}

TEST_CASE("minimize: infeasible start and bad parameters") {
    GridFn xd = sample_phantom(PhantomId::Product2D, 10);
    GridFn y = autoconvolve(xd, DataCase::Limited);
    TikhonovConfig cfg(xd);
    cfg.data_case = DataCase::Limited;
    cfg.nonneg = true;
    GridFn neg = combine(-1.0, xd, 0.0, xd);
    CHECK_THROWS_AS(minimize(y, neg, cfg), std::invalid_argument);
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(minimize(y, xd, cfg), std::invalid_argument);
}

TEST_CASE("desk-scale reconstruction: 1-D full data at 1% noise") {
    GridFn xd = sample_phantom(PhantomId::X1, 50);
    GridFn y = autoconvolve(xd, DataCase::Full);
    GridFn ydelta = add_noise(y, NoiseSpec{0.01, 123});
    TikhonovConfig cfg(constant(xd.spec(), 0.5));
    cfg.data_case = DataCase::Full;
    AlphaSelection sel = select_alpha_opt(ydelta, xd, cfg);
    CHECK(sel.error / l2_norm(xd) < 0.10);
}

TEST_CASE("select_alpha_opt small-grid contracts") {
    GridFn xd = sample_phantom(PhantomId::X1, 30);
    GridFn y = autoconvolve(xd, DataCase::Full);
    TikhonovConfig cfg(constant(xd.spec(), 0.5));

    // Single-element grid returns that alpha.
    AlphaSelection one = select_alpha_opt(y, xd, cfg, {1e-6});
    CHECK(one.alpha == 1e-6);
    CHECK(one.error >= 0.0);

    // Duplicates are equivalent to the deduplicated grid.
    std::vector<double> grid = {1e-7, 1e-5, 1e-3};
    std::vector<double> dup = {1e-7, 1e-5, 1e-5, 1e-3, 1e-3};
    AlphaSelection a = select_alpha_opt(y, xd, cfg, grid);
    AlphaSelection b = select_alpha_opt(y, xd, cfg, dup);
    CHECK(a.alpha == b.alpha);
    CHECK(a.error == b.error);

    // Noise-free: error trends down toward small alpha across the grid.
    std::vector<double> wide = {1e-8, 1e-6, 1e-4, 1e-2};
    AlphaSelection nf = select_alpha_opt(y, xd, cfg, wide);
    std::vector<double> errs;
    for (std::size_t i = 0; i < wide.size(); ++i) errs.push_back(nf.trials[i].error);
    CHECK(errs.front() <= errs.back());
    CHECK(nf.alpha <= 1e-4);

    CHECK_THROWS_AS(select_alpha_opt(y, xd, cfg, {}), std::invalid_argument);
    CHECK_THROWS_AS(select_alpha_opt(y, xd, cfg, {-1.0}), std::invalid_argument);
}
