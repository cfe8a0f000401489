// Acceptance harness: each numbered criterion prints a single PASS/FAIL line.
// Usage: acceptance [numbers...] (default: all). Exit 0 iff every selected
// criterion passes.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>

#include "deauto/autoconv.hpp"
#include "deauto/experiments.hpp"
#include "deauto/grid.hpp"
#include "deauto/phantoms.hpp"
#include "deauto/regularize.hpp"
#include "deauto/report_io.hpp"

using namespace deauto;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int hw_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

GridFn random_grid(const GridSpec& spec, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(spec.size());
    for (double& x : v) x = dist(eng);
    return GridFn(spec, std::move(v));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// 1: FFT path agrees with the direct-summation oracle on random inputs.
bool criterion1(std::string& detail) {
    Timer timer;
    struct Job { int n, m; std::uint64_t seed; };
    std::vector<Job> jobs;
    std::uint64_t seed = 1000;
    for (int n : {1, 2, 3})
        for (int m : {8, 16, 32})
            for (int inst = 0; inst < 50; ++inst) jobs.push_back({n, m, seed++});

    std::atomic<std::size_t> next{0};
    std::vector<double> worst_per_thread(static_cast<std::size_t>(hw_threads()), 0.0);
    auto worker = [&](std::size_t tid) {
        double worst = 0.0;
        for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
            std::mt19937_64 eng(jobs[j].seed);
            GridFn x = random_grid(GridSpec::unit_cube(jobs[j].n, jobs[j].m), eng);
            // The limited values are the restriction of the full ones, so one
            // naive pass covers both cases.
            GridFn fast_full = autoconvolve(x, DataCase::Full);
            GridFn slow_full = autoconvolve_naive(x, DataCase::Full);
            double scale = l2_norm(slow_full);
            worst = std::max(worst,
                             l2_norm(combine(1.0, fast_full, -1.0, slow_full)) / scale);
            GridFn fast_lim = autoconvolve(x, DataCase::Limited);
            GridFn slow_lim(fast_lim.spec(),
                            deauto::detail::restrict_to_limited(slow_full.values(), jobs[j].m,
                                                                jobs[j].n));
            worst = std::max(worst,
                             l2_norm(combine(1.0, fast_lim, -1.0, slow_lim)) / scale);
        }
        worst_per_thread[tid] = worst;
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < worst_per_thread.size(); ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
    double worst = 0.0;
    for (double w : worst_per_thread) worst = std::max(worst, w);

    double secs = timer.seconds();
    detail = "max rel gap " + fmt(worst) + ", " + fmt(secs) + " s";
    return worst <= 1e-10 && secs < 60.0;
}

// 2: constant-1 phantom matches the tensor-triangle closed form exactly.
bool criterion2(std::string& detail) {
    double worst = 0.0;
    for (auto [n, m] : {std::pair{1, 50}, {2, 50}, {3, 20}}) {
        GridFn ones = sample([](std::span<const double>) { return 1.0; }, GridSpec::unit_cube(n, m));
        GridFn y = autoconvolve(ones, DataCase::Full);
        for (std::size_t flat = 0; flat < y.size(); ++flat) {
            double expect = 1.0;
            for (int j : unflatten(flat, y.spec())) {
                double s = output_coord(j, m);  // s in (0, 2]
                expect *= (s <= 1.0) ? s : 2.0 - s;
            }
            worst = std::max(worst, std::fabs(y[flat] - expect));
        }
        GridFn ylim = autoconvolve(ones, DataCase::Limited);
        for (std::size_t flat = 0; flat < ylim.size(); ++flat) {
            double expect = 1.0;
            for (int j : unflatten(flat, ylim.spec())) expect *= output_coord(j, m);
            worst = std::max(worst, std::fabs(ylim[flat] - expect));
        }
    }
    detail = "max abs gap " + fmt(worst);
    return worst <= 1e-12;
}

// 3: adjoint dot test and gradient vs central differences.
bool criterion3(std::string& detail) {
    std::mt19937_64 eng(301);
    GridSpec spec = GridSpec::unit_cube(2, 16);
    GridFn ones = sample([](std::span<const double>) { return 1.0; }, spec);
    double worst_adj = 0.0, worst_grad = 0.0;
    for (DataCase c : {DataCase::Full, DataCase::Limited}) {
        for (int t = 0; t < 20; ++t) {
            GridFn x = random_grid(spec, eng);
            GridFn d = random_grid(spec, eng);
            GridFn w = random_grid(output_spec(spec, c), eng);
            double lhs = l2_inner(derivative_apply(x, d, c), w);
            double rhs = l2_inner(d, derivative_adjoint(x, w, c));
            worst_adj = std::max(worst_adj,
                                 std::fabs(lhs - rhs) / (l2_norm(x) * l2_norm(d) * l2_norm(w)));

            GridFn xp = combine(1.0, random_grid(spec, eng), 3.0, ones);
            TikhonovConfig cfg(ones);
            cfg.alpha = 1e-3;
            cfg.data_case = c;
            GridFn grad = gradient(xp, w, cfg);
            const double eps = 1e-6;
            double fd = (objective(combine(1.0, xp, eps, d), w, cfg) -
                         objective(combine(1.0, xp, -eps, d), w, cfg)) /
                        (2.0 * eps);
            double dir = l2_inner(grad, d);
            worst_grad = std::max(worst_grad, std::fabs(dir - fd) / std::fabs(dir));
        }
    }
    detail = "adjoint gap " + fmt(worst_adj) + ", gradient gap " + fmt(worst_grad);
    return worst_adj <= 1e-10 && worst_grad <= 1e-5;
}

// 4: nonlinearity identity/bound and twofoldness.
bool criterion4(std::string& detail) {
    std::mt19937_64 eng(401);
    GridSpec spec = GridSpec::unit_cube(2, 20);
    double worst_id = 0.0, worst_bound = 0.0, worst_even = 0.0;
    for (DataCase c : {DataCase::Full, DataCase::Limited}) {
        for (int t = 0; t < 20; ++t) {
            GridFn x = random_grid(spec, eng);
            GridFn xt = random_grid(spec, eng);
            auto [lhs, rhs] = nonlinearity_residual(x, xt, c);
            double direct = l2_norm(autoconvolve(combine(1.0, xt, -1.0, x), c));
            worst_id = std::max(worst_id, std::fabs(lhs - direct) / (1.0 + direct));
            worst_bound = std::max(worst_bound, (lhs - rhs) / rhs);
            worst_even = std::max(worst_even,
                                  check_twofoldness(x, c) / l2_norm(autoconvolve(x, c)));
        }
    }
    detail = "identity gap " + fmt(worst_id) + ", bound slack " + fmt(worst_bound) +
             ", evenness gap " + fmt(worst_even);
    return worst_id <= 1e-12 && worst_bound <= 1e-12 && worst_even <= 1e-14;
}

// 5: limited-data non-uniqueness construction plus negative control.
bool criterion5(std::string& detail) {
    double worst_res = 0.0, min_dist = 1e300, min_neg = 1e300;
    for (auto [n, m] : {std::pair{1, 50}, {2, 50}, {3, 20}}) {
        NonuniqueResult res = check_nonuniqueness(n, m, m / 5, 505);
        worst_res = std::max(worst_res, res.residual);
        min_dist = std::min(min_dist, res.distance);
        min_neg = std::min(min_neg,
                           check_nonuniqueness(n, m, m / 5, 505, /*violate=*/true).residual);
    }
    detail = "residual " + fmt(worst_res) + ", ||h|| >= " + fmt(min_dist) + ", control " +
             fmt(min_neg);
    return worst_res <= 1e-14 && min_dist > 0.0 && min_neg > 1e-3;
}

// 6: corner sequence drives limited-data ill-posedness.
bool criterion6(std::string& detail) {
    const double r = 0.25;
    auto rows = demo_illposed_limited(2, 50, r, {5, 10, 25});
    bool ok = rows.size() == 3;
    double worst_dist = 0.0;
    for (std::size_t i = 0; ok && i < rows.size(); ++i) {
        worst_dist = std::max(worst_dist, std::fabs(rows[i].distance - r));
        if (rows[i].residual > 1.1 * rows[i].bound) ok = false;
        if (i > 0 && !(rows[i].residual < rows[i - 1].residual)) ok = false;
    }
    ok = ok && worst_dist <= 1e-13;
    detail = "distance gap " + fmt(worst_dist) + ", residuals " + fmt(rows[0].residual) + " > " +
             fmt(rows[1].residual) + " > " + fmt(rows[2].residual);
    return ok;
}

// 7: Fresnel sequence drives full-data ill-posedness.
bool criterion7(std::string& detail) {
    Timer timer;
    const double r = 0.125;
    GridFn xdagger = sample_phantom(PhantomId::Product2D, 200);
    auto series = demo_illposed_full(2, 200, r, {5, 10, 20}, xdagger);
    bool ok = series.rows.size() == 3;
    for (const auto& row : series.rows)
        if (!(row.distance > 0.5 * r && row.distance < r)) ok = false;
    if (!(series.rows[2].residual <= 0.5 * series.rows[0].residual)) ok = false;
    double secs = timer.seconds();
    detail = "distances/r " + fmt(series.rows[0].distance / r) + "," +
             fmt(series.rows[1].distance / r) + "," + fmt(series.rows[2].distance / r) +
             "; residual ratio " + fmt(series.rows[2].residual / series.rows[0].residual) + ", " +
             fmt(secs) + " s";
    return ok && secs < 300.0;
}

// 8: n=2 rate study against the published error columns.
bool criterion8(std::string& detail) {
    Timer timer;
    const std::vector<double> levels = {0.10, 0.08, 0.05, 0.02, 0.01,
                                        0.008, 0.005, 0.002, 0.001, 0.0005};
    const std::vector<double> published_full = {0.0985, 0.0870, 0.0638, 0.0361, 0.0231,
                                                0.0198, 0.0144, 0.0078, 0.0048, 0.0030};
    RateReport full = run_rate_study(2, DataCase::Full, 50, levels, 10, 7, hw_threads());
    RateReport limited = run_rate_study(2, DataCase::Limited, 50, levels, 10, 7, hw_threads());

    bool ok = full.failures == 0 && limited.failures == 0 && full.kappa_valid && limited.kappa_valid;
    double worst_ratio_lo = 1e300, worst_ratio_hi = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        double ratio = full.mean_rel_error[i] / published_full[i];
        worst_ratio_lo = std::min(worst_ratio_lo, ratio);
        worst_ratio_hi = std::max(worst_ratio_hi, ratio);
        if (!(ratio >= 0.4 && ratio <= 2.0)) ok = false;
        if (!(limited.mean_rel_error[i] >= full.mean_rel_error[i])) ok = false;
    }
    if (!(full.kappa >= 0.5 && full.kappa <= 0.8)) ok = false;
    if (!(limited.kappa >= 0.3 && limited.kappa <= 0.55)) ok = false;
    double secs = timer.seconds();
    detail = "full-mean ratios in [" + fmt(worst_ratio_lo) + "," + fmt(worst_ratio_hi) +
             "], kappa_full " + fmt(full.kappa) + ", kappa_limited " + fmt(limited.kappa) + ", " +
             fmt(secs) + " s";
    return ok;
}

// 9: n=3 ordering study.
bool criterion9(std::string& detail) {
    Timer timer;
    const std::vector<double> levels = {0.10, 0.05, 0.01, 0.002};
    RateReport full = run_rate_study(3, DataCase::Full, 20, levels, 5, 7, hw_threads());
    RateReport limited = run_rate_study(3, DataCase::Limited, 20, levels, 5, 7, hw_threads());
    bool ok = full.failures == 0 && limited.failures == 0 && full.kappa_valid && limited.kappa_valid;
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (!(limited.mean_rel_error[i] >= full.mean_rel_error[i])) ok = false;
    if (!(full.kappa > limited.kappa)) ok = false;
    double secs = timer.seconds();
    detail = "kappa_full " + fmt(full.kappa) + " vs kappa_limited " + fmt(limited.kappa) + ", " +
             fmt(secs) + " s";
    return ok && secs < 1800.0;
}

// 10: log-log regression unit: planted slopes and the published column.
bool criterion10(std::string& detail) {
    double worst = 0.0;
    for (double kappa : {0.25, 0.5, 0.75}) {
        std::vector<std::pair<double, double>> pairs;
        for (double d : {0.1, 0.05, 0.01, 0.002, 0.0005})
            pairs.emplace_back(d, 2.3 * std::pow(d, kappa));
        worst = std::max(worst, std::fabs(estimate_holder(pairs) - kappa));
    }
    const std::vector<double> levels = {0.10, 0.08, 0.05, 0.02, 0.01,
                                        0.008, 0.005, 0.002, 0.001, 0.0005};
    const std::vector<double> published_full = {0.0985, 0.0870, 0.0638, 0.0361, 0.0231,
                                                0.0198, 0.0144, 0.0078, 0.0048, 0.0030};
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < levels.size(); ++i)
        pairs.emplace_back(levels[i], published_full[i]);
    double kappa_pub = estimate_holder(pairs);
    detail = "planted gap " + fmt(worst) + ", published-column kappa " + fmt(kappa_pub);
    return worst <= 1e-10 && std::fabs(kappa_pub - 0.66) <= 0.02;
}

// 11: the table CLI is byte-reproducible across runs and thread counts.
bool criterion11(std::string& detail) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path();
    fs::path a = dir / "deauto_acc11_a.csv";
    fs::path b = dir / "deauto_acc11_b.csv";
    fs::path c = dir / "deauto_acc11_c.csv";
    std::string base = std::string(DEAUTO_CLI_PATH) +
                       " table1 --n 2 --m 25 --runs 3 --levels 5,1,0.2 --seed 7 --no-timestamp";
    auto run = [&](const std::string& extra, const fs::path& out) {
        std::string cmd = base + extra + " --out-csv " + out.string();
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream buf;
        buf << is.rdbuf();
        return buf.str();
    };
    bool ok = run(" --threads 1", a) && run(" --threads 1", b) && run(" --threads 4", c);
    std::string sa = slurp(a), sb = slurp(b), sc = slurp(c);
    ok = ok && !sa.empty() && sa == sb && sa == sc;
    for (const fs::path& p : {a, b, c}) fs::remove(p);
    detail = ok ? "3 runs byte-identical" : "outputs differ or CLI failed";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    using CriterionFn = bool (*)(std::string&);
    const std::vector<std::pair<CriterionFn, const char*>> all = {
        {criterion1, "FFT autoconvolution matches the direct oracle"},
        {criterion2, "constant phantom matches the tensor-triangle closed form"},
        {criterion3, "adjoint dot test and gradient finite differences"},
        {criterion4, "nonlinearity identity, bound, and evenness"},
        {criterion5, "limited-data non-uniqueness construction"},
        {criterion6, "limited-data ill-posedness (corner sequence)"},
        {criterion7, "full-data ill-posedness (Fresnel sequence)"},
        {criterion8, "n=2 rate study matches the published table"},
        {criterion9, "n=3 ordering study"},
        {criterion10, "rate regression recovers planted and published slopes"},
        {criterion11, "table CLI determinism across thread counts"},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        int k = std::atoi(argv[i]);
        if (k < 1 || k > static_cast<int>(all.size())) {
            std::cerr << "acceptance: criterion numbers must be in 1.." << all.size() << "\n";
            return 2;
        }
        selected.insert(k);
    }
    if (selected.empty())
        for (int k = 1; k <= static_cast<int>(all.size()); ++k) selected.insert(k);

    int failures = 0;
    for (int k : selected) {
        const auto& [fn, name] = all[static_cast<std::size_t>(k - 1)];
        std::string detail;
        bool pass = false;
        try {
            pass = fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << k << ": " << name;
        if (!detail.empty()) std::cout << "  [" << detail << "]";
        std::cout << std::endl;
        if (!pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
