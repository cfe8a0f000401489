#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "deauto/autoconv.hpp"
#include "deauto/grid.hpp"
#include "deauto/phantoms.hpp"
#include "deauto/regularize.hpp"

namespace deauto {

struct NoiseSpec {
    double delta_rel = 0.0;  // target ||y^delta - y|| / ||y||, hit exactly
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// seed0 + hash(level index, run index): any subset of cells reproduces
/// identically.
inline std::uint64_t cell_seed(std::uint64_t seed0, std::size_t level_idx, std::size_t run_idx) {
    return seed0 + splitmix64((static_cast<std::uint64_t>(level_idx) << 32) |
                              static_cast<std::uint64_t>(run_idx));
}

/// Standard normals via Box-Muller on explicit mt19937_64 uniforms, so the
/// stream is identical across standard libraries.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}
    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }
    double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace detail

/// y + delta_rel * ||y|| * g / ||g|| for a seeded i.i.d. normal draw g;
/// relative noise norm is exact by construction.
inline GridFn add_noise(const GridFn& y, const NoiseSpec& spec) {
    if (spec.delta_rel < 0.0) throw std::invalid_argument("add_noise: delta_rel must be >= 0");
    if (spec.delta_rel == 0.0) return y;
    const double ynorm = l2_norm(y);
    if (ynorm == 0.0)
        throw std::invalid_argument("add_noise: zero data admits no relative noise level");
    detail::NormalStream rng(spec.seed);
    std::vector<double> g(y.size());
    for (double& v : g) v = rng.next();
    GridFn noise(y.spec(), std::move(g));
    const double gnorm = l2_norm(noise);
    return combine(1.0, y, spec.delta_rel * ynorm / gnorm, noise);
}

/// OLS slope of log(error) against log(delta): the Holder exponent kappa of
/// error = O(delta^kappa).
inline double estimate_holder(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3)
        throw std::invalid_argument("estimate_holder: need at least 3 (delta, error) pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [d, e] : pairs) {
        if (!(d > 0.0) || !(e > 0.0))
            throw std::domain_error("estimate_holder: deltas and errors must be positive");
        const double lx = std::log(d), ly = std::log(e);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(pairs.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct RateCell {
    double level = 0.0;  // relative noise level (fraction, not percent)
    int run = 0;
    std::uint64_t seed = 0;
    double rel_error = 0.0;
    double alpha = 0.0;
    int iterations = 0;
    bool ok = false;
    std::string message;
};

struct RateReport {
    int dim = 0;
    int cells = 0;
    DataCase data_case = DataCase::Full;
    std::vector<double> levels;
    int runs = 0;
    std::uint64_t seed0 = 0;
    std::vector<RateCell> cell_results;          // ordered by (level, run)
    std::vector<double> mean_rel_error;          // per level, over ok runs
    std::vector<double> stddev_rel_error;        // per level
    double kappa = std::numeric_limits<double>::quiet_NaN();
    bool kappa_valid = false;
    int failures = 0;
    double wall_seconds = 0.0;
};

/// Table-style rate study: x^dagger is the n-dimensional product density,
/// y = F(x^dagger); per (level, run) cell draw noise, pick alpha by the
/// oracle rule, and record the relative reconstruction error. Cells are
/// independent jobs; the aggregate is a deterministic reduce by (level, run).
inline RateReport run_rate_study(int n, DataCase data_case, int m, std::vector<double> levels,
                                 int runs, std::uint64_t seed0, int threads = 1) {
    if (n != 2 && n != 3) throw std::invalid_argument("run_rate_study: n must be 2 or 3");
    if (levels.empty()) throw std::invalid_argument("run_rate_study: levels must be nonempty");
    if (runs < 1) throw std::invalid_argument("run_rate_study: runs must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    GridFn xdagger = sample_phantom(n == 2 ? PhantomId::Product2D : PhantomId::Product3D, m);
    GridFn y = autoconvolve(xdagger, data_case);
    const double xnorm = l2_norm(xdagger);
    GridFn xbar = sample([](std::span<const double>) { return 0.5; }, xdagger.spec());

    RateReport report;
    report.dim = n;
    report.cells = m;
    report.data_case = data_case;
    report.levels = levels;
    report.runs = runs;
    report.seed0 = seed0;
    report.cell_results.resize(levels.size() * static_cast<std::size_t>(runs));

    auto run_cell = [&](std::size_t li, std::size_t ri) {
        RateCell& cell = report.cell_results[li * static_cast<std::size_t>(runs) + ri];
        cell.level = levels[li];
        cell.run = static_cast<int>(ri);
        cell.seed = detail::cell_seed(seed0, li, ri);
        try {
            GridFn ydelta = add_noise(y, NoiseSpec{levels[li], cell.seed});
            TikhonovConfig cfg(xbar);
            cfg.data_case = data_case;
            cfg.nonneg = (data_case == DataCase::Limited);
            AlphaSelection sel = select_alpha_opt(ydelta, xdagger, cfg);
            cell.rel_error = sel.error / xnorm;
            cell.alpha = sel.alpha;
            for (const auto& trial : sel.trials) cell.iterations += trial.iterations;
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.message = e.what();
        }
    };

    const std::size_t total = report.cell_results.size();
    if (threads <= 1) {
        for (std::size_t li = 0; li < levels.size(); ++li)
            for (std::size_t ri = 0; ri < static_cast<std::size_t>(runs); ++ri) run_cell(li, ri);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t c = next.fetch_add(1); c < total; c = next.fetch_add(1))
                run_cell(c / static_cast<std::size_t>(runs), c % static_cast<std::size_t>(runs));
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min<int>(threads, static_cast<int>(total));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    report.mean_rel_error.assign(levels.size(), std::numeric_limits<double>::quiet_NaN());
    report.stddev_rel_error.assign(levels.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::pair<double, double>> kappa_pairs;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        double sum = 0.0, sum2 = 0.0;
        int count = 0;
        for (int ri = 0; ri < runs; ++ri) {
            const RateCell& cell = report.cell_results[li * static_cast<std::size_t>(runs) +
                                                       static_cast<std::size_t>(ri)];
            if (!cell.ok) {
                ++report.failures;
                continue;
            }
            sum += cell.rel_error;
            sum2 += cell.rel_error * cell.rel_error;
            ++count;
        }
        if (count > 0) {
            const double mean = sum / count;
            report.mean_rel_error[li] = mean;
            report.stddev_rel_error[li] =
                count > 1 ? std::sqrt(std::max(0.0, (sum2 - count * mean * mean) / (count - 1)))
                          : 0.0;
            if (levels[li] > 0.0 && mean > 0.0) kappa_pairs.emplace_back(levels[li], mean);
        }
    }
    if (kappa_pairs.size() >= 3) {
        report.kappa = estimate_holder(kappa_pairs);
        report.kappa_valid = true;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// ||F(x) - F(-x)||_Y: zero to rounding, since F is even.
inline double check_twofoldness(const GridFn& x, DataCase data_case) {
    GridFn minus_x = combine(-1.0, x, 0.0, x);
    return l2_norm(combine(1.0, autoconvolve(x, data_case), -1.0, autoconvolve(minus_x, data_case)));
}

struct NonuniqueResult {
    double residual = 0.0;  // ||F(x+h) - F(x)|| over the limited grid
    double distance = 0.0;  // ||h||
};

/// Limited-data non-uniqueness construction: x^dagger >= 0 vanishing on the
/// first q cells per axis, h supported on the last q cells per axis with
/// x^dagger + h >= 0. The data residual vanishes while ||h|| > 0. With
/// violate_support_condition the shift is skipped (negative control).
inline NonuniqueResult check_nonuniqueness(int n, int m, int q, std::uint64_t seed,
                                           bool violate_support_condition = false) {
    if (n < 1 || n > 3) throw std::invalid_argument("check_nonuniqueness: n must be in {1,2,3}");
    if (q < 1 || 2 * q >= m)
        throw std::invalid_argument("check_nonuniqueness: need 1 <= q < m/2");
    const double eps = static_cast<double>(q) / m;
    PhantomId id = n == 1 ? PhantomId::X1 : (n == 2 ? PhantomId::Product2D : PhantomId::Product3D);
    GridSpec spec = GridSpec::unit_cube(n, m);

    GridFn xdagger = violate_support_condition
                         ? sample_phantom(id, m)
                         : sample(
                               [&](std::span<const double> t) {
                                   std::vector<double> shifted(t.size());
                                   for (std::size_t a = 0; a < t.size(); ++a) {
                                       if (t[a] < eps) return 0.0;
                                       shifted[a] = (t[a] - eps) / (1.0 - eps);
                                   }
                                   return density(id, shifted);
                               },
                               spec);

    // h lives on the top corner cube [1-q/m, 1]^n, bounded below by -x^dagger.
    detail::NormalStream rng(seed);
    std::vector<double> hv(spec.size(), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t flat = 0; flat < hv.size(); ++flat) {
        bool corner = true;
        for (int a = 0; a < n; ++a)
            if (idx[static_cast<std::size_t>(a)] < m - q) { corner = false; break; }
        if (corner) {
            // Mean well above zero so the violated variant's cross term
            // x^dagger * h adds up coherently instead of cancelling.
            const double u = 16.0 * rng.uniform01();
            hv[flat] = std::max(u, -xdagger[flat]);
        }
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    GridFn h(spec, std::move(hv));
    GridFn perturbed = combine(1.0, xdagger, 1.0, h);
    NonuniqueResult out;
    out.residual = l2_norm(combine(1.0, autoconvolve(perturbed, DataCase::Limited), -1.0,
                                   autoconvolve(xdagger, DataCase::Limited)));
    out.distance = l2_norm(h);
    return out;
}

struct IllposedRow {
    int k = 0;
    double distance = 0.0;  // ||x_k - x^dagger||_X
    double residual = 0.0;  // ||F(x_k) - F(x^dagger)||_Y
    double bound = 0.0;     // r*||x^dagger||/k^{n/2}; 0 when not applicable
};

/// Corner-indicator sequence driving limited-data ill-posedness: distance
/// stays r while the image residual obeys the proof's k^{-n/2} bound.
inline std::vector<IllposedRow> demo_illposed_limited(int n, int m, double r,
                                                      const std::vector<int>& ks) {
    if (n < 1 || n > 3) throw std::invalid_argument("demo_illposed_limited: n must be in {1,2,3}");
    if (r < 0.0) throw std::invalid_argument("demo_illposed_limited: r must be >= 0");
    GridFn xdagger = sample_phantom(
        n == 1 ? PhantomId::X1 : (n == 2 ? PhantomId::Product2D : PhantomId::Product3D), m);
    GridFn y = autoconvolve(xdagger, DataCase::Limited);
    const double xnorm = l2_norm(xdagger);

    std::vector<IllposedRow> rows;
    for (int k : ks) {
        IllposedRow row;
        row.k = k;
        if (r == 0.0) {
            rows.push_back(row);
            continue;
        }
        GridFn hk = corner_perturbation(k, r, xdagger.spec());
        GridFn xk = combine(1.0, xdagger, 1.0, hk);
        row.distance = l2_norm(hk);
        row.residual = l2_norm(combine(1.0, autoconvolve(xk, DataCase::Limited), -1.0, y));
        row.bound = r * xnorm / std::pow(static_cast<double>(k), n / 2.0);
        rows.push_back(row);
    }
    return rows;
}

struct IllposedFullSeries {
    std::vector<IllposedRow> rows;  // bound unused (0)
    std::vector<GridFn> x_diffs;    // x_k - x^dagger, per k
    std::vector<GridFn> y_diffs;    // y_k - y, per k
    bool under_resolved = false;    // mesh too coarse for sin(k^2 t^2)
};

/// Fresnel sequence driving full-data ill-posedness: distance stays in
/// (r/2, r) while the image residual decays ~ 1/k. Difference grids are kept
/// for plotting.
inline IllposedFullSeries demo_illposed_full(int n, int m, double r, const std::vector<int>& ks,
                                             const GridFn& xdagger) {
    if (r < 0.0) throw std::invalid_argument("demo_illposed_full: r must be >= 0");
    if (xdagger.spec().dim != n || xdagger.spec().cells != m || !xdagger.spec().is_unit_cube())
        throw std::invalid_argument("demo_illposed_full: xdagger must be an m-cell unit n-cube grid");
    GridFn y = autoconvolve(xdagger, DataCase::Full);

    IllposedFullSeries series;
    for (int k : ks)
        if (m < 10.0 * k * k / std::numbers::pi) series.under_resolved = true;
    for (int k : ks) {
        IllposedRow row;
        row.k = k;
        if (r == 0.0) {
            series.rows.push_back(row);
            series.x_diffs.emplace_back(xdagger.spec());
            series.y_diffs.emplace_back(output_spec(xdagger.spec(), DataCase::Full));
            continue;
        }
        GridFn hk = fresnel_perturbation(k, r, xdagger.spec());
        GridFn xk = combine(1.0, xdagger, 1.0, hk);
        GridFn ydiff = combine(1.0, autoconvolve(xk, DataCase::Full), -1.0, y);
        row.distance = l2_norm(hk);
        row.residual = l2_norm(ydiff);
        series.rows.push_back(row);
        series.x_diffs.push_back(std::move(hk));
        series.y_diffs.push_back(std::move(ydiff));
    }
    return series;
}

}  // namespace deauto
