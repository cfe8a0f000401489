#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "deauto/autoconv.hpp"
#include "deauto/grid.hpp"

namespace deauto {

/// Configuration of the Tikhonov functional ||F(x)-y||_Y^2 + alpha*||x-xbar||_X^2
/// and of the projected gradient solver minimizing it.
struct TikhonovConfig {
    double alpha = 1e-6;
    GridFn xbar;
    DataCase data_case = DataCase::Full;
    bool nonneg = false;
    int max_iters = 5000;
    double grad_tol = 1e-8;  // relative, against 1 + initial gradient norm

    // Step policy: Barzilai-Borwein seeding with monotone Armijo backtracking.
    double armijo_sigma = 1e-4;
    double backtrack_factor = 0.5;
    double step_min = 1e-16;
    double step_max = 1e16;

    // Test hooks; ignored when null.
    std::vector<double>* objective_trace = nullptr;
    std::function<void(const GridFn&)>* iterate_observer = nullptr;

    explicit TikhonovConfig(GridFn reference) : xbar(std::move(reference)) {}
};

struct SolveResult {
    GridFn x;
    double objective_value = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
};

namespace detail {

inline void check_data_spec(const GridFn& x, const GridFn& ydelta, const TikhonovConfig& cfg) {
    if (x.spec() != cfg.xbar.spec())
        throw std::invalid_argument("tikhonov: x and xbar specs differ");
    if (ydelta.spec() != output_spec(x.spec(), cfg.data_case))
        throw std::invalid_argument("tikhonov: data does not live on the case's output grid");
}

}  // namespace detail

inline double objective(const GridFn& x, const GridFn& ydelta, const TikhonovConfig& cfg) {
    detail::check_data_spec(x, ydelta, cfg);
    double misfit = l2_norm(combine(1.0, autoconvolve(x, cfg.data_case), -1.0, ydelta));
    double penalty = l2_norm(combine(1.0, x, -1.0, cfg.xbar));
    return misfit * misfit + cfg.alpha * penalty * penalty;
}

/// 2 F'(x)*(F(x) - y^delta) + 2 alpha (x - xbar).
inline GridFn gradient(const GridFn& x, const GridFn& ydelta, const TikhonovConfig& cfg) {
    detail::check_data_spec(x, ydelta, cfg);
    GridFn residual = combine(1.0, autoconvolve(x, cfg.data_case), -1.0, ydelta);
    return combine(2.0, derivative_adjoint(x, residual, cfg.data_case), 2.0 * cfg.alpha,
                   combine(1.0, x, -1.0, cfg.xbar));
}

namespace detail {

struct TikEval {
    double f;
    GridFn residual;  // F(x) - ydelta
};

inline TikEval evaluate(const GridFn& x, const GridFn& ydelta, const TikhonovConfig& cfg) {
    GridFn residual = combine(1.0, autoconvolve(x, cfg.data_case), -1.0, ydelta);
    double misfit = l2_norm(residual);
    double penalty = l2_norm(combine(1.0, x, -1.0, cfg.xbar));
    double f = misfit * misfit + cfg.alpha * penalty * penalty;
    if (!std::isfinite(f))
        throw std::runtime_error("tikhonov minimize: non-finite objective (alpha=" +
                                 std::to_string(cfg.alpha) + ")");
    return {f, std::move(residual)};
}

inline GridFn gradient_from_residual(const GridFn& x, const GridFn& residual,
                                     const TikhonovConfig& cfg) {
    return combine(2.0, derivative_adjoint(x, residual, cfg.data_case), 2.0 * cfg.alpha,
                   combine(1.0, x, -1.0, cfg.xbar));
}

/// Per-solve FFT workspace for the inner loop of minimize. An objective
/// evaluation keeps the iterate's spectrum alive so the follow-up adjoint
/// (gradient) costs one forward transform of the residual instead of two;
/// residual extraction and the misfit sum are fused into one pass.
class TikKernel {
public:
    TikKernel(const GridSpec& xspec, const GridFn& ydelta, const TikhonovConfig& cfg)
        : cfg_(&cfg),
          yd_(&ydelta),
          m_(xspec.cells),
          dim_(xspec.dim),
          lout_(cfg.data_case == DataCase::Full ? 2 * xspec.cells - 1 : xspec.cells),
          L_(next_fast_size(2 * xspec.cells - 1)),
          plans_(CubePlans::get(xspec.dim, L_)),
          bx_(plans_.real_size(), plans_.complex_size()),
          bw_(plans_.real_size(), plans_.complex_size()),
          volx_(xspec.cell_volume()),
          voly_(output_spec(xspec, cfg.data_case).cell_volume()),
          residual_(ydelta.size()) {}

    /// Objective at x. Leaves DFT(x) and F(x)-ydelta in the workspace.
    double evaluate(const GridFn& x) {
        embed_cube(x.values(), m_, dim_, L_, bx_.re, plans_.real_size());
        plans_.forward(bx_.re, bx_.cx);
        const double scale = 1.0 / static_cast<double>(plans_.real_size());
        for (std::size_t i = 0; i < plans_.complex_size(); ++i) {
            const double ar = bx_.cx[i][0], ai = bx_.cx[i][1];
            bw_.cx[i][0] = (ar * ar - ai * ai) * scale;
            bw_.cx[i][1] = (ar * ai + ai * ar) * scale;
        }
        plans_.backward(bw_.cx, bw_.re);
        const double* yd = yd_->values().data();
        double misfit2 = 0.0;
        visit_corner_rows(lout_, dim_, L_, [&](std::size_t d, std::size_t s) {
            for (int i = 0; i < lout_; ++i) {
                const double r = volx_ * bw_.re[s + static_cast<std::size_t>(i)] -
                                 yd[d + static_cast<std::size_t>(i)];
                residual_[d + static_cast<std::size_t>(i)] = r;
                misfit2 += r * r;
            }
        });
        misfit2 *= voly_;
        double pen2 = 0.0;
        const double* xv = x.values().data();
        const double* xb = cfg_->xbar.values().data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = xv[i] - xb[i];
            pen2 += d * d;
        }
        const double f = misfit2 + cfg_->alpha * volx_ * pen2;
        if (!std::isfinite(f))
            throw std::runtime_error("tikhonov minimize: non-finite objective (alpha=" +
                                     std::to_string(cfg_->alpha) + ")");
        return f;
    }

    /// Gradient at the point of the most recent evaluate() call (which must
    /// have been x): 2 F'(x)*(F(x)-ydelta) + 2 alpha (x - xbar).
    GridFn gradient(const GridFn& x) {
        embed_cube(residual_, lout_, dim_, L_, bw_.re, plans_.real_size());
        plans_.forward(bw_.re, bw_.cx);
        const double scale = 1.0 / static_cast<double>(plans_.real_size());
        for (std::size_t i = 0; i < plans_.complex_size(); ++i) {
            const double wr = bw_.cx[i][0], wi = bw_.cx[i][1];
            const double xr = bx_.cx[i][0], xi = bx_.cx[i][1];
            // W * conj(X), as in fft_correlate_cube
            bw_.cx[i][0] = (wr * xr + wi * xi) * scale;
            bw_.cx[i][1] = (wi * xr - wr * xi) * scale;
        }
        plans_.backward(bw_.cx, bw_.re);
        std::vector<double> g(x.size());
        const double adj_factor = 2.0 * voly_;
        const double pen_factor = 2.0 * cfg_->alpha;
        const double* xv = x.values().data();
        const double* xb = cfg_->xbar.values().data();
        visit_corner_rows(m_, dim_, L_, [&](std::size_t d, std::size_t s) {
            for (int i = 0; i < m_; ++i) {
                const std::size_t k = d + static_cast<std::size_t>(i);
                g[k] = 2.0 * (adj_factor * bw_.re[s + static_cast<std::size_t>(i)]) +
                       pen_factor * (xv[k] - xb[k]);
            }
        });
        return GridFn(x.spec(), std::move(g));
    }

private:
    const TikhonovConfig* cfg_;
    const GridFn* yd_;
    int m_, dim_, lout_, L_;
    const CubePlans& plans_;
    FftwBuffer bx_, bw_;
    double volx_, voly_;
    std::vector<double> residual_;
};

}  // namespace detail

/// Projected gradient descent with Barzilai-Borwein step seeding and monotone
/// Armijo backtracking. Deterministic; objective non-increasing across
/// accepted iterates. Stops on relative (projected) gradient norm, objective
/// stagnation, or max_iters.
inline SolveResult minimize(const GridFn& ydelta, const GridFn& x0, const TikhonovConfig& cfg) {
    detail::check_data_spec(x0, ydelta, cfg);
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("minimize: alpha must be > 0");
    if (!(cfg.grad_tol > 0.0)) throw std::invalid_argument("minimize: grad_tol must be > 0");
    if (cfg.max_iters < 1) throw std::invalid_argument("minimize: max_iters must be >= 1");

    auto project = [&cfg](const GridFn& g) { return cfg.nonneg ? project_nonneg(g) : g; };
    auto proj_grad_norm = [&](const GridFn& x, const GridFn& g) {
        if (!cfg.nonneg) return l2_norm(g);
        return l2_norm(combine(1.0, x, -1.0, project(combine(1.0, x, -1.0, g))));
    };

    GridFn x = project(x0);
    if (cfg.nonneg) {
        for (double v : x0.values())
            if (v < 0.0) throw std::invalid_argument("minimize: x0 infeasible for nonneg solve");
    }

    detail::TikKernel kernel(x.spec(), ydelta, cfg);
    double f = kernel.evaluate(x);
    GridFn g = kernel.gradient(x);
    double pgn0 = proj_grad_norm(x, g);
    double pgn = pgn0;
    const double stop_level = cfg.grad_tol * (1.0 + pgn0);

    if (cfg.objective_trace) cfg.objective_trace->push_back(f);
    if (cfg.iterate_observer) (*cfg.iterate_observer)(x);

    double step = 0.1 * (1.0 + l2_norm(x)) / std::max(pgn0, 1e-300);
    step = std::clamp(step, cfg.step_min, cfg.step_max);

    int iters = 0;
    bool converged = pgn <= stop_level;
    double window_best = f;
    int window_count = 0;

    while (!converged && iters < cfg.max_iters) {
        // Backtracking line search along the projected gradient path.
        double t = step;
        GridFn xnew = x;
        double fnew = f;
        bool accepted = false;
        while (t >= cfg.step_min) {
            GridFn trial = project(combine(1.0, x, -t, g));
            double ftrial = kernel.evaluate(trial);
            double decrease = l2_inner(g, combine(1.0, trial, -1.0, x));
            if (ftrial <= f + cfg.armijo_sigma * decrease && ftrial <= f) {
                xnew = std::move(trial);
                fnew = ftrial;
                accepted = true;
                break;
            }
            t *= cfg.backtrack_factor;
        }
        if (!accepted) break;  // no further descent at step_min scale

        // The kernel still holds xnew's spectrum and residual from the
        // accepting evaluate, so the gradient is one transform away.
        GridFn gnew = kernel.gradient(xnew);
        GridFn s = combine(1.0, xnew, -1.0, x);
        GridFn ygrad = combine(1.0, gnew, -1.0, g);
        double sy = l2_inner(s, ygrad);
        double ss = l2_inner(s, s);
        step = (sy > 0.0) ? std::clamp(ss / sy, cfg.step_min, cfg.step_max)
                          : std::clamp(2.0 * t, cfg.step_min, cfg.step_max);

        x = std::move(xnew);
        f = fnew;
        g = std::move(gnew);
        ++iters;
        pgn = proj_grad_norm(x, g);
        if (cfg.objective_trace) cfg.objective_trace->push_back(f);
        if (cfg.iterate_observer) (*cfg.iterate_observer)(x);

        if (pgn <= stop_level) {
            converged = true;
            break;
        }
        // Stagnation: relative decrease below 1e-12 over 10 iterations.
        if (fnew > window_best * (1.0 - 1e-12)) {
            if (++window_count >= 10) break;
        } else {
            window_best = fnew;
            window_count = 0;
        }
    }

    return SolveResult{std::move(x), f, iters, converged, pgn};
}

struct AlphaTrial {
    double alpha = 0.0;
    double error = 0.0;  // ||x_alpha - xdagger||_X
    int iterations = 0;
    bool converged = false;
    bool ok = false;
    std::string message;
};

struct AlphaSelection {
    double alpha = 0.0;
    double error = 0.0;
    GridFn x;
    std::vector<AlphaTrial> trials;
};

/// 24 log-spaced candidates in [1e-10, 1e-1] scaled by ||ydelta||_Y^2.
inline std::vector<double> default_alpha_grid(double ynorm) {
    const double scale = ynorm * ynorm;
    std::vector<double> grid(24);
    for (int j = 0; j < 24; ++j)
        grid[static_cast<std::size_t>(j)] = scale * std::pow(10.0, -10.0 + 9.0 * j / 23.0);
    return grid;
}

/// Oracle parameter choice: solve per alpha (descending, warm-started) and
/// pick the alpha minimizing ||x_alpha - xdagger||_X, then refine once by
/// golden section in log alpha between the grid neighbors of the best point.
inline AlphaSelection select_alpha_opt(const GridFn& ydelta, const GridFn& xdagger,
                                       const TikhonovConfig& cfg_base,
                                       std::vector<double> alpha_grid) {
    if (alpha_grid.empty()) throw std::invalid_argument("select_alpha_opt: empty alpha grid");
    for (double a : alpha_grid)
        if (!(a > 0.0)) throw std::invalid_argument("select_alpha_opt: alphas must be > 0");
    std::sort(alpha_grid.begin(), alpha_grid.end());
    alpha_grid.erase(std::unique(alpha_grid.begin(), alpha_grid.end()), alpha_grid.end());

    AlphaSelection sel{0.0, std::numeric_limits<double>::infinity(), cfg_base.xbar, {}};
    sel.trials.resize(alpha_grid.size());
    GridFn warm = cfg_base.xbar;
    std::size_t best_idx = 0;
    bool any_ok = false;

    auto solve_at = [&](double alpha, const GridFn& start, AlphaTrial& trial) -> std::optional<SolveResult> {
        TikhonovConfig cfg = cfg_base;
        cfg.alpha = alpha;
        trial.alpha = alpha;
        try {
            SolveResult res = minimize(ydelta, start, cfg);
            trial.error = l2_norm(combine(1.0, res.x, -1.0, xdagger));
            trial.iterations = res.iterations;
            trial.converged = res.converged;
            trial.ok = true;
            return res;
        } catch (const std::exception& e) {
            trial.ok = false;
            trial.message = e.what();
            return std::nullopt;
        }
    };

    for (std::size_t k = alpha_grid.size(); k-- > 0;) {
        AlphaTrial& trial = sel.trials[k];
        auto res = solve_at(alpha_grid[k], warm, trial);
        if (!res) continue;
        warm = res->x;
        any_ok = true;
        if (trial.error < sel.error) {
            sel.error = trial.error;
            sel.alpha = trial.alpha;
            sel.x = std::move(res->x);
            best_idx = k;
        }
    }
    if (!any_ok) {
        std::string msg = "select_alpha_opt: all solves failed:";
        for (const auto& t : sel.trials) msg += " [alpha=" + std::to_string(t.alpha) + ": " + t.message + "]";
        throw std::runtime_error(msg);
    }

    // Golden-section refinement in log alpha, at most 10 extra solves.
    double lo = (best_idx > 0) ? alpha_grid[best_idx - 1] : alpha_grid[best_idx];
    double hi = (best_idx + 1 < alpha_grid.size()) ? alpha_grid[best_idx + 1] : alpha_grid[best_idx];
    if (hi > lo) {
        double a = std::log(lo), b = std::log(hi);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        auto eval_err = [&](double loga) {
            AlphaTrial trial;
            auto res = solve_at(std::exp(loga), sel.x, trial);
            sel.trials.push_back(trial);
            if (res && trial.error < sel.error) {
                sel.error = trial.error;
                sel.alpha = trial.alpha;
                sel.x = std::move(res->x);
            }
            return trial.ok ? trial.error : std::numeric_limits<double>::infinity();
        };
        double fc = eval_err(c), fd = eval_err(d);
        for (int it = 0; it < 8; ++it) {
            if (fc < fd) {
                b = d; d = c; fd = fc;
                c = b - gr * (b - a);
                fc = eval_err(c);
            } else {
                a = c; c = d; fc = fd;
                d = a + gr * (b - a);
                fd = eval_err(d);
            }
        }
    }
    return sel;
}

inline AlphaSelection select_alpha_opt(const GridFn& ydelta, const GridFn& xdagger,
                                       const TikhonovConfig& cfg_base) {
    return select_alpha_opt(ydelta, xdagger, cfg_base, default_alpha_grid(l2_norm(ydelta)));
}

}  // namespace deauto
