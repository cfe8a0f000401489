#pragma once

#include <unordered_set>
#include <utility>

#include "deauto/fft_conv.hpp"
#include "deauto/grid.hpp"

namespace deauto {

/// Full: x*x observed on all of [0,2]^n (2m-1 cells per axis).
/// Limited: observation restricted to [0,1]^n (m cells per axis).
enum class DataCase { Full, Limited };

inline const char* to_string(DataCase c) { return c == DataCase::Full ? "full" : "limited"; }

inline GridSpec output_spec(const GridSpec& in, DataCase c) {
    if (c == DataCase::Full) return GridSpec::cube(in.dim, 2 * in.cells - 1, 0.0, 2.0);
    return in;
}

/// Output coordinate convention: entry j represents s = (j+1)*h per axis.
inline double output_coord(int j, int m) { return static_cast<double>(j + 1) / m; }

namespace detail {

inline void require_unit_cube(const GridFn& x, const char* who) {
    if (!x.spec().is_unit_cube())
        throw std::invalid_argument(std::string(who) + ": input must live on the unit cube");
}

/// Restrict a full-convolution cube (side 2m-1) to indices with every
/// component <= m-1, i.e. the limited-data window.
inline std::vector<double> restrict_to_limited(const std::vector<double>& full, int m, int dim) {
    return extract_cube(full.data(), 2 * m - 1, dim, m);
}

/// Direct O(m^{2n}) linear convolution of two m-cubes; oracle path.
inline std::vector<double> naive_convolve_cube(const std::vector<double>& a,
                                               const std::vector<double>& b, int m, int dim) {
    const int lo = 2 * m - 1;
    std::size_t in_total = a.size();
    std::size_t out_total = 1;
    for (int d = 0; d < dim; ++d) out_total *= static_cast<std::size_t>(lo);
    // Map each input flat index to its flat offset in the output layout.
    std::vector<std::size_t> off(in_total);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t i = 0; i < in_total; ++i) {
        std::size_t o = 0;
        for (int d = 0; d < dim; ++d)
            o = o * static_cast<std::size_t>(lo) + static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
        off[i] = o;
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < m) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }
    std::vector<double> out(out_total, 0.0);
    for (std::size_t i = 0; i < in_total; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const std::size_t oi = off[i];
        for (std::size_t j = 0; j < in_total; ++j) out[oi + off[j]] += ai * b[j];
    }
    return out;
}

inline GridFn make_output(std::vector<double> full_conv, const GridSpec& in, DataCase c,
                          double scale) {
    const int m = in.cells;
    std::vector<double> vals = (c == DataCase::Full)
                                   ? std::move(full_conv)
                                   : restrict_to_limited(full_conv, m, in.dim);
    for (double& v : vals) v *= scale;
    return GridFn(output_spec(in, c), std::move(vals));
}

}  // namespace detail

/// Discrete autoconvolution y = F(x): y[j] = (prod h) * sum_i x[i]*x[j-i],
/// truncated to the data case's window. FFT path.
inline GridFn autoconvolve(const GridFn& x, DataCase c) {
    detail::require_unit_cube(x, "autoconvolve");
    const int m = x.spec().cells;
    auto conv = detail::fft_convolve_cube(x.values(), m, x.values(), m, x.spec().dim);
    return detail::make_output(std::move(conv), x.spec(), c, x.spec().cell_volume());
}

/// Same contract as autoconvolve, computed by direct summation. Oracle for
/// the FFT path; intended for small grids.
inline GridFn autoconvolve_naive(const GridFn& x, DataCase c) {
    detail::require_unit_cube(x, "autoconvolve_naive");
    const int m = x.spec().cells;
    auto conv = detail::naive_convolve_cube(x.values(), x.values(), m, x.spec().dim);
    return detail::make_output(std::move(conv), x.spec(), c, x.spec().cell_volume());
}

/// Frechet derivative action F'(x) d = 2 x*d on the case's output grid.
inline GridFn derivative_apply(const GridFn& x, const GridFn& d, DataCase c) {
    detail::require_unit_cube(x, "derivative_apply");
    if (x.spec() != d.spec())
        throw std::invalid_argument("derivative_apply: grid specs differ");
    const int m = x.spec().cells;
    auto conv = detail::fft_convolve_cube(x.values(), m, d.values(), m, x.spec().dim);
    return detail::make_output(std::move(conv), x.spec(), c, 2.0 * x.spec().cell_volume());
}

/// Exact discrete transpose of d -> F'(x)d with respect to the midpoint-rule
/// L2 inner products on both sides: (F'(x)* w)[l] = 2*volY * sum_j w[j]*x[j-l].
inline GridFn derivative_adjoint(const GridFn& x, const GridFn& w, DataCase c) {
    detail::require_unit_cube(x, "derivative_adjoint");
    if (w.spec() != output_spec(x.spec(), c))
        throw std::invalid_argument("derivative_adjoint: w does not live on the case's output grid");
    const int m = x.spec().cells;
    const int lw = w.spec().cells;
    auto corr = detail::fft_correlate_cube(w.values(), lw, x.values(), m, x.spec().dim, m);
    // <A d, w>_Y = volY * sum_j 2*volX*(x conv d)[j] * w[j]
    //            = volX * sum_l d[l] * 2*volY*(w corr x)[l] = <d, A* w>_X.
    const double factor = 2.0 * w.spec().cell_volume();
    for (double& v : corr) v *= factor;
    return GridFn(x.spec(), std::move(corr));
}

/// lhs = ||F(xt) - F(x) - F'(x)(xt-x)||_Y, rhs = ||xt-x||_X^2.
/// By the quadratic structure lhs equals ||F(xt-x)||_Y to rounding.
inline std::pair<double, double> nonlinearity_residual(const GridFn& x, const GridFn& xt,
                                                       DataCase c) {
    if (x.spec() != xt.spec())
        throw std::invalid_argument("nonlinearity_residual: grid specs differ");
    GridFn diff = combine(1.0, xt, -1.0, x);
    GridFn taylor_rem = combine(1.0, combine(1.0, autoconvolve(xt, c), -1.0, autoconvolve(x, c)),
                                -1.0, derivative_apply(x, diff, c));
    double lhs = l2_norm(taylor_rem);
    double nd = l2_norm(diff);
    return {lhs, nd * nd};
}

/// Verifies supp(f*g) subset of supp(f)+supp(g) at the discrete level: every
/// above-tol index of the full convolution must be an index sum of above-tol
/// input cells.
inline bool support_inclusion_check(const GridFn& f, const GridFn& g, double tol) {
    if (f.spec() != g.spec())
        throw std::invalid_argument("support_inclusion_check: grid specs differ");
    detail::require_unit_cube(f, "support_inclusion_check");
    const int m = f.spec().cells;
    const int dim = f.spec().dim;
    auto conv = detail::fft_convolve_cube(f.values(), m, g.values(), m, dim);
    GridSpec out = GridSpec::cube(dim, 2 * m - 1, 0.0, 2.0);

    auto sf = support_indices(f, tol);
    auto sg = support_indices(g, tol);
    std::unordered_set<std::size_t> sums;
    sums.reserve(sf.size() * sg.size());
    std::vector<int> sum_idx(static_cast<std::size_t>(dim));
    for (std::size_t a : sf) {
        std::vector<int> ia = unflatten(a, f.spec());
        for (std::size_t b : sg) {
            std::vector<int> ib = unflatten(b, g.spec());
            for (int d = 0; d < dim; ++d)
                sum_idx[static_cast<std::size_t>(d)] = ia[static_cast<std::size_t>(d)] + ib[static_cast<std::size_t>(d)];
            sums.insert(flatten(sum_idx, out));
        }
    }
    // Output tolerance on the rounding scale of the convolution entries.
    double maxabs = 0.0;
    for (double v : conv) maxabs = std::max(maxabs, std::fabs(v));
    const double out_tol = std::max(tol, 1e-12 * maxabs);
    for (std::size_t j = 0; j < conv.size(); ++j)
        if (std::fabs(conv[j]) > out_tol && sums.find(j) == sums.end()) return false;
    return true;
}

}  // namespace deauto
