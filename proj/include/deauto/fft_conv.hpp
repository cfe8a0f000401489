#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace deauto::detail {

/// Smallest integer >= n with no prime factor beyond 7 (fast FFTW sizes).
inline int next_fast_size(int n) {
    if (n < 1) return 1;
    for (int c = n;; ++c) {
        int r = c;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return c;
    }
}

struct FftwBuffer {
    double* re = nullptr;
    fftw_complex* cx = nullptr;
    explicit FftwBuffer(std::size_t nre, std::size_t ncx) {
        re = static_cast<double*>(fftw_malloc(sizeof(double) * nre));
        cx = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ncx));
        if (!re || !cx) {
            release();
            throw std::bad_alloc();
        }
    }
    ~FftwBuffer() { release(); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

private:
    void release() {
        if (re) fftw_free(re);
        if (cx) fftw_free(cx);
        re = nullptr;
        cx = nullptr;
    }
};

/// FFTW plans for a cube of side L in `dim` dimensions. Plans are created
/// once per (dim, L) under a lock and reused via the new-array interface,
/// which is thread-safe. FFTW_ESTIMATE keeps planning deterministic.
class CubePlans {
public:
    static const CubePlans& get(int dim, int L) {
        static std::map<std::pair<int, int>, CubePlans*> cache;
        static std::mutex mtx;
        std::lock_guard<std::mutex> lock(mtx);
        auto key = std::make_pair(dim, L);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, new CubePlans(dim, L)).first;
        return *it->second;
    }

    std::size_t real_size() const { return nre_; }
    std::size_t complex_size() const { return ncx_; }

    void forward(double* in, fftw_complex* out) const {
        fftw_execute_dft_r2c(fwd_, in, out);
    }
    void backward(fftw_complex* in, double* out) const {
        fftw_execute_dft_c2r(bwd_, in, out);
    }

private:
    CubePlans(int dim, int L) {
        std::vector<int> n(static_cast<std::size_t>(dim), L);
        nre_ = 1;
        for (int a = 0; a < dim; ++a) nre_ *= static_cast<std::size_t>(L);
        ncx_ = nre_ / static_cast<std::size_t>(L) * static_cast<std::size_t>(L / 2 + 1);
        FftwBuffer scratch(nre_, ncx_);
        fwd_ = fftw_plan_dft_r2c(dim, n.data(), scratch.re, scratch.cx, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(dim, n.data(), scratch.cx, scratch.re, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
    }

    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
    std::size_t nre_ = 0;
    std::size_t ncx_ = 0;
};

/// Visit the contiguous innermost rows of an l-cube corner inside an L-cube:
/// fn(cube_offset, padded_offset) per row of length l. Row-wise keeps the
/// copies on the memcpy fast path instead of per-element index decoding.
template <class RowFn>
inline void visit_corner_rows(int l, int dim, int L, RowFn&& fn) {
    std::size_t rows = 1;
    for (int a = 0; a + 1 < dim; ++a) rows *= static_cast<std::size_t>(l);
    std::vector<int> idx(static_cast<std::size_t>(dim > 1 ? dim - 1 : 1), 0);
    std::size_t cube_off = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t off = 0;
        for (int a = 0; a + 1 < dim; ++a)
            off = off * static_cast<std::size_t>(L) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        fn(cube_off, off * static_cast<std::size_t>(L));
        cube_off += static_cast<std::size_t>(l);
        for (int a = dim - 2; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < l) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
}

/// Copy a `dim`-cube of side `l` into the corner of a zeroed cube of side L.
inline void embed_cube(const std::vector<double>& src, int l, int dim, int L, double* dst,
                       std::size_t dst_total) {
    std::fill(dst, dst + dst_total, 0.0);
    visit_corner_rows(l, dim, L, [&](std::size_t s, std::size_t d) {
        std::copy_n(src.data() + s, static_cast<std::size_t>(l), dst + d);
    });
}

/// Extract the corner cube of side `l` from a cube of side L.
inline std::vector<double> extract_cube(const double* src, int L, int dim, int l) {
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(l);
    std::vector<double> out(total);
    visit_corner_rows(l, dim, L, [&](std::size_t d, std::size_t s) {
        std::copy_n(src + s, static_cast<std::size_t>(l), out.data() + d);
    });
    return out;
}

/// Full linear convolution of two dim-cubes (sides la, lb): output cube of
/// side la+lb-1, out[j] = sum_i a[i]*b[j-i]. Unscaled coefficient sum.
inline std::vector<double> fft_convolve_cube(const std::vector<double>& a, int la,
                                             const std::vector<double>& b, int lb, int dim) {
    const int lo = la + lb - 1;
    const int L = next_fast_size(lo);
    const CubePlans& plans = CubePlans::get(dim, L);
    const bool same = (&a == &b) && la == lb;  // autoconvolution: one transform
    FftwBuffer ba(plans.real_size(), plans.complex_size());
    FftwBuffer bb(same ? 1 : plans.real_size(), same ? 1 : plans.complex_size());
    embed_cube(a, la, dim, L, ba.re, plans.real_size());
    plans.forward(ba.re, ba.cx);
    fftw_complex* bcx = ba.cx;
    if (!same) {
        embed_cube(b, lb, dim, L, bb.re, plans.real_size());
        plans.forward(bb.re, bb.cx);
        bcx = bb.cx;
    }
    const double scale = 1.0 / static_cast<double>(plans.real_size());
    for (std::size_t i = 0; i < plans.complex_size(); ++i) {
        const double ar = ba.cx[i][0], ai = ba.cx[i][1];
        const double br = bcx[i][0], bi = bcx[i][1];
        ba.cx[i][0] = (ar * br - ai * bi) * scale;
        ba.cx[i][1] = (ar * bi + ai * br) * scale;
    }
    plans.backward(ba.cx, ba.re);
    return extract_cube(ba.re, L, dim, lo);
}

/// Cross-correlation out[l] = sum_j w[j]*x[j-l] for l in [0, lout)^dim,
/// with w a cube of side lw and x a cube of side lx. The pad size rules out
/// circular wrap-around for the requested output range.
inline std::vector<double> fft_correlate_cube(const std::vector<double>& w, int lw,
                                              const std::vector<double>& x, int lx, int dim,
                                              int lout) {
    const int L = next_fast_size(std::max(lw, lx + lout - 1));
    const CubePlans& plans = CubePlans::get(dim, L);
    FftwBuffer bw(plans.real_size(), plans.complex_size());
    FftwBuffer bx(plans.real_size(), plans.complex_size());
    embed_cube(w, lw, dim, L, bw.re, plans.real_size());
    plans.forward(bw.re, bw.cx);
    embed_cube(x, lx, dim, L, bx.re, plans.real_size());
    plans.forward(bx.re, bx.cx);
    const double scale = 1.0 / static_cast<double>(plans.real_size());
    for (std::size_t i = 0; i < plans.complex_size(); ++i) {
        const double wr = bw.cx[i][0], wi = bw.cx[i][1];
        const double xr = bx.cx[i][0], xi = bx.cx[i][1];
        // W * conj(X)
        bw.cx[i][0] = (wr * xr + wi * xi) * scale;
        bw.cx[i][1] = (wi * xr - wr * xi) * scale;
    }
    plans.backward(bw.cx, bw.re);
    return extract_cube(bw.re, L, dim, lout);
}

}  // namespace deauto::detail
