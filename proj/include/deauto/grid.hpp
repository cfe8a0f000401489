#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deauto {

/// Uniform n-dimensional grid: `cells` cells per axis on the box
/// [origin, origin + extent]. Values live at cell midpoints, stored
/// row-major with axis 0 slowest.
struct GridSpec {
    int dim = 1;
    int cells = 2;
    std::vector<double> origin;
    std::vector<double> extent;

    static GridSpec unit_cube(int n, int m) { return cube(n, m, 0.0, 1.0); }

    static GridSpec cube(int n, int m, double orig, double length) {
        GridSpec s;
        s.dim = n;
        s.cells = m;
        s.origin.assign(static_cast<std::size_t>(n), orig);
        s.extent.assign(static_cast<std::size_t>(n), length);
        s.validate();
        return s;
    }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("GridSpec: dim must be >= 1");
        if (cells < 2) throw std::invalid_argument("GridSpec: cells must be >= 2");
        if (origin.size() != static_cast<std::size_t>(dim) ||
            extent.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("GridSpec: origin/extent length must equal dim");
        for (double e : extent)
            if (!(e > 0.0)) throw std::invalid_argument("GridSpec: extent components must be > 0");
    }

    double mesh(int axis) const { return extent[static_cast<std::size_t>(axis)] / cells; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= mesh(a);
        return v;
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(cells);
        return n;
    }

    bool is_unit_cube() const {
        for (int a = 0; a < dim; ++a)
            if (origin[static_cast<std::size_t>(a)] != 0.0 ||
                extent[static_cast<std::size_t>(a)] != 1.0)
                return false;
        return true;
    }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && cells == o.cells && origin == o.origin && extent == o.extent;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

/// Decompose a flat row-major index into per-axis indices (axis 0 slowest).
inline std::vector<int> unflatten(std::size_t flat, const GridSpec& spec) {
    std::vector<int> idx(static_cast<std::size_t>(spec.dim));
    for (int a = spec.dim - 1; a >= 0; --a) {
        idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % spec.cells);
        flat /= static_cast<std::size_t>(spec.cells);
    }
    return idx;
}

inline std::size_t flatten(std::span<const int> idx, const GridSpec& spec) {
    std::size_t flat = 0;
    for (int a = 0; a < spec.dim; ++a)
        flat = flat * static_cast<std::size_t>(spec.cells) +
               static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return flat;
}

/// A real-valued function discretized at the cell midpoints of a GridSpec.
/// Immutable value type; every operation returns a fresh GridFn.
class GridFn {
public:
    explicit GridFn(GridSpec spec)
        : spec_(std::move(spec)), values_(spec_.size(), 0.0) {
        spec_.validate();
    }

    GridFn(GridSpec spec, std::vector<double> values)
        : spec_(std::move(spec)), values_(std::move(values)) {
        spec_.validate();
        if (values_.size() != spec_.size())
            throw std::invalid_argument("GridFn: values length " + std::to_string(values_.size()) +
                                        " does not match cells^dim = " + std::to_string(spec_.size()));
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("GridFn: non-finite value");
    }

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Midpoint coordinates of cell `flat`.
    std::vector<double> midpoint(std::size_t flat) const {
        std::vector<int> idx = unflatten(flat, spec_);
        std::vector<double> t(static_cast<std::size_t>(spec_.dim));
        for (int a = 0; a < spec_.dim; ++a)
            t[static_cast<std::size_t>(a)] =
                spec_.origin[static_cast<std::size_t>(a)] +
                (idx[static_cast<std::size_t>(a)] + 0.5) * spec_.mesh(a);
        return t;
    }

private:
    GridSpec spec_;
    std::vector<double> values_;
};

inline GridFn sample(const std::function<double(std::span<const double>)>& f,
                     const GridSpec& spec) {
    spec.validate();
    std::vector<double> vals(spec.size());
    std::vector<int> idx(static_cast<std::size_t>(spec.dim), 0);
    std::vector<double> t(static_cast<std::size_t>(spec.dim));
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        for (int a = 0; a < spec.dim; ++a)
            t[static_cast<std::size_t>(a)] =
                spec.origin[static_cast<std::size_t>(a)] +
                (idx[static_cast<std::size_t>(a)] + 0.5) * spec.mesh(a);
        vals[flat] = f(t);
        for (int a = spec.dim - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < spec.cells) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return GridFn(spec, std::move(vals));
}

/// Midpoint-rule discrete L2 inner product: (prod h_j) * sum(u*v).
inline double l2_inner(const GridFn& x, const GridFn& z) {
    if (x.spec() != z.spec())
        throw std::invalid_argument("l2_inner: grid specs differ");
    double s = 0.0;
    const auto& a = x.values();
    const auto& b = z.values();
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return x.spec().cell_volume() * s;
}

inline double l2_norm(const GridFn& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return std::sqrt(x.spec().cell_volume() * s);
}

/// a*x + b*z, elementwise. Specs must match.
inline GridFn combine(double a, const GridFn& x, double b, const GridFn& z) {
    if (x.spec() != z.spec())
        throw std::invalid_argument("combine: grid specs differ");
    std::vector<double> vals(x.size());
    const auto& xv = x.values();
    const auto& zv = z.values();
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = a * xv[i] + b * zv[i];
    return GridFn(x.spec(), std::move(vals));
}

inline GridFn project_nonneg(const GridFn& x) {
    std::vector<double> vals = x.values();
    for (double& v : vals) v = std::max(v, 0.0);
    return GridFn(x.spec(), std::move(vals));
}

/// Flat indices of cells with |value| > tol, ascending.
inline std::vector<std::size_t> support_indices(const GridFn& x, double tol) {
    if (tol < 0.0) throw std::invalid_argument("support_indices: tol must be >= 0");
    std::vector<std::size_t> out;
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::fabs(v[i]) > tol) out.push_back(i);
    return out;
}

}  // namespace deauto
