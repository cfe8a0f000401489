#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>

#include "deauto/grid.hpp"

namespace deauto {

/// The exact densities of the numerical study and their tensor products.
enum class PhantomId { X1, X2, X3, Product2D, Product3D };

inline int phantom_dim(PhantomId id) {
    switch (id) {
        case PhantomId::Product2D: return 2;
        case PhantomId::Product3D: return 3;
        default: return 1;
    }
}

inline const char* to_string(PhantomId id) {
    switch (id) {
        case PhantomId::X1: return "x1";
        case PhantomId::X2: return "x2";
        case PhantomId::X3: return "x3";
        case PhantomId::Product2D: return "product2d";
        case PhantomId::Product3D: return "product3d";
    }
    return "?";
}

namespace detail {

inline double density_x1(double t) { return 2.0 * (t + 1.0) / 3.0; }

inline double density_x2(double t) {
    const double pi = std::numbers::pi;
    return pi / (2.0 + pi) * (std::cos((t - 0.5) * pi) + 1.0);
}

// Jump at 1/2; the half point takes the right branch.
inline double density_x3(double t) { return t < 0.5 ? 1.25 : t; }

inline void require_unit_domain(std::span<const double> t) {
    for (double c : t)
        if (!(c >= 0.0 && c <= 1.0))
            throw std::domain_error("density: argument outside [0,1]^n");
}

}  // namespace detail

inline double density(PhantomId id, std::span<const double> t) {
    if (t.size() != static_cast<std::size_t>(phantom_dim(id)))
        throw std::invalid_argument("density: argument dimension mismatch");
    detail::require_unit_domain(t);
    switch (id) {
        case PhantomId::X1: return detail::density_x1(t[0]);
        case PhantomId::X2: return detail::density_x2(t[0]);
        case PhantomId::X3: return detail::density_x3(t[0]);
        case PhantomId::Product2D:
            return detail::density_x1(t[0]) * detail::density_x2(t[1]);
        case PhantomId::Product3D:
            return detail::density_x1(t[0]) * detail::density_x2(t[1]) * detail::density_x3(t[2]);
    }
    throw std::invalid_argument("density: unknown phantom");
}

inline GridFn sample_phantom(PhantomId id, int cells) {
    GridSpec spec = GridSpec::unit_cube(phantom_dim(id), cells);
    return sample([id](std::span<const double> t) { return density(id, t); }, spec);
}

namespace detail {

// Asymptotic tail of int_s^inf exp(i t^2) dt by repeated integration by
// parts; converges fast for s >= 8 (term ratio (2k-1)/(2 s^2)).
inline std::complex<double> fresnel_tail(double s) {
    const std::complex<double> i2(0.0, 2.0);
    const std::complex<double> phase(std::cos(s * s), std::sin(s * s));
    std::complex<double> term = 1.0 / (i2 * s);
    std::complex<double> sum = term;
    for (int k = 1; k <= 24; ++k) {
        term *= static_cast<double>(2 * k - 1) / (i2 * s * s);
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    return -phase * sum;
}

constexpr double kFresnelSplit = 8.0;
constexpr double kFresnelLimit = 0.62665706865775012;  // sqrt(pi/8)

}  // namespace detail

/// Fresnel integral S(s) = int_0^s sin(t^2) dt (unnormalized convention).
inline double fresnel_S(double s) {
    if (s < 0.0) throw std::domain_error("fresnel_S: s must be >= 0");
    if (s > detail::kFresnelSplit)
        return detail::kFresnelLimit - detail::fresnel_tail(s).imag();
    if (s == 0.0) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(
        [](double t) { return std::sin(t * t); }, 0.0, s, 12, 1e-13);
}

/// Fresnel integral C(s) = int_0^s cos(t^2) dt.
inline double fresnel_C(double s) {
    if (s < 0.0) throw std::domain_error("fresnel_C: s must be >= 0");
    if (s > detail::kFresnelSplit)
        return detail::kFresnelLimit - detail::fresnel_tail(s).real();
    if (s == 0.0) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(
        [](double t) { return std::cos(t * t); }, 0.0, s, 12, 1e-13);
}

/// Oscillatory perturbation sqrt(2)*r*sin(k^2 t1^2), constant along the
/// remaining axes: weakly but not strongly null as k grows.
inline GridFn fresnel_perturbation(int k, double r, const GridSpec& spec) {
    if (k < 1) throw std::invalid_argument("fresnel_perturbation: k must be >= 1");
    if (r <= 0.0) throw std::invalid_argument("fresnel_perturbation: r must be > 0");
    spec.validate();
    if (!spec.is_unit_cube())
        throw std::invalid_argument("fresnel_perturbation: spec must be the unit cube");
    const double kk = static_cast<double>(k) * k;
    const double amp = std::sqrt(2.0) * r;
    return sample(
        [kk, amp](std::span<const double> t) { return amp * std::sin(kk * t[0] * t[0]); }, spec);
}

/// Indicator perturbation k^{n/2}*r on [1-1/k,1]^n; discrete L2 norm exactly r.
inline GridFn corner_perturbation(int k, double r, const GridSpec& spec) {
    if (k < 3) throw std::invalid_argument("corner_perturbation: k must be >= 3");
    if (r <= 0.0) throw std::invalid_argument("corner_perturbation: r must be > 0");
    spec.validate();
    if (!spec.is_unit_cube())
        throw std::invalid_argument("corner_perturbation: spec must be the unit cube");
    if (spec.cells % k != 0)
        throw std::invalid_argument("corner_perturbation: k must divide the cell count");
    const int m = spec.cells;
    const int first = m - m / k;
    const double value = std::pow(static_cast<double>(k), spec.dim / 2.0) * r;
    std::vector<double> vals(spec.size(), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(spec.dim), 0);
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        bool corner = true;
        for (int a = 0; a < spec.dim; ++a)
            if (idx[static_cast<std::size_t>(a)] < first) { corner = false; break; }
        if (corner) vals[flat] = value;
        for (int a = spec.dim - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return GridFn(spec, std::move(vals));
}

}  // namespace deauto
