#pragma once

// Phase-space geometry: polar grids, Wigner fields sampled on them, cartesian
// rasters, the coherent initial condition and polar quadrature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kerrwig/errors.hpp"

namespace kerrwig {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Peak value of any single-mode Wigner function, |W| <= 2/pi.
inline constexpr double kWignerBound = 2.0 / std::numbers::pi;

/// Point gamma = r e^{i phi} of phase space with phi normalized to [0, 2pi).
class PhasePoint {
public:
    PhasePoint() = default;

    PhasePoint(double r, double phi) : r_(r), phi_(wrap_angle(phi)) {
        if (!(r >= 0.0)) throw InvalidArgument("PhasePoint: r must be >= 0");
    }

    static PhasePoint from_cartesian(Complex gamma) {
        double phi = std::atan2(gamma.imag(), gamma.real());
        return PhasePoint(std::abs(gamma), phi);
    }

    double r() const noexcept { return r_; }
    double phi() const noexcept { return phi_; }
    double re() const noexcept { return r_ * std::cos(phi_); }
    double im() const noexcept { return r_ * std::sin(phi_); }
    Complex gamma() const noexcept { return std::polar(r_, phi_); }

    static double wrap_angle(double phi) noexcept {
        double w = std::fmod(phi, kTwoPi);
        if (w < 0.0) w += kTwoPi;
        // fmod of a value just below 0 can round back up to exactly 2pi.
        if (w >= kTwoPi) w = 0.0;
        return w;
    }

private:
    double r_ = 0.0;
    double phi_ = 0.0;
};

/// Uniform polar mesh. Rings sit at r_i = (i + 1) dr, i = 0 .. n_r - 1, so the
/// singular origin is never a node and the outermost ring lies at r_max.
/// Angles are phi_j = j dphi and the azimuthal direction is periodic.
class PolarGrid {
public:
    PolarGrid() = default;

    PolarGrid(std::size_t n_r, std::size_t n_phi, double r_max)
        : n_r_(n_r), n_phi_(n_phi), r_max_(r_max) {
        if (n_r < 5 || n_phi < 5)
            throw InvalidArgument("PolarGrid: need at least 5 points per axis (got " +
                                  std::to_string(n_r) + "x" + std::to_string(n_phi) + ")");
        if (!(r_max > 0.0) || !std::isfinite(r_max))
            throw InvalidArgument("PolarGrid: r_max must be positive");
    }

    std::size_t n_r() const noexcept { return n_r_; }
    std::size_t n_phi() const noexcept { return n_phi_; }
    std::size_t size() const noexcept { return n_r_ * n_phi_; }
    double r_max() const noexcept { return r_max_; }
    double dr() const noexcept { return r_max_ / static_cast<double>(n_r_); }
    double dphi() const noexcept { return kTwoPi / static_cast<double>(n_phi_); }

    double radius(std::size_t i) const noexcept { return static_cast<double>(i + 1) * dr(); }
    double angle(std::size_t j) const noexcept { return static_cast<double>(j) * dphi(); }

    std::size_t wrap_phi(long j) const noexcept {
        long n = static_cast<long>(n_phi_);
        long w = j % n;
        return static_cast<std::size_t>(w < 0 ? w + n : w);
    }

    // phi runs fastest.
    std::size_t index(std::size_t i, long j) const noexcept { return n_phi_ * i + wrap_phi(j); }

    PhasePoint point(std::size_t i, std::size_t j) const { return {radius(i), angle(j)}; }

    friend bool operator==(const PolarGrid& a, const PolarGrid& b) noexcept {
        return a.n_r_ == b.n_r_ && a.n_phi_ == b.n_phi_ && a.r_max_ == b.r_max_;
    }

private:
    std::size_t n_r_ = 5;
    std::size_t n_phi_ = 5;
    double r_max_ = 1.0;
};

/// r_max = max(5, 2.5 |alpha|).
inline double default_r_max(Complex alpha) { return std::max(5.0, 2.5 * std::abs(alpha)); }

/// Wigner function W(tau, r, phi) sampled on a PolarGrid.
class WignerField {
public:
    WignerField() = default;

    WignerField(PolarGrid grid, double tau, std::vector<double> values)
        : grid_(grid), tau_(tau), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw DimensionMismatch("WignerField: expected " + std::to_string(grid_.size()) +
                                    " values, got " + std::to_string(values_.size()));
    }

    static WignerField zeros(PolarGrid grid, double tau = 0.0) {
        return WignerField(grid, tau, std::vector<double>(grid.size(), 0.0));
    }

    const PolarGrid& grid() const noexcept { return grid_; }
    double tau() const noexcept { return tau_; }
    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t i, long j) const noexcept { return values_[grid_.index(i, j)]; }

    bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    PolarGrid grid_;
    double tau_ = 0.0;
    std::vector<double> values_;
};

/// Axis-aligned rectangle [re_min, re_max] x [im_min, im_max] of phase space.
struct CartesianWindow {
    double re_min = -1.0;
    double re_max = 1.0;
    double im_min = -1.0;
    double im_max = 1.0;

    static CartesianWindow square(double half) { return {-half, half, -half, half}; }

    double area() const noexcept { return (re_max - re_min) * (im_max - im_min); }

    bool valid() const noexcept { return re_max > re_min && im_max > im_min; }

    friend bool operator==(const CartesianWindow&, const CartesianWindow&) = default;
};

/// resolution x resolution samples on a square mesh spanning the window with
/// both endpoints included. Row-major, rows follow Im(gamma), columns Re(gamma).
class CartesianRaster {
public:
    CartesianRaster() = default;

    CartesianRaster(CartesianWindow window, std::size_t resolution, double tau, std::vector<double> values)
        : window_(window), resolution_(resolution), tau_(tau), values_(std::move(values)) {
        if (resolution_ < 2) throw InvalidArgument("CartesianRaster: resolution must be >= 2");
        if (!window_.valid()) throw InvalidArgument("CartesianRaster: empty window");
        if (values_.size() != resolution_ * resolution_)
            throw DimensionMismatch("CartesianRaster: value count does not match resolution");
    }

    const CartesianWindow& window() const noexcept { return window_; }
    std::size_t resolution() const noexcept { return resolution_; }
    std::size_t size() const noexcept { return values_.size(); }
    double tau() const noexcept { return tau_; }
    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t row, std::size_t col) const noexcept { return values_[row * resolution_ + col]; }

    double re_at(std::size_t col) const noexcept { return node(window_.re_min, window_.re_max, col); }
    double im_at(std::size_t row) const noexcept { return node(window_.im_min, window_.im_max, row); }
    Complex gamma_at(std::size_t row, std::size_t col) const noexcept { return {re_at(col), im_at(row)}; }

private:
    double node(double lo, double hi, std::size_t k) const noexcept {
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(resolution_ - 1);
    }

    CartesianWindow window_;
    std::size_t resolution_ = 2;
    double tau_ = 0.0;
    std::vector<double> values_;
};

/// Evaluates f(gamma) at every node of a raster.
template <class F>
CartesianRaster evaluate_raster(const CartesianWindow& window, std::size_t resolution, double tau, F&& f) {
    CartesianRaster shape(window, resolution, tau, std::vector<double>(resolution * resolution, 0.0));
    std::vector<double> values(resolution * resolution);
    for (std::size_t row = 0; row < resolution; ++row)
        for (std::size_t col = 0; col < resolution; ++col)
            values[row * resolution + col] = f(shape.gamma_at(row, col));
    return CartesianRaster(window, resolution, tau, std::move(values));
}

/// Coherent-state Wigner function (2/pi) exp(-2 |alpha - gamma|^2).
inline double coherent_wigner(Complex alpha, Complex gamma) {
    return kWignerBound * std::exp(-2.0 * std::norm(alpha - gamma));
}

/// Vacuum Wigner function (2/pi) exp(-2 r^2).
inline double vacuum_wigner(double r) { return kWignerBound * std::exp(-2.0 * r * r); }

inline WignerField coherent_wigner_init(Complex alpha, const PolarGrid& grid) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.n_r(); ++i)
        for (std::size_t j = 0; j < grid.n_phi(); ++j)
            values[grid.index(i, static_cast<long>(j))] = coherent_wigner(alpha, grid.point(i, j).gamma());
    return WignerField(grid, 0.0, std::move(values));
}

/// Integral of W over phase space, sum over rings of W r dr dphi: trapezoid in
/// r (the r = 0 node contributes r W = 0) and the periodic rectangle rule in phi.
inline double phase_space_integral(const WignerField& field) {
    const PolarGrid& g = field.grid();
    double radial = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        double ring = 0.0;
        for (std::size_t j = 0; j < g.n_phi(); ++j) ring += field.at(i, static_cast<long>(j));
        double weight = (i + 1 == g.n_r()) ? 0.5 : 1.0;
        radial += weight * g.radius(i) * ring;
    }
    return radial * g.dr() * g.dphi();
}

namespace detail {

// Azimuthal linear interpolation on ring i at angle phi.
inline double ring_value(const WignerField& field, std::size_t i, double phi) {
    const PolarGrid& g = field.grid();
    double u = PhasePoint::wrap_angle(phi) / g.dphi();
    double j0 = std::floor(u);
    double w = u - j0;
    long j = static_cast<long>(j0);
    return (1.0 - w) * field.at(i, j) + w * field.at(i, j + 1);
}

}  // namespace detail

/// Bilinear (r, phi) interpolation of the polar field at gamma. Inside the
/// first ring the value is interpolated along the diameter through the origin,
/// between ring 0 at phi + pi and ring 0 at phi. The field is 0 beyond r_max.
inline double interpolate(const WignerField& field, Complex gamma) {
    const PolarGrid& g = field.grid();
    double r = std::abs(gamma);
    if (r > g.r_max() * (1.0 + 1e-12)) return 0.0;
    double phi = std::atan2(gamma.imag(), gamma.real());
    double dr = g.dr();
    if (r < dr) {
        double t = (r + dr) / (2.0 * dr);
        return (1.0 - t) * detail::ring_value(field, 0, phi + std::numbers::pi) +
               t * detail::ring_value(field, 0, phi);
    }
    double s = r / dr - 1.0;
    auto i0 = static_cast<std::size_t>(std::floor(s));
    if (i0 >= g.n_r() - 1) i0 = g.n_r() - 2;
    double t = s - static_cast<double>(i0);
    return (1.0 - t) * detail::ring_value(field, i0, phi) + t * detail::ring_value(field, i0 + 1, phi);
}

inline CartesianRaster sample_window(const WignerField& field, const CartesianWindow& window,
                                     std::size_t resolution) {
    if (!window.valid()) throw InvalidArgument("sample_window: empty window");
    const double r_max = field.grid().r_max();
    for (double re : {window.re_min, window.re_max})
        for (double im : {window.im_min, window.im_max})
            if (std::hypot(re, im) > r_max)
                throw WindowExceedsGrid("sample_window: corner (" + std::to_string(re) + ", " +
                                        std::to_string(im) + ") lies outside r_max = " +
                                        std::to_string(r_max));
    return evaluate_raster(window, resolution, field.tau(),
                           [&](Complex gamma) { return interpolate(field, gamma); });
}

}  // namespace kerrwig
