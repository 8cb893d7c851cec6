#pragma once

// Five-point finite-difference weights on offsets -2 .. 2 and their tensor
// products for mixed derivatives.

#include <array>
#include <span>

#include "kerrwig/errors.hpp"

namespace kerrwig {

using Stencil5 = std::array<double, 5>;
// weights[di + 2][dj + 2] for a 5x5 patch, first index along r.
using Stencil5x5 = std::array<std::array<double, 5>, 5>;

namespace detail {
inline void require_spacing(double h) {
    if (!(h > 0.0)) throw InvalidArgument("stencil spacing must be > 0");
}
}  // namespace detail

// (f[-2] - 8 f[-1] + 8 f[1] - f[2]) / 12h
inline Stencil5 stencil_first_derivative(double h) {
    detail::require_spacing(h);
    const double s = 1.0 / (12.0 * h);
    return {s, -8.0 * s, 0.0, 8.0 * s, -s};
}

// (-f[-2] + 16 f[-1] - 30 f[0] + 16 f[1] - f[2]) / 12h^2
inline Stencil5 stencil_second_derivative(double h) {
    detail::require_spacing(h);
    const double s = 1.0 / (12.0 * h * h);
    return {-s, 16.0 * s, -30.0 * s, 16.0 * s, -s};
}

// (-f[-2] + 2 f[-1] - 2 f[1] + f[2]) / 2h^3
inline Stencil5 stencil_third_derivative(double h) {
    detail::require_spacing(h);
    const double s = 1.0 / (2.0 * h * h * h);
    return {-s, 2.0 * s, 0.0, -2.0 * s, s};
}

// Identity weight (offset 0 only), used to lift 1-D stencils onto the patch.
inline Stencil5 stencil_identity() { return {0.0, 0.0, 1.0, 0.0, 0.0}; }

inline Stencil5x5 tensor_product(const Stencil5& along_r, const Stencil5& along_phi) {
    Stencil5x5 out{};
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) out[a][b] = along_r[a] * along_phi[b];
    return out;
}

inline double apply_stencil(const Stencil5& w, std::span<const double, 5> f) {
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += w[k] * f[k];
    return s;
}

inline double apply_stencil(const Stencil5x5& w, const std::array<std::array<double, 5>, 5>& f) {
    double s = 0.0;
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) s += w[a][b] * f[a][b];
    return s;
}

}  // namespace kerrwig
