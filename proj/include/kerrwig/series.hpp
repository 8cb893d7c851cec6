#pragma once

// Analytic Wigner and Q functions of a Kerr-evolved coherent state in the
// lossless medium. All sums are written with
//
//   P_j = (2 alpha conj(gamma))^j / j!,   S_j = (2 conj(alpha) gamma)^j / j!,
//   K_k = (-|alpha|^2)^k / k!,            ph_n = exp(i tau n(n-1)/2),
//
// and the Wigner function is (2/pi) exp(-2|gamma|^2 - |alpha|^2) times
//
//   q form:          sum_{q,k} S_q conj(ph_q) P_k ph_k exp(-|alpha|^2 e^{i tau (k-q)})
//   derivative form: sum_{n,m} ph_n conj(ph_m) sum_k K_k P_{n-k} S_{m-k}
//
// The two are algebraically equal but both cancel catastrophically: the sum
// of term magnitudes exceeds the result by up to exp(4|alpha||gamma| -
// 2|gamma|^2) <= exp(2|alpha|^2), so they run in extended precision.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/float128.hpp>

#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"

namespace kerrwig {

struct SeriesPolicy {
    // Term budgets; with adaptive truncation they are floors of the budget,
    // which grows with |alpha| and |gamma|.
    std::size_t max_terms_q_form = 500;
    std::size_t max_terms_deriv_form = 100;
    int precision_digits = 30;
    double tail_tolerance = 1e-20;
    bool adaptive = true;

    void validate() const {
        if (max_terms_q_form == 0 || max_terms_deriv_form == 0) throw InvalidArgument("term budgets must be > 0");
        if (precision_digits <= 0) throw InvalidArgument("precision_digits must be > 0");
        if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0)) throw InvalidArgument("tail_tolerance must be in (0, 1)");
    }
};

/// Smallest precision at which the q form is evaluated for this |alpha|.
inline int q_form_precision_floor(Complex alpha) {
    const double a2 = std::norm(alpha);
    if (a2 <= 25.0) return 25;
    return 25 + static_cast<int>(std::ceil((2.0 * a2 - 50.0) * std::numbers::log10e));
}

namespace series_detail {

namespace mp = boost::multiprecision;

using Float128 = mp::float128;
using Float50 = mp::number<mp::cpp_bin_float<50>, mp::et_off>;
using Float100 = mp::number<mp::cpp_bin_float<100>, mp::et_off>;

template <class R>
struct Cplx {
    R re{0};
    R im{0};

    Cplx() = default;
    Cplx(R r, R i) : re(std::move(r)), im(std::move(i)) {}

    Cplx& operator+=(const Cplx& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    friend Cplx operator*(const Cplx& a, const Cplx& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cplx operator*(const Cplx& a, const R& s) { return {a.re * s, a.im * s}; }
    Cplx conj() const { return {re, -im}; }
    // a += b * c without temporaries beyond the two products.
    void fma(const Cplx& b, const Cplx& c) {
        re += b.re * c.re - b.im * c.im;
        im += b.re * c.im + b.im * c.re;
    }
    double magnitude() const { return std::hypot(static_cast<double>(re), static_cast<double>(im)); }
};

template <class R>
Cplx<R> from(Complex z) {
    return {R(z.real()), R(z.imag())};
}

// Phases are reduced in at least 64-bit-mantissa arithmetic: tau n(n-1)/2
// reaches 1e5 and every lost digit is amplified by the cancellation.
template <class R>
using PhaseReal = std::conditional_t<std::is_same_v<R, double>, long double, R>;

template <class R>
Cplx<R> unit_phase(double tau, double integer) {
    using P = PhaseReal<R>;
    const P two_pi = boost::math::constants::two_pi<P>();
    using std::floor;
    P angle = P(tau) * P(integer);
    angle -= two_pi * floor(angle / two_pi);
    using std::cos;
    using std::sin;
    return {R(cos(angle)), R(sin(angle))};
}

// Powers z^j / j! for j < count.
template <class R>
std::vector<Cplx<R>> scaled_powers(const Cplx<R>& z, std::size_t count) {
    std::vector<Cplx<R>> out(count);
    if (count == 0) return out;
    out[0] = {R(1), R(0)};
    for (std::size_t j = 1; j < count; ++j) out[j] = out[j - 1] * z * (R(1) / R(static_cast<double>(j)));
    return out;
}

// log(c^j / j!); c == 0 gives -inf for j > 0.
inline double log_poisson_term(double c, std::size_t j) {
    if (j == 0) return 0.0;
    if (c <= 0.0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(j) * std::log(c) - std::lgamma(static_cast<double>(j) + 1.0);
}

// Number of terms of c^j / j! needed before they fall below `relative` times
// the largest term, or `limit` + 1 if the limit is hit first.
inline std::size_t significant_terms(double c, double relative, std::size_t limit) {
    const double peak = log_poisson_term(c, static_cast<std::size_t>(std::floor(c)));
    const double cut = peak + std::log(relative);
    for (std::size_t j = static_cast<std::size_t>(std::floor(c)) + 1; j <= limit; ++j)
        if (log_poisson_term(c, j) < cut) return j;
    return limit + 1;
}

// Terms a Poisson-shaped factor c^j / j! contributes before it is negligible.
inline double poisson_span(double c) { return c + 12.0 * std::sqrt(c) + 60.0; }

inline std::size_t budget(std::size_t floor_terms, double estimate, bool adaptive) {
    if (!adaptive) return floor_terms;
    return std::max(floor_terms, static_cast<std::size_t>(std::ceil(estimate)));
}

// Relative size below which a term cannot affect a sum carried to `digits`
// significant digits.
inline double noise_fraction(int digits) { return std::pow(10.0, -static_cast<double>(digits) - 3.0); }

inline double triangular(std::size_t n) { return n == 0 ? 0.0 : 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

inline double prefactor_log(Complex alpha, Complex gamma) { return -2.0 * std::norm(gamma) - std::norm(alpha); }

// Stops a series once past its peak when the next term bound is below
// tol * max(|partial sum|, u * sum of bounds).
struct TailCriterion {
    double tol;
    double u;
    double bound_sum = 0.0;

    bool converged(double term_bound, double partial_magnitude, bool past_peak) {
        bound_sum += term_bound;
        return past_peak && term_bound <= tol * std::max(partial_magnitude, u * bound_sum);
    }
};

[[noreturn]] inline void insufficient(const char* form, std::size_t budget_terms, Complex gamma) {
    throw InsufficientTerms(std::string(form) + ": series not converged within " + std::to_string(budget_terms) +
                            " terms at gamma = (" + std::to_string(gamma.real()) + ", " +
                            std::to_string(gamma.imag()) + ")");
}

}  // namespace series_detail

/// Double-sum q form at fixed (alpha, tau) in arithmetic R, caching the
/// gamma-independent phases and exp(-|alpha|^2 e^{i tau d}) factors.
template <class R>
class QFormEvaluator {
public:
    // `digits` is the working accuracy; it sets where the series are cut.
    QFormEvaluator(Complex alpha, double tau, SeriesPolicy policy, int digits = std::numeric_limits<R>::digits10)
        : alpha_(alpha), tau_(tau), policy_(policy), digits_(digits) {
        policy_.validate();
    }

    // Complex value of the sum scaled to W; the imaginary part is residue.
    std::complex<double> evaluate(Complex gamma) {
        using namespace series_detail;
        const double c = 2.0 * std::abs(alpha_) * std::abs(gamma);
        const std::size_t limit = budget(policy_.max_terms_q_form, poisson_span(c), policy_.adaptive);
        const std::size_t n = significant_terms(c, noise_fraction(digits_), limit);
        if (n > limit) insufficient("q form", limit, gamma);
        ensure(n);

        const auto p = scaled_powers(from<R>(2.0 * alpha_ * std::conj(gamma)), n);
        const auto s = scaled_powers(from<R>(2.0 * std::conj(alpha_) * gamma), n);
        std::vector<Cplx<R>> y(n);
        for (std::size_t k = 0; k < n; ++k) y[k] = p[k] * phase_[k];

        const double log_pref = prefactor_log(alpha_, gamma);
        const double e_max = std::exp(std::norm(alpha_));
        double y_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) y_sum += std::exp(log_poisson_term(c, k));

        TailCriterion tail{policy_.tail_tolerance, std::pow(10.0, -static_cast<double>(digits_))};
        Cplx<R> total;
        for (std::size_t q = 0; q < n; ++q) {
            Cplx<R> inner;
            const Cplx<R>* e = e_.data() + size_ - q;  // e[k] = E_{k - q}
            for (std::size_t k = 0; k < n; ++k) inner.fma(y[k], e[k]);
            total.fma(s[q] * phase_[q].conj(), inner);
            const double bound = std::exp(log_poisson_term(c, q) + log_pref) * y_sum * e_max;
            if (tail.converged(bound, total.magnitude() * std::exp(log_pref), static_cast<double>(q) >= c)) break;
        }
        const double scale = kWignerBound * std::exp(log_pref);
        return {static_cast<double>(total.re) * scale, static_cast<double>(total.im) * scale};
    }

private:
    void ensure(std::size_t n) {
        using namespace series_detail;
        if (n <= size_) return;
        phase_.resize(n);
        for (std::size_t j = 0; j < n; ++j) phase_[j] = unit_phase<R>(tau_, triangular(j));
        // e_[n + d] = exp(-|alpha|^2 e^{i tau d}) for d in (-n, n).
        e_.assign(2 * n, Cplx<R>{});
        const R a2 = R(std::norm(alpha_));
        for (std::size_t t = 1; t < 2 * n; ++t) {
            const Cplx<R> u = unit_phase<R>(tau_, static_cast<double>(t) - static_cast<double>(n));
            using std::cos;
            using std::exp;
            using std::sin;
            const R mag = exp(-a2 * u.re);
            const R arg = -a2 * u.im;
            e_[t] = {mag * cos(arg), mag * sin(arg)};
        }
        size_ = n;
    }

    Complex alpha_;
    double tau_;
    SeriesPolicy policy_;
    int digits_;
    std::size_t size_ = 0;
    std::vector<series_detail::Cplx<R>> phase_;
    std::vector<series_detail::Cplx<R>> e_;
};

/// Derivative form at fixed (alpha, tau) in arithmetic R. The derivatives of
/// exp(-4|gamma|^2) enter through their closed form (see derivative_product);
/// the n, m, k triple sum is regrouped as
///   sum_n ph_n sum_k K_k P_{n-k} G_k,   G_k = sum_j conj(ph_{k+j}) S_j,
/// which costs O(N^2) per point instead of O(N^3).
template <class R>
class DerivFormEvaluator {
public:
    // `digits` is the working accuracy; it sets where the series are cut.
    DerivFormEvaluator(Complex alpha, double tau, SeriesPolicy policy, int digits = std::numeric_limits<R>::digits10)
        : alpha_(alpha), tau_(tau), policy_(policy), digits_(digits) {
        policy_.validate();
    }

    double evaluate(Complex gamma) { return evaluate(gamma, digits_); }

    // Cuts the series for a target of `digits` significant digits.
    double evaluate(Complex gamma, int digits) {
        using namespace series_detail;
        const double a2 = std::norm(alpha_);
        const double c = 2.0 * std::abs(alpha_) * std::abs(gamma);
        const std::size_t limit =
            budget(policy_.max_terms_deriv_form, poisson_span(a2) + poisson_span(c), policy_.adaptive);
        const std::size_t nk = significant_terms(a2, noise_fraction(digits), limit);
        const std::size_t ns = significant_terms(c, noise_fraction(digits), limit);
        if (nk > limit || ns > limit) insufficient("derivative form", limit, gamma);
        const std::size_t n_total = std::min(nk + ns - 1, limit);
        ensure(std::max(n_total, nk + ns));

        const auto p = scaled_powers(from<R>(2.0 * alpha_ * std::conj(gamma)), ns);
        const auto s = scaled_powers(from<R>(2.0 * std::conj(alpha_) * gamma), ns);
        const auto kk = scaled_powers(Cplx<R>{R(-a2), R(0)}, nk);

        std::vector<Cplx<R>> g(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            Cplx<R> acc;
            for (std::size_t j = 0; j < ns; ++j) acc.fma(phase_conj_[k + j], s[j]);
            g[k] = acc * kk[k].re;  // K_k is real
        }

        const double log_pref = prefactor_log(alpha_, gamma);
        const double log_g = c;  // |G_k| <= sum_j |S_j| = e^c
        TailCriterion tail{policy_.tail_tolerance, std::pow(10.0, -static_cast<double>(digits))};
        Cplx<R> total;
        bool converged = false;
        for (std::size_t n = 0; n < n_total; ++n) {
            Cplx<R> inner;
            const std::size_t k_lo = n + 1 > ns ? n + 1 - ns : 0;
            const std::size_t k_hi = std::min(n, nk - 1);
            for (std::size_t k = k_lo; k <= k_hi; ++k) inner.fma(p[n - k], g[k]);
            total.fma(phase_[n], inner);
            const double bound = std::exp(log_poisson_term(a2 + c, n) + log_g + log_pref);
            if (tail.converged(bound, total.magnitude() * std::exp(log_pref), static_cast<double>(n) >= a2 + c)) {
                converged = true;
                break;
            }
        }
        if (!converged && n_total < nk + ns - 1) insufficient("derivative form", limit, gamma);
        return static_cast<double>(total.re) * kWignerBound * std::exp(log_pref);
    }

private:
    void ensure(std::size_t n) {
        using namespace series_detail;
        if (n <= phase_.size()) return;
        phase_.resize(n);
        phase_conj_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            phase_[j] = unit_phase<R>(tau_, triangular(j));
            phase_conj_[j] = phase_[j].conj();
        }
    }

    Complex alpha_;
    double tau_;
    SeriesPolicy policy_;
    int digits_;
    std::vector<series_detail::Cplx<R>> phase_;
    std::vector<series_detail::Cplx<R>> phase_conj_;
};

/// Closed form of d^n/dgamma^n d^m/dgamma*^m exp(-4|gamma|^2):
///   exp(-4|gamma|^2) sum_{k <= min(n,m)} C(n,k) m!/(m-k)! (-4)^k (-4 gamma)^(m-k) (-4 gamma*)^(n-k).
inline Complex derivative_product(std::size_t n, std::size_t m, Complex gamma) {
    const Complex a = -4.0 * gamma;
    const Complex b = -4.0 * std::conj(gamma);
    Complex sum = 0.0;
    for (std::size_t k = 0; k <= std::min(n, m); ++k) {
        const double log_coef = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                std::lgamma(m + 1.0) - std::lgamma(m - k + 1.0);
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        sum += sign * std::exp(log_coef + static_cast<double>(k) * std::log(4.0)) *
               std::pow(a, static_cast<double>(m - k)) * std::pow(b, static_cast<double>(n - k));
    }
    return std::exp(-4.0 * std::norm(gamma)) * sum;
}

/// Unregrouped derivative form: every (n, m) term uses derivative_product
/// directly. O(N^3) and double precision only; meant for small |alpha| and
/// as a check of the regrouped evaluator.
inline double wigner_series_deriv_direct(Complex alpha, double tau, Complex gamma, std::size_t n_max) {
    const double a2 = std::norm(alpha);
    Complex sum = 0.0;
    for (std::size_t n = 0; n < n_max; ++n)
        for (std::size_t m = 0; m < n_max; ++m) {
            const double log_fact = std::lgamma(n + 1.0) + std::lgamma(m + 1.0);
            const Complex coef = std::pow(alpha, static_cast<double>(n)) *
                                 std::pow(std::conj(alpha), static_cast<double>(m)) * std::exp(-log_fact) /
                                 std::pow(-2.0, static_cast<double>(n + m));
            const double angle = tau * (series_detail::triangular(n) - series_detail::triangular(m));
            sum += coef * std::polar(1.0, angle) * derivative_product(n, m, gamma);
        }
    return (kWignerBound * std::exp(2.0 * std::norm(gamma) - a2) * sum).real();
}

namespace series_detail {

// Calls f.template operator()<R>() with the narrowest arithmetic carrying
// at least `digits` significant decimal digits.
template <class F>
decltype(auto) with_digits(int digits, F&& f) {
    if (digits <= 15) return f.template operator()<double>();
    if (digits <= 33) return f.template operator()<Float128>();
    if (digits <= 50) return f.template operator()<Float50>();
    if (digits <= 100) return f.template operator()<Float100>();
    throw InvalidArgument("precision of " + std::to_string(digits) + " digits is not supported (max 100)");
}

// Digits the derivative form needs at gamma: the cancellation exponent plus
// ten digits of headroom.
inline int deriv_form_digits(Complex alpha, Complex gamma) {
    const double a = std::abs(alpha);
    const double g = std::abs(gamma);
    const double loss = std::max(0.0, 4.0 * a * g - 2.0 * g * g) * std::numbers::log10e;
    return static_cast<int>(std::ceil(loss)) + 10;
}

inline void check_q_precision(Complex alpha, const SeriesPolicy& policy) {
    const int floor_digits = q_form_precision_floor(alpha);
    if (policy.precision_digits < floor_digits)
        throw PrecisionTooLow("q form needs at least " + std::to_string(floor_digits) + " digits at |alpha| = " +
                              std::to_string(std::abs(alpha)) + ", policy has " +
                              std::to_string(policy.precision_digits));
}

inline double accept_real(std::complex<double> v) {
    if (!(std::abs(v.imag()) < 1e-10))
        throw PrecisionTooLow("q form left an imaginary residue of " + std::to_string(v.imag()));
    return v.real();
}

}  // namespace series_detail

/// W(tau, gamma) from the q-form double sum in extended precision.
inline double wigner_series_q(Complex alpha, double tau, Complex gamma, const SeriesPolicy& policy = {}) {
    policy.validate();
    series_detail::check_q_precision(alpha, policy);
    return series_detail::with_digits(policy.precision_digits, [&]<class R>() {
        return series_detail::accept_real(
            QFormEvaluator<R>(alpha, tau, policy, policy.precision_digits).evaluate(gamma));
    });
}

/// W(tau, gamma) from the derivative form. Points where the sum cancels
/// fewer than five digits run in double; the rest escalate automatically.
inline double wigner_series_deriv(Complex alpha, double tau, Complex gamma, const SeriesPolicy& policy = {}) {
    policy.validate();
    const int digits = series_detail::deriv_form_digits(alpha, gamma);
    return series_detail::with_digits(
        digits, [&]<class R>() { return DerivFormEvaluator<R>(alpha, tau, policy, digits).evaluate(gamma); });
}

enum class SeriesForm { q_form, deriv_form };

/// Oracle raster on a window; evaluators are shared across points so the
/// gamma-independent tables are built once per arithmetic type.
inline CartesianRaster series_raster(SeriesForm form, Complex alpha, double tau, const CartesianWindow& window,
                                     std::size_t resolution, const SeriesPolicy& policy = {}) {
    using namespace series_detail;
    policy.validate();
    if (form == SeriesForm::q_form) {
        check_q_precision(alpha, policy);
        return with_digits(policy.precision_digits, [&]<class R>() {
            QFormEvaluator<R> ev(alpha, tau, policy, policy.precision_digits);
            return evaluate_raster(window, resolution, tau,
                                   [&](Complex g) { return accept_real(ev.evaluate(g)); });
        });
    }
    DerivFormEvaluator<double> ev_d(alpha, tau, policy, 15);
    DerivFormEvaluator<Float128> ev_q(alpha, tau, policy, 33);
    DerivFormEvaluator<Float50> ev_50(alpha, tau, policy, 50);
    DerivFormEvaluator<Float100> ev_100(alpha, tau, policy, 100);
    return evaluate_raster(window, resolution, tau, [&](Complex g) {
        const int digits = deriv_form_digits(alpha, g);
        if (digits <= 15) return ev_d.evaluate(g, digits);
        if (digits <= 33) return ev_q.evaluate(g, digits);
        if (digits <= 50) return ev_50.evaluate(g, digits);
        if (digits <= 100) return ev_100.evaluate(g, digits);
        throw InvalidArgument("derivative form would need more than 100 digits");
    });
}

/// Husimi Q(tau, gamma) = (1/pi) e^{-|alpha|^2 - |gamma|^2} |sum (alpha gamma*)^n / n! ph_n|^2,
/// summed in double with each term scaled by e^{-|alpha||gamma|}.
inline double q_function(Complex alpha, double tau, Complex gamma, const SeriesPolicy& policy = {}) {
    using namespace series_detail;
    policy.validate();
    const Complex z = alpha * std::conj(gamma);
    const double c = std::abs(z);
    const double arg = std::arg(z);
    const std::size_t limit = budget(policy.max_terms_q_form, poisson_span(c), policy.adaptive);
    TailCriterion tail{policy.tail_tolerance, 1e-16};
    Complex sum = 0.0;
    bool converged = false;
    for (std::size_t n = 0; n < limit; ++n) {
        const double mag = std::exp(log_poisson_term(c, n) - c);
        const Cplx<double> ph = unit_phase<double>(tau, triangular(n));
        sum += mag * std::polar(1.0, arg * static_cast<double>(n)) * Complex(ph.re, ph.im);
        if (tail.converged(mag, std::abs(sum), static_cast<double>(n) >= c)) {
            converged = true;
            break;
        }
    }
    if (!converged) insufficient("Q function", limit, gamma);
    const double d = std::abs(alpha) - std::abs(gamma);
    return std::exp(-d * d) * std::norm(sum) / std::numbers::pi;
}

/// Phase-averaged part of W: the Poisson mixture of Fock-state Wigner
/// functions, sum_n e^{-|alpha|^2} |alpha|^{2n}/n! (2/pi)(-1)^n L_n(4|gamma|^2) e^{-2|gamma|^2}.
/// n_max = 0 picks a count whose Poisson tail is below 1e-15.
inline double fock_static_part(Complex alpha, Complex gamma, std::size_t n_max = 0) {
    const double a2 = std::norm(alpha);
    const double a = std::sqrt(a2);
    if (n_max == 0) n_max = static_cast<std::size_t>(std::ceil(a2 + 12.0 * a + 40.0));
    // Poisson mass beyond n_max, bounded by the first omitted term over (1 - a2/(n_max+1)).
    auto log_weight = [&](std::size_t n) {
        return a2 == 0.0 ? (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity())
                         : -a2 + static_cast<double>(n) * std::log(a2) - std::lgamma(static_cast<double>(n) + 1.0);
    };
    const double ratio = a2 / (static_cast<double>(n_max) + 1.0);
    const double tail = ratio < 1.0 ? std::exp(log_weight(n_max)) / (1.0 - ratio) : 1.0;
    if (!(tail < 1e-15))
        throw InsufficientTerms("fock_static_part: Poisson tail " + std::to_string(tail) + " with n_max = " +
                                std::to_string(n_max));
    const double x = 4.0 * std::norm(gamma);
    // l_n = L_n(x) e^{-x/2}, bounded by 1.
    double l_prev = 0.0;
    double l = std::exp(-0.5 * x);
    double sum = 0.0;
    for (std::size_t n = 0; n < n_max; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        sum += std::exp(log_weight(n)) * sign * l;
        const double next = ((2.0 * n + 1.0 - x) * l - static_cast<double>(n) * l_prev) / (n + 1.0);
        l_prev = l;
        l = next;
    }
    return kWignerBound * sum;
}

}  // namespace kerrwig
