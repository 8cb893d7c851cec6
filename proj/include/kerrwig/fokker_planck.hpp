#pragma once

// Finite-difference discretization of the Kerr Fokker-Planck operator on the
// polar grid and the implicit theta-scheme time stepper built on band LU.
//
// The operator, with W = W(tau, r, phi):
//
//   dW/dtau = -(r^2 - 1) dW/dphi
//             + (1/16) [ d_r^2 d_phi + (1/r) d_r d_phi + (1/r^2) d_phi^3 ] W
//             + xi W + (xi/2) (r + (1/2)(1/2 + N)/r) dW/dr
//             + (xi/4)(1/2 + N) [ d_r^2 + (1/r^2) d_phi^2 ] W

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kerrwig/band_matrix.hpp"
#include "kerrwig/config.hpp"
#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"
#include "kerrwig/stencil.hpp"

namespace kerrwig {

/// r-dependent prefactors of every derivative term at one ring.
struct FpTerms {
    double d_phi = 0.0;       // dW/dphi
    double d_r_d_phi = 0.0;   // d_r d_phi W
    double d_rr_d_phi = 0.0;  // d_r^2 d_phi W
    double d_phi3 = 0.0;      // d_phi^3 W
    double constant = 0.0;    // W
    double d_r = 0.0;         // dW/dr
    double d_rr = 0.0;        // d_r^2 W
    double d_phiphi = 0.0;    // d_phi^2 W
};

inline FpTerms fp_terms_at(double r, double xi, double n_thermal) {
    const double diffusion = 0.5 + n_thermal;
    FpTerms t;
    t.d_phi = -(r * r - 1.0);
    t.d_r_d_phi = 1.0 / (16.0 * r);
    t.d_rr_d_phi = 1.0 / 16.0;
    t.d_phi3 = 1.0 / (16.0 * r * r);
    t.constant = xi;
    t.d_r = 0.5 * xi * (r + 0.5 * diffusion / r);
    t.d_rr = 0.25 * xi * diffusion;
    t.d_phiphi = 0.25 * xi * diffusion / (r * r);
    return t;
}

/// 5x5 patch weights of L at one ring, built from the 1-D stencils.
inline Stencil5x5 ring_weights(const FpTerms& t, double dr, double dphi) {
    const Stencil5 id = stencil_identity();
    const Stencil5 r1 = stencil_first_derivative(dr);
    const Stencil5 r2 = stencil_second_derivative(dr);
    const Stencil5 p1 = stencil_first_derivative(dphi);
    const Stencil5 p2 = stencil_second_derivative(dphi);
    const Stencil5 p3 = stencil_third_derivative(dphi);

    Stencil5x5 w{};
    auto accumulate = [&w](const Stencil5x5& part, double factor) {
        if (factor == 0.0) return;
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) w[a][b] += factor * part[a][b];
    };
    accumulate(tensor_product(id, p1), t.d_phi);
    accumulate(tensor_product(r1, p1), t.d_r_d_phi);
    accumulate(tensor_product(r2, p1), t.d_rr_d_phi);
    accumulate(tensor_product(id, p3), t.d_phi3);
    accumulate(tensor_product(id, id), t.constant);
    accumulate(tensor_product(r1, id), t.d_r);
    accumulate(tensor_product(r2, id), t.d_rr);
    accumulate(tensor_product(id, p2), t.d_phiphi);
    return w;
}

/// W(tau, 0, 0) = (2/pi) exp(-2 |alpha|^2 e^{-tau xi}).
inline double center_value(Complex alpha, double xi, double tau) {
    return kWignerBound * std::exp(-2.0 * std::norm(alpha) * std::exp(-tau * xi));
}

/// Spatial operator L (dW/dtau = L W) as per-ring stencil weights plus the
/// rule for closing stencils at the inner and outer edges.
class StencilCoefficients {
public:
    // Reference of a stencil entry: a field index, or the center value.
    static constexpr std::size_t kCenter = static_cast<std::size_t>(-1);

    StencilCoefficients(PolarGrid grid, double xi, double n_thermal, InnerClosure closure)
        : grid_(grid), xi_(xi), n_thermal_(n_thermal), closure_(closure), weights_(grid.n_r()) {
        if (closure == InnerClosure::reflect && grid.n_phi() % 2 != 0)
            throw InvalidArgument("reflecting inner closure needs an even n_phi");
        for (std::size_t i = 0; i < grid.n_r(); ++i)
            weights_[i] = ring_weights(fp_terms_at(grid.radius(i), xi, n_thermal), grid.dr(), grid.dphi());
    }

    const PolarGrid& grid() const noexcept { return grid_; }
    double xi() const noexcept { return xi_; }
    double n_thermal() const noexcept { return n_thermal_; }
    InnerClosure closure() const noexcept { return closure_; }

    // Rings [first_evolved, last_evolved) obey the PDE; the rest are constraint rows.
    std::size_t first_evolved() const noexcept { return closure_ == InnerClosure::center_pinned ? 2 : 0; }
    std::size_t last_evolved() const noexcept { return grid_.n_r() - 2; }
    bool evolved_ring(std::size_t i) const noexcept { return i >= first_evolved() && i < last_evolved(); }

    // Weight of offset (di, dj), each in -2 .. 2, at ring i.
    double at(std::size_t i, int di, int dj) const { return weights_.at(i)[di + 2][dj + 2]; }
    const Stencil5x5& ring(std::size_t i) const { return weights_.at(i); }

    /// Calls f(reference, weight) for the 25 stencil entries of evolved point
    /// (i, j) after the inner closure has been applied.
    template <class F>
    void for_each_entry(std::size_t i, std::size_t j, F&& f) const {
        const Stencil5x5& w = weights_[i];
        const long n_phi = static_cast<long>(grid_.n_phi());
        for (int di = -2; di <= 2; ++di) {
            const long ii = static_cast<long>(i) + di;
            for (int dj = -2; dj <= 2; ++dj) {
                const double v = w[di + 2][dj + 2];
                if (v == 0.0) continue;
                const long jj = static_cast<long>(j) + dj;
                if (ii >= 0) {
                    f(grid_.index(static_cast<std::size_t>(ii), jj), v);
                } else if (ii == -1 || closure_ == InnerClosure::center_ghost) {
                    f(kCenter, v);
                } else {
                    // Radius (ii + 1) dr < 0 is the point at -(ii + 1) dr on the opposite ray.
                    f(grid_.index(static_cast<std::size_t>(-ii - 2), jj + n_phi / 2), v);
                }
            }
        }
    }

private:
    PolarGrid grid_;
    double xi_;
    double n_thermal_;
    InnerClosure closure_;
    std::vector<Stencil5x5> weights_;
};

inline StencilCoefficients assemble_operator(const SimulationConfig& config,
                                             InnerClosure closure = InnerClosure::reflect) {
    config.validate();
    return StencilCoefficients(config.grid, config.xi, config.n_thermal, closure);
}

/// L W on evolved points (zero on constraint rows); `center` supplies the
/// value referenced at r = 0.
inline std::vector<double> apply_operator(const StencilCoefficients& op, std::span<const double> w,
                                          double center) {
    const PolarGrid& g = op.grid();
    if (w.size() != g.size())
        throw DimensionMismatch("apply_operator: field has " + std::to_string(w.size()) + " values, grid has " +
                                std::to_string(g.size()));
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = op.first_evolved(); i < op.last_evolved(); ++i)
        for (std::size_t j = 0; j < g.n_phi(); ++j) {
            double s = 0.0;
            op.for_each_entry(i, j, [&](std::size_t ref, double v) {
                s += v * (ref == StencilCoefficients::kCenter ? center : w[ref]);
            });
            out[g.index(i, static_cast<long>(j))] = s;
        }
    return out;
}

/// Bijection between field indices k = n_phi i_r + j_phi and rows of the
/// linear system.
class IndexMap {
public:
    explicit IndexMap(PolarGrid grid, SystemOrdering ordering = SystemOrdering::natural)
        : grid_(grid), ordering_(ordering), slot_(grid.n_phi()), angle_of_slot_(grid.n_phi()) {
        const std::size_t n = grid.n_phi();
        const std::size_t half = (n + 1) / 2;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t p = j;
            if (ordering == SystemOrdering::folded) p = j < half ? 2 * j : 2 * (n - 1 - j) + 1;
            slot_[j] = p;
            angle_of_slot_[p] = j;
        }
    }

    const PolarGrid& grid() const noexcept { return grid_; }
    SystemOrdering ordering() const noexcept { return ordering_; }
    std::size_t size() const noexcept { return grid_.size(); }

    std::size_t row(std::size_t field_index) const noexcept {
        const std::size_t n = grid_.n_phi();
        return (field_index / n) * n + slot_[field_index % n];
    }

    std::size_t field_index(std::size_t row) const noexcept {
        const std::size_t n = grid_.n_phi();
        return (row / n) * n + angle_of_slot_[row % n];
    }

    std::pair<std::size_t, std::size_t> ring_angle(std::size_t field_index) const noexcept {
        return {field_index / grid_.n_phi(), field_index % grid_.n_phi()};
    }

    std::size_t half_bandwidth() const noexcept {
        return ordering_ == SystemOrdering::natural ? 3 * grid_.n_phi() : 2 * grid_.n_phi() + 4;
    }

    template <class T>
    std::vector<T> to_rows(std::span<const T> field) const {
        std::vector<T> out(field.size());
        for (std::size_t k = 0; k < field.size(); ++k) out[row(k)] = field[k];
        return out;
    }

    template <class T>
    std::vector<T> to_field(std::span<const T> rows) const {
        std::vector<T> out(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) out[field_index(r)] = rows[r];
        return out;
    }

private:
    PolarGrid grid_;
    SystemOrdering ordering_;
    std::vector<std::size_t> slot_;
    std::vector<std::size_t> angle_of_slot_;
};

/// (I - theta dtau L) in band form, with constraint rows for the pinned
/// rings. `coupling[k]` is L's weight on the center value at field index k.
struct SystemMatrix {
    IndexMap map;
    CompressedBandMatrix matrix;
    std::vector<double> coupling;
    std::vector<unsigned char> constrained;  // per field index
    double dtau = 0.0;
    double theta = 1.0;
};

inline SystemMatrix assemble_system_matrix(const StencilCoefficients& op, double dtau, const IndexMap& map,
                                           double theta = 1.0) {
    const PolarGrid& g = op.grid();
    if (!(map.grid() == g)) throw GridMismatch("assemble_system_matrix: index map and operator grids differ");
    if (!(dtau >= 0.0)) throw InvalidArgument("assemble_system_matrix: dtau must be >= 0");
    const std::size_t m = map.half_bandwidth();
    SystemMatrix sys{map, CompressedBandMatrix(g.size(), m, m), std::vector<double>(g.size(), 0.0),
                     std::vector<unsigned char>(g.size(), 1), dtau, theta};
    const double scale = theta * dtau;
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_phi(); ++j) {
            const std::size_t k = g.index(i, static_cast<long>(j));
            const std::size_t r = map.row(k);
            sys.matrix.add(r, r, 1.0);
            if (!op.evolved_ring(i)) continue;
            sys.constrained[k] = 0;
            op.for_each_entry(i, j, [&](std::size_t ref, double v) {
                if (ref == StencilCoefficients::kCenter)
                    sys.coupling[k] += v;
                else if (scale != 0.0)
                    sys.matrix.add(r, map.row(ref), -scale * v);
            });
        }
    return sys;
}

/// Completes the right-hand side for the step ending at `tau`: constraint
/// rows get their prescribed values (0 on the outer rings, the center value
/// on pinned inner rings) and evolved rows get the implicit share of the
/// center coupling. `rhs` is in field order.
inline void apply_boundary_conditions(const SystemMatrix& sys, std::span<double> rhs, const SimulationConfig& config,
                                      double tau) {
    const PolarGrid& g = sys.map.grid();
    if (rhs.size() != g.size()) throw DimensionMismatch("apply_boundary_conditions: rhs size mismatch");
    const double c = center_value(config.alpha, config.xi, tau);
    const std::size_t outer = (g.n_r() - 2) * g.n_phi();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (sys.constrained[k])
            rhs[k] = k >= outer ? 0.0 : c;
        else
            rhs[k] += sys.theta * sys.dtau * c * sys.coupling[k];
    }
}

/// Time stepper: factors the system once and advances the field one dtau per
/// call to step().
class Evolver {
public:
    using CenterFunction = std::function<double(double)>;

    Evolver(const SimulationConfig& config, const SchemeOptions& scheme = {}, CenterFunction center = {})
        : config_(config),
          scheme_(scheme),
          center_(center ? std::move(center)
                         : CenterFunction([a = config.alpha, xi = config.xi](double t) {
                               return center_value(a, xi, t);
                           })),
          op_(assemble_operator(config, scheme.closure)),
          map_(config.grid, scheme.ordering) {
        scheme_.validate(config.grid);
        auto start = std::chrono::steady_clock::now();
        SystemMatrix sys = assemble_system_matrix(op_, config.dtau, map_, scheme.theta);
        coupling_ = std::move(sys.coupling);
        constrained_ = std::move(sys.constrained);
        lu_.emplace(std::move(sys.matrix), scheme.pivoting);
        factor_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        reset(coherent_wigner_init(config.alpha, config.grid));
    }

    // Replaces the current field, re-imposing the constraint rows.
    void reset(const WignerField& field) {
        if (!(field.grid() == config_.grid)) throw GridMismatch("Evolver::reset: grid mismatch");
        values_.assign(field.values().begin(), field.values().end());
        tau_ = field.tau();
        start_tau_ = tau_;
        steps_ = 0;
        impose_constraints(values_, tau_);
    }

    void step() {
        const double t0 = tau_;
        const double t1 = t0 + config_.dtau;
        std::vector<double> rhs = values_;
        if (scheme_.theta < 1.0) {
            auto lw = apply_operator(op_, values_, center_(t0));
            const double s = (1.0 - scheme_.theta) * config_.dtau;
            for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += s * lw[k];
        }
        const double c = center_(t1);
        const std::size_t outer = (config_.grid.n_r() - 2) * config_.grid.n_phi();
        for (std::size_t k = 0; k < rhs.size(); ++k) {
            if (constrained_[k])
                rhs[k] = k >= outer ? 0.0 : c;
            else
                rhs[k] += scheme_.theta * config_.dtau * c * coupling_[k];
        }
        std::vector<double> rows = map_.to_rows<double>(rhs);
        lu_->solve_in_place(rows);
        values_ = map_.to_field<double>(rows);
        ++steps_;
        // Accumulate from the start so long runs do not drift off the step grid.
        tau_ = start_tau_ + static_cast<double>(steps_) * config_.dtau;
    }

    WignerField field() const { return WignerField(config_.grid, tau_, values_); }
    std::span<const double> values() const noexcept { return values_; }
    double tau() const noexcept { return tau_; }
    std::size_t steps() const noexcept { return steps_; }
    double factor_seconds() const noexcept { return factor_seconds_; }
    const SimulationConfig& config() const noexcept { return config_; }
    const SchemeOptions& scheme() const noexcept { return scheme_; }
    const StencilCoefficients& op() const noexcept { return op_; }
    const BandLU& factors() const { return *lu_; }

private:
    void impose_constraints(std::vector<double>& v, double tau) const {
        const std::size_t outer = (config_.grid.n_r() - 2) * config_.grid.n_phi();
        const double c = center_(tau);
        for (std::size_t k = 0; k < v.size(); ++k)
            if (constrained_[k]) v[k] = k >= outer ? 0.0 : c;
    }

    SimulationConfig config_;
    SchemeOptions scheme_;
    CenterFunction center_;
    StencilCoefficients op_;
    IndexMap map_;
    std::optional<BandLU> lu_;
    std::vector<double> coupling_;
    std::vector<unsigned char> constrained_;
    std::vector<double> values_;
    double tau_ = 0.0;
    double start_tau_ = 0.0;
    std::size_t steps_ = 0;
    double factor_seconds_ = 0.0;
};

/// Per-step callback: (step index, tau, field values).
using StepObserver = std::function<void(std::size_t, double, std::span<const double>)>;

struct EvolveOptions {
    SchemeOptions scheme{};
    bool audit_normalization = true;
    StepObserver observer{};
    Evolver::CenterFunction center{};
    // Start from this field instead of the coherent state.
    std::optional<WignerField> initial{};
};

struct EvolutionResult {
    std::vector<WignerField> snapshots;  // in the order of the requested taus
    std::vector<double> integrals;       // phase-space integral after each step, index 0 = initial field
    double max_drift = 0.0;
    double factor_seconds = 0.0;
    double step_seconds = 0.0;
};

/// Step index of tau on the dtau lattice; throws unless tau is a multiple of dtau.
inline std::size_t step_index(double tau, double dtau) {
    const double q = tau / dtau;
    const double n = std::round(q);
    if (!(n >= 0.0) || std::abs(q - n) > 1e-6 * std::max(1.0, n))
        throw InvalidArgument("snapshot tau " + std::to_string(tau) + " is not a multiple of dtau");
    return static_cast<std::size_t>(n);
}

/// Runs from the coherent state (or options.initial) to tau_end, recording
/// the fields at snapshot_taus. With the audit on, any step whose phase-space
/// integral leaves 1 by more than the drift tolerance raises NormalizationDrift.
inline EvolutionResult evolve(const SimulationConfig& config, double tau_end, std::span<const double> snapshot_taus,
                              const EvolveOptions& options = {}) {
    config.validate();
    if (!(tau_end > 0.0)) throw InvalidArgument("evolve: tau_end must be > 0");
    const std::size_t n_steps = step_index(tau_end, config.dtau);
    std::vector<std::size_t> wanted;
    for (double t : snapshot_taus) {
        std::size_t s = step_index(t, config.dtau);
        if (s > n_steps) throw InvalidArgument("evolve: snapshot tau beyond tau_end");
        wanted.push_back(s);
    }

    Evolver ev(config, options.scheme, options.center);
    if (options.initial) ev.reset(*options.initial);
    EvolutionResult result;
    result.factor_seconds = ev.factor_seconds();
    result.snapshots.resize(wanted.size());

    auto record = [&](std::size_t s) {
        const WignerField f = ev.field();
        double integral = phase_space_integral(f);
        result.integrals.push_back(integral);
        result.max_drift = std::max(result.max_drift, std::abs(integral - 1.0));
        if (options.audit_normalization && !(std::abs(integral - 1.0) <= options.scheme.drift_tolerance))
            throw NormalizationDrift(ev.tau(), integral);
        for (std::size_t q = 0; q < wanted.size(); ++q)
            if (wanted[q] == s) result.snapshots[q] = f;
        if (options.observer) options.observer(s, ev.tau(), ev.values());
    };

    record(0);
    auto start = std::chrono::steady_clock::now();
    for (std::size_t s = 1; s <= n_steps; ++s) {
        ev.step();
        record(s);
    }
    result.step_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace kerrwig
