#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include "kerrwig/band_matrix.hpp"
#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"

namespace kerrwig {

/// Physical and numerical parameters of one Fokker-Planck run.
struct SimulationConfig {
    Complex alpha{2.0, 0.0};  // initial coherent amplitude
    double xi = 0.0;          // damping ratio Gamma / kappa
    double n_thermal = 0.0;   // mean thermal photon number of the reservoir
    double dtau = std::numbers::pi / 1800.0;
    PolarGrid grid{150, 270, 5.0};

    void validate() const {
        if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
            throw InvalidArgument("alpha must be finite");
        if (!(xi >= 0.0) || !std::isfinite(xi)) throw InvalidArgument("xi must be >= 0");
        if (!(n_thermal >= 0.0) || !std::isfinite(n_thermal)) throw InvalidArgument("n_thermal must be >= 0");
        if (!(dtau > 0.0) || !std::isfinite(dtau)) throw InvalidArgument("dtau must be > 0");
        if (grid.r_max() < 2.0 * std::abs(alpha))
            throw InvalidArgument("r_max = " + std::to_string(grid.r_max()) + " is below 2|alpha| = " +
                                  std::to_string(2.0 * std::abs(alpha)));
    }
};

/// Row ordering of the implicit system. `natural` uses the field index
/// k = n_phi * i_r + j_phi directly (half-bandwidth 3 n_phi). `folded`
/// interleaves each ring (0, n-1, 1, n-2, ...) so periodic neighbours stay
/// close, which cuts the half-bandwidth to 2 n_phi + 4.
enum class SystemOrdering { natural, folded };

/// How the two innermost rings are closed.
///  - `reflect`: rings 0 and 1 obey the PDE; stencil references to r = 0 use
///    the prescribed center value and references to r < 0 are mapped through
///    the origin, W(-r, phi) = W(r, phi + pi). Needs an even n_phi.
///  - `center_ghost`: rings 0 and 1 obey the PDE; every stencil reference to
///    r <= 0 is replaced by the center value.
///  - `center_pinned`: rings 0 and 1 are constraint rows holding the center
///    value; only rings 2 .. n_r - 3 obey the PDE.
enum class InnerClosure { reflect, center_ghost, center_pinned };

struct SchemeOptions {
    // 1 = backward Euler, 0.5 = Crank-Nicolson.
    double theta = 0.5;
    InnerClosure closure = InnerClosure::reflect;
    SystemOrdering ordering = SystemOrdering::natural;
    Pivoting pivoting = Pivoting::partial;
    // Allowed |integral W - 1| at each step before the run aborts.
    double drift_tolerance = 1e-2;

    void validate(const PolarGrid& grid) const {
        if (!(theta >= 0.5 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0.5, 1]");
        if (!(drift_tolerance > 0.0)) throw InvalidArgument("drift tolerance must be > 0");
        if (closure == InnerClosure::reflect && grid.n_phi() % 2 != 0)
            throw InvalidArgument("reflecting inner closure needs an even n_phi");
    }
};

/// Named grid/time-step presets.
struct Profile {
    std::string name;
    std::size_t n_r;
    std::size_t n_phi;
    double dtau;
    SystemOrdering ordering;
    Pivoting pivoting;

    SchemeOptions scheme() const {
        SchemeOptions s;
        s.ordering = ordering;
        s.pivoting = pivoting;
        return s;
    }
};

inline Profile ci_profile() { return {"ci", 150, 270, std::numbers::pi / 1800.0, SystemOrdering::natural, Pivoting::partial}; }

// Full-resolution grid. Folded ordering and in-place factors keep the
// factorization at about 2.8 GB.
inline Profile paper_replica_profile() {
    return {"paper-replica", 300, 540, std::numbers::pi / 3600.0, SystemOrdering::folded, Pivoting::none};
}

inline Profile profile_by_name(std::string_view name) {
    if (name == "ci") return ci_profile();
    if (name == "paper-replica") return paper_replica_profile();
    throw InvalidArgument("unknown profile '" + std::string(name) + "'");
}

inline SimulationConfig make_config(Complex alpha, double xi, double n_thermal, const Profile& profile,
                                    double r_max = 0.0) {
    SimulationConfig c;
    c.alpha = alpha;
    c.xi = xi;
    c.n_thermal = n_thermal;
    c.dtau = profile.dtau;
    c.grid = PolarGrid(profile.n_r, profile.n_phi, r_max > 0.0 ? r_max : default_r_max(alpha));
    return c;
}

/// Desk-scale rescaling of the nanomechanical regime: xi ~ |alpha| and
/// N = 1.9e-19 xi, which keeps the nonlinearity/damping balance.
struct RescaledDamping {
    double xi;
    double n_thermal;
};

inline RescaledDamping rescaled_damping(Complex alpha) {
    double xi = std::abs(alpha);
    return {xi, 1.9e-19 * xi};
}

}  // namespace kerrwig
