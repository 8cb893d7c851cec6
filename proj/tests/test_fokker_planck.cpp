#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "catch_amalgamated.hpp"
#include "kerrwig/fokker_planck.hpp"
#include "kerrwig/series.hpp"

using namespace kerrwig;
using Catch::Approx;

namespace {

template <class F>
double apply_1d(const Stencil5& w, F f, double x, double h) {
    std::array<double, 5> v{};
    for (int d = -2; d <= 2; ++d) v[d + 2] = f(x + d * h);
    return apply_stencil(w, std::span<const double, 5>(v));
}

SimulationConfig small_config(double xi = 0.0, std::size_t n_r = 24, std::size_t n_phi = 32) {
    SimulationConfig c;
    c.alpha = {1.0, 0.0};
    c.xi = xi;
    c.dtau = 0.01;
    c.grid = PolarGrid(n_r, n_phi, 4.0);
    return c;
}

}  // namespace

TEST_CASE("one-dimensional stencils") {
    const double h = 0.1;
    CHECK(apply_1d(stencil_first_derivative(h), [](double x) { return x; }, 0.37, h) == Approx(1.0).epsilon(1e-14));
    CHECK(apply_1d(stencil_first_derivative(h), [](double x) { return x * x * x * x; }, 1.0, h) ==
          Approx(4.0).epsilon(1e-13));
    CHECK(std::abs(apply_1d(stencil_first_derivative(0.01), [](double x) { return std::sin(x); }, 0.0, 0.01) - 1.0) <=
          1e-9);
    CHECK(apply_1d(stencil_second_derivative(h), [](double x) { return x * x; }, 0.5, h) == Approx(2.0).epsilon(1e-12));
    CHECK(apply_1d(stencil_third_derivative(h), [](double x) { return x * x * x; }, 0.5, h) == Approx(6.0).epsilon(1e-10));
    CHECK_THROWS_AS(stencil_first_derivative(0.0), InvalidArgument);
    CHECK_THROWS_AS(stencil_third_derivative(-1.0), InvalidArgument);
}

TEST_CASE("mixed stencil is the tensor product") {
    const double hr = 0.05, hp = 0.07, r0 = 1.3, p0 = 0.4;
    const auto w = tensor_product(stencil_first_derivative(hr), stencil_first_derivative(hp));
    std::array<std::array<double, 5>, 5> f{};
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) f[a + 2][b + 2] = (r0 + a * hr) * (p0 + b * hp);
    CHECK(apply_stencil(w, f) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("operator prefactors") {
    const auto lossless = fp_terms_at(1.7, 0.0, 0.0);
    CHECK(lossless.d_r == 0.0);
    CHECK(lossless.d_rr == 0.0);
    CHECK(lossless.d_phiphi == 0.0);
    CHECK(lossless.constant == 0.0);
    CHECK(lossless.d_phi3 != 0.0);
    CHECK(fp_terms_at(1.0, 0.0, 0.0).d_phi == 0.0);
    CHECK(fp_terms_at(1.0, 2.0, 0.0).d_r == Approx(1.25).epsilon(1e-15));

    // Lossless weights have no pure radial entries: the dj = 0 column is empty.
    const auto op = assemble_operator(small_config());
    for (std::size_t i = 0; i < 20; ++i)
        for (int di = -2; di <= 2; ++di) CHECK(op.at(i, di, 0) == 0.0);
}

TEST_CASE("center value") {
    CHECK(center_value({2, 0}, 0.7, 0.0) == Approx(2.1356e-4).epsilon(1e-4));
    CHECK(center_value({2, 0}, 1.0, 60.0) == Approx(2.0 / std::numbers::pi).epsilon(1e-12));
    CHECK(center_value({2, 0}, 0.0, 3.0) == center_value({2, 0}, 0.0, 0.0));
}

TEST_CASE("system matrix assembly") {
    const auto cfg = small_config(0.0, 6, 8);
    const auto op = assemble_operator(cfg);

    SECTION("zero step is the identity") {
        const auto sys = assemble_system_matrix(op, 0.0, IndexMap(cfg.grid));
        const auto dense = sys.matrix.to_dense();
        const std::size_t n = cfg.grid.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) CHECK(dense[i * n + j] == (i == j ? 1.0 : 0.0));
    }
    SECTION("lossless operator annihilates constants") {
        const std::vector<double> ones(cfg.grid.size(), 1.0);
        for (double v : apply_operator(op, ones, 1.0)) CHECK(std::abs(v) <= 1e-10);
    }
    SECTION("five ring bands of at most five entries") {
        const auto sys = assemble_system_matrix(op, 0.1, IndexMap(cfg.grid));
        const auto& g = cfg.grid;
        const std::size_t n = g.size();
        for (std::size_t row = 0; row < n; ++row) {
            std::array<int, 6> per_ring{};
            for (std::size_t col = 0; col < n; ++col)
                if (sys.matrix.get(row, col) != 0.0) ++per_ring[col / g.n_phi()];
            const std::size_t ring = row / g.n_phi();
            if (ring < 2) continue;
            for (std::size_t r = 0; r < 6; ++r) {
                CHECK(per_ring[r] <= 5);
                if (per_ring[r] > 0) CHECK((r + 2 >= ring && r <= ring + 2));
            }
        }
    }
    SECTION("half-bandwidth holds on every grid") {
        for (std::size_t n_r : {5, 9, 16})
            for (std::size_t n_phi : {6, 10, 18, 24})
                for (auto ordering : {SystemOrdering::natural, SystemOrdering::folded}) {
                    SimulationConfig c = small_config(0.5, n_r, n_phi);
                    c.grid = PolarGrid(n_r, n_phi, 3.0);
                    IndexMap map(c.grid, ordering);
                    CHECK(map.half_bandwidth() ==
                          (ordering == SystemOrdering::natural ? 3 * n_phi : 2 * n_phi + 4));
                    CHECK_NOTHROW(assemble_system_matrix(assemble_operator(c), 0.01, map));
                }
    }
    SECTION("boundary rows") {
        auto sys = assemble_system_matrix(op, 0.1, IndexMap(cfg.grid));
        std::vector<double> rhs(cfg.grid.size(), 0.5);
        apply_boundary_conditions(sys, rhs, cfg, 0.0);
        for (std::size_t k = (cfg.grid.n_r() - 2) * cfg.grid.n_phi(); k < rhs.size(); ++k) CHECK(rhs[k] == 0.0);
    }
}

TEST_CASE("index map orderings are bijections") {
    PolarGrid g(5, 9, 3.0);
    for (auto ordering : {SystemOrdering::natural, SystemOrdering::folded}) {
        IndexMap map(g, ordering);
        std::set<std::size_t> rows;
        for (std::size_t k = 0; k < g.size(); ++k) {
            rows.insert(map.row(k));
            CHECK(map.field_index(map.row(k)) == k);
        }
        CHECK(rows.size() == g.size());
    }
}

TEST_CASE("discrete operator matches the oracle's tau derivative") {
    SimulationConfig cfg;
    cfg.alpha = {2.0, 0.0};
    cfg.grid = PolarGrid(300, 540, 5.0);
    const auto op = assemble_operator(cfg);
    const auto& g = cfg.grid;
    const double tau = 0.1, h = 1e-4;
    auto oracle = [&](double t) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.n_r(); ++i)
            for (std::size_t j = 0; j < g.n_phi(); ++j)
                v[g.index(i, static_cast<long>(j))] = wigner_series_deriv(cfg.alpha, t, g.point(i, j).gamma());
        return v;
    };
    const auto w = oracle(tau);
    const auto wp = oracle(tau + h);
    const auto wm = oracle(tau - h);
    const auto lw = apply_operator(op, w, center_value(cfg.alpha, 0.0, tau));
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 2; i + 2 < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_phi(); ++j) {
            const std::size_t k = g.index(i, static_cast<long>(j));
            if (std::abs(w[k]) <= 1e-3) continue;
            const double dt = (wp[k] - wm[k]) / (2.0 * h);
            err = std::max(err, std::abs(lw[k] - dt));
            scale = std::max(scale, std::abs(dt));
        }
    INFO("max error " << err << " scale " << scale);
    CHECK(err <= 1e-2 * scale);
}

TEST_CASE("evolution is linear") {
    auto cfg = small_config(0.3, 20, 24);
    const auto& g = cfg.grid;
    std::vector<double> a(g.size()), b(g.size()), mix(g.size());
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_phi(); ++j) {
            const std::size_t k = g.index(i, static_cast<long>(j));
            const double r = g.radius(i), p = g.angle(j);
            a[k] = std::exp(-r * r) * std::cos(2 * p);
            b[k] = r * std::exp(-0.5 * r * r) * std::sin(3 * p + 0.2);
            mix[k] = 1.7 * a[k] - 0.4 * b[k];
        }
    EvolveOptions opts;
    opts.audit_normalization = false;
    opts.center = [](double) { return 0.0; };
    const std::vector<double> at = {0.2};
    auto run = [&](const std::vector<double>& v) {
        opts.initial = WignerField(g, 0.0, v);
        return evolve(cfg, 0.2, at, opts).snapshots[0];
    };
    const auto ra = run(a), rb = run(b), rm = run(mix);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        worst = std::max(worst, std::abs(rm.values()[k] - (1.7 * ra.values()[k] - 0.4 * rb.values()[k])));
    CHECK(worst <= 1e-10);
}

TEST_CASE("orderings and pivoting give the same evolution") {
    auto cfg = small_config(0.5, 30, 36);
    const std::vector<double> at = {0.3};
    EvolveOptions reference;
    const auto base = evolve(cfg, 0.3, at, reference).snapshots[0];
    for (auto ordering : {SystemOrdering::natural, SystemOrdering::folded})
        for (auto pivoting : {Pivoting::partial, Pivoting::none}) {
            EvolveOptions o;
            o.scheme.ordering = ordering;
            o.scheme.pivoting = pivoting;
            const auto f = evolve(cfg, 0.3, at, o).snapshots[0];
            double worst = 0.0;
            for (std::size_t k = 0; k < cfg.grid.size(); ++k)
                worst = std::max(worst, std::abs(f.values()[k] - base.values()[k]));
            CHECK(worst <= 1e-12);
        }
}

TEST_CASE("evolve bookkeeping") {
    auto cfg = small_config(0.5);
    SECTION("snapshots must sit on the step lattice") {
        const std::vector<double> bad = {0.015};
        CHECK_THROWS_AS(evolve(cfg, 0.1, bad), InvalidArgument);
    }
    SECTION("normalization audit aborts on drift") {
        EvolveOptions o;
        o.scheme.drift_tolerance = 1e-14;
        const std::vector<double> at = {0.05};
        CHECK_THROWS_AS(evolve(cfg, 0.05, at, o), NormalizationDrift);
    }
    SECTION("integrals are recorded every step") {
        const std::vector<double> at = {0.0, 0.05};
        const auto r = evolve(cfg, 0.05, at);
        CHECK(r.integrals.size() == 6);
        CHECK(r.snapshots[0].tau() == 0.0);
        CHECK(r.snapshots[1].tau() == Approx(0.05));
    }
    SECTION("theta outside [0.5, 1] is rejected") {
        EvolveOptions o;
        o.scheme.theta = 0.3;
        const std::vector<double> at = {0.01};
        CHECK_THROWS_AS(evolve(cfg, 0.01, at, o), InvalidArgument);
    }
}
