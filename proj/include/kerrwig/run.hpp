#pragma once

// Run manifests (flat key=value files) and the run orchestration behind the
// command-line tool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kerrwig/analysis.hpp"
#include "kerrwig/config.hpp"
#include "kerrwig/errors.hpp"
#include "kerrwig/fokker_planck.hpp"
#include "kerrwig/io.hpp"
#include "kerrwig/phase_space.hpp"
#include "kerrwig/series.hpp"

namespace kerrwig {

enum class Method { fp, series_q, series_deriv };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::fp: return "fp";
        case Method::series_q: return "series-q";
        default: return "series-deriv";
    }
}

enum ExitCode : int { kExitOk = 0, kExitInvalidManifest = 2, kExitNumericalAbort = 3, kExitOverTolerance = 4 };

struct RunManifest {
    std::string profile = "ci";
    SimulationConfig config;
    Method method = Method::fp;
    std::vector<double> snapshot_taus;
    std::filesystem::path out_dir = "out";
    CartesianWindow window;
    std::size_t resolution = 100;
    SchemeOptions scheme;
    SeriesPolicy policy;
};

/// Parses "1.5", "pi", "2pi", "0.2*pi", "pi/2", "2pi/3".
inline double parse_tau(std::string_view text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t') s += c;
    if (s.empty()) throw InvalidArgument("empty tau");
    auto number = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("cannot parse tau '" + std::string(text) + "'");
        }
        if (used != t.size()) throw InvalidArgument("cannot parse tau '" + std::string(text) + "'");
        return v;
    };
    const std::size_t p = s.find("pi");
    if (p == std::string::npos) return number(s);
    std::string coef = s.substr(0, p);
    if (!coef.empty() && coef.back() == '*') coef.pop_back();
    double value = (coef.empty() ? 1.0 : number(coef)) * std::numbers::pi;
    std::string rest = s.substr(p + 2);
    if (!rest.empty()) {
        if (rest[0] != '/') throw InvalidArgument("cannot parse tau '" + std::string(text) + "'");
        const double den = number(rest.substr(1));
        if (den == 0.0) throw InvalidArgument("tau divides by zero");
        value /= den;
    }
    return value;
}

/// Window of the paper's plots: [-5, 5]^2 for |alpha| = 2, [-8, 8]^2 for |alpha| = 5.
inline CartesianWindow default_window(Complex alpha) { return CartesianWindow::square(std::max(5.0, 1.6 * std::abs(alpha))); }

/// Reads "key = value" lines; '#' starts a comment. Later keys win.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidManifest("line " + std::to_string(lineno), "expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

/// Builds and validates a manifest. `profile` is applied first, then every
/// other key overrides it.
inline RunManifest build_manifest(const std::map<std::string, std::string>& kv) {
    RunManifest m;
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto number = [&](const std::string& key, const std::string& v) {
        try {
            return parse_tau(v);
        } catch (const Error&) {
            throw InvalidManifest(key, "not a number: '" + v + "'");
        }
    };
    static const std::vector<std::string> known = {"profile", "alpha_re", "alpha_im", "xi",     "thermal_n",
                                                   "dtau",    "grid",     "rmax",     "method", "snapshots",
                                                   "out",     "window",   "resolution", "theta", "closure",
                                                   "drift_tol", "digits"};
    for (const auto& [k, v] : kv)
        if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidManifest(k, "unknown key");

    Profile profile;
    try {
        m.profile = get("profile").value_or("ci");
        profile = profile_by_name(m.profile);
    } catch (const InvalidArgument& e) {
        throw InvalidManifest("profile", e.what());
    }
    m.scheme = profile.scheme();

    Complex alpha{2.0, 0.0};
    if (auto v = get("alpha_re")) alpha.real(number("alpha_re", *v));
    if (auto v = get("alpha_im")) alpha.imag(number("alpha_im", *v));
    m.config.alpha = alpha;
    if (auto v = get("xi")) m.config.xi = number("xi", *v);
    if (auto v = get("thermal_n")) m.config.n_thermal = number("thermal_n", *v);
    m.config.dtau = profile.dtau;
    if (auto v = get("dtau")) m.config.dtau = number("dtau", *v);

    std::size_t n_r = profile.n_r, n_phi = profile.n_phi;
    if (auto v = get("grid")) {
        const auto x = v->find('x');
        try {
            if (x == std::string::npos) throw std::invalid_argument("no x");
            std::size_t u1 = 0, u2 = 0;
            const std::string a = v->substr(0, x), b = v->substr(x + 1);
            n_r = std::stoul(a, &u1);
            n_phi = std::stoul(b, &u2);
            if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument("junk");
        } catch (const std::exception&) {
            throw InvalidManifest("grid", "expected NRxNPHI, got '" + *v + "'");
        }
    }
    double r_max = default_r_max(alpha);
    if (auto v = get("rmax")) r_max = number("rmax", *v);
    try {
        m.config.grid = PolarGrid(n_r, n_phi, r_max);
    } catch (const Error& e) {
        throw InvalidManifest("grid", e.what());
    }

    const std::string method = get("method").value_or("fp");
    if (method == "fp")
        m.method = Method::fp;
    else if (method == "series-q")
        m.method = Method::series_q;
    else if (method == "series-deriv")
        m.method = Method::series_deriv;
    else
        throw InvalidManifest("method", "expected fp, series-q or series-deriv, got '" + method + "'");

    if (auto v = get("snapshots")) {
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.find_first_not_of(" \t") == std::string::npos) continue;
            m.snapshot_taus.push_back(number("snapshots", item));
        }
    }
    if (m.snapshot_taus.empty()) throw InvalidManifest("snapshots", "at least one snapshot tau is required");
    for (double t : m.snapshot_taus)
        if (!(t >= 0.0)) throw InvalidManifest("snapshots", "taus must be >= 0");
    std::sort(m.snapshot_taus.begin(), m.snapshot_taus.end());
    m.snapshot_taus.erase(std::unique(m.snapshot_taus.begin(), m.snapshot_taus.end()), m.snapshot_taus.end());

    if (auto v = get("out")) m.out_dir = *v;
    if (auto v = get("resolution")) {
        const double r = number("resolution", *v);
        if (!(r >= 2.0) || r != std::floor(r)) throw InvalidManifest("resolution", "must be an integer >= 2");
        m.resolution = static_cast<std::size_t>(r);
    }
    m.window = default_window(alpha);
    if (m.method == Method::fp) {
        // Largest square inside the polar grid.
        const double fit = m.config.grid.r_max() / std::numbers::sqrt2;
        m.window = CartesianWindow::square(std::min(m.window.re_max, fit));
    }
    if (auto v = get("window")) {
        std::vector<double> w;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) w.push_back(number("window", item));
        if (w.size() != 4) throw InvalidManifest("window", "expected re_min,re_max,im_min,im_max");
        m.window = {w[0], w[1], w[2], w[3]};
        if (!m.window.valid()) throw InvalidManifest("window", "empty window");
    }

    if (auto v = get("theta")) m.scheme.theta = number("theta", *v);
    if (auto v = get("closure")) {
        if (*v == "reflect")
            m.scheme.closure = InnerClosure::reflect;
        else if (*v == "center-ghost")
            m.scheme.closure = InnerClosure::center_ghost;
        else if (*v == "center-pinned")
            m.scheme.closure = InnerClosure::center_pinned;
        else
            throw InvalidManifest("closure", "expected reflect, center-ghost or center-pinned");
    }
    if (auto v = get("drift_tol")) m.scheme.drift_tolerance = number("drift_tol", *v);
    if (auto v = get("digits")) m.policy.precision_digits = static_cast<int>(number("digits", *v));

    if (m.method != Method::fp && (m.config.xi != 0.0 || m.config.n_thermal != 0.0))
        throw InvalidManifest(m.config.xi != 0.0 ? "xi" : "thermal_n",
                              "series methods describe the lossless medium only (xi = 0, thermal_n = 0)");
    try {
        m.config.validate();
        m.scheme.validate(m.config.grid);
        m.policy.validate();
        if (m.method == Method::fp)
            for (double t : m.snapshot_taus) step_index(t, m.config.dtau);
    } catch (const InvalidManifest&) {
        throw;
    } catch (const Error& e) {
        throw InvalidManifest("config", e.what());
    }
    if (m.method == Method::fp) {
        const double r = m.config.grid.r_max();
        for (double re : {m.window.re_min, m.window.re_max})
            for (double im : {m.window.im_min, m.window.im_max})
                if (std::hypot(re, im) > r) throw InvalidManifest("window", "corner lies outside r_max");
    }
    return m;
}

inline RunManifest parse_manifest(std::string_view text) { return build_manifest(parse_key_values(text)); }

struct RunOutcome {
    int exit_code = kExitOk;
    std::string status = "ok";
    std::vector<std::filesystem::path> files;
};

namespace run_detail {

inline std::string snapshot_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap%03zu", index);
    return buf;
}

struct SnapshotRecord {
    double tau;
    NegativityReport negativity;
    double integral;
    double vacuum;
    WignerField field;
};

}  // namespace run_detail

/// Executes a manifest. For each snapshot tau it writes a polar field file,
/// a raster file and a PPM heatmap; summary.txt lists the per-step
/// normalization audit, negativity reports and 2pi periodicity distances;
/// timing.txt holds wall-clock times (the only non-deterministic output).
inline RunOutcome run(const RunManifest& m) {
    namespace fs = std::filesystem;
    using io_detail::fmt;
    fs::create_directories(m.out_dir);
    RunOutcome outcome;
    std::vector<run_detail::SnapshotRecord> records;
    std::ostringstream audit;
    const FieldMeta meta{m.config.alpha, m.config.xi, m.config.n_thermal};
    auto t_start = std::chrono::steady_clock::now();
    double factor_seconds = 0.0;

    auto emit = [&](const WignerField& field, const CartesianRaster& raster) {
        const std::string stem = run_detail::snapshot_stem(records.size());
        const fs::path fp = m.out_dir / (stem + "_field.txt");
        const fs::path rp = m.out_dir / (stem + "_raster.txt");
        const fs::path pp = m.out_dir / (stem + ".ppm");
        write_field(fp, field, meta);
        write_raster(rp, raster);
        write_ppm(pp, raster);
        outcome.files.insert(outcome.files.end(), {fp, rp, pp});
        records.push_back({field.tau(), negativity_report(field.values(), field.tau()), phase_space_integral(field),
                           vacuum_distance(field), field});
    };

    try {
        if (m.method == Method::fp) {
            Evolver ev(m.config, m.scheme);
            factor_seconds = ev.factor_seconds();
            const std::size_t last = step_index(m.snapshot_taus.back(), m.config.dtau);
            std::size_t next = 0;
            for (std::size_t s = 0;; ++s) {
                const WignerField f = ev.field();
                const double integral = phase_space_integral(f);
                audit << "audit " << s << " " << fmt(ev.tau()) << " " << fmt(integral) << "\n";
                if (!(std::abs(integral - 1.0) <= m.scheme.drift_tolerance)) throw NormalizationDrift(ev.tau(), integral);
                while (next < m.snapshot_taus.size() && step_index(m.snapshot_taus[next], m.config.dtau) == s) {
                    emit(f, sample_window(f, m.window, m.resolution));
                    ++next;
                }
                if (s == last) break;
                ev.step();
            }
        } else {
            const SeriesForm form = m.method == Method::series_q ? SeriesForm::q_form : SeriesForm::deriv_form;
            const PolarGrid& g = m.config.grid;
            for (double tau : m.snapshot_taus) {
                CartesianRaster raster = series_raster(form, m.config.alpha, tau, m.window, m.resolution, m.policy);
                std::vector<double> values(g.size());
                for (std::size_t i = 0; i < g.n_r(); ++i)
                    for (std::size_t j = 0; j < g.n_phi(); ++j) {
                        const Complex gamma = g.point(i, j).gamma();
                        values[g.index(i, static_cast<long>(j))] =
                            form == SeriesForm::q_form ? wigner_series_q(m.config.alpha, tau, gamma, m.policy)
                                                       : wigner_series_deriv(m.config.alpha, tau, gamma, m.policy);
                    }
                emit(WignerField(g, tau, std::move(values)), raster);
            }
        }
    } catch (const NormalizationDrift& e) {
        outcome.exit_code = kExitNumericalAbort;
        outcome.status = std::string("aborted: ") + e.what();
    } catch (const SingularMatrix& e) {
        outcome.exit_code = kExitNumericalAbort;
        outcome.status = std::string("aborted: ") + e.what();
    } catch (const InsufficientTerms& e) {
        outcome.exit_code = kExitNumericalAbort;
        outcome.status = std::string("aborted: ") + e.what();
    } catch (const PrecisionTooLow& e) {
        outcome.exit_code = kExitNumericalAbort;
        outcome.status = std::string("aborted: ") + e.what();
    }
    const double total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    std::ostringstream sum;
    const auto& c = m.config;
    sum << "status = " << outcome.status << "\n"
        << "method = " << to_string(m.method) << "\n"
        << "profile = " << m.profile << "\n"
        << "alpha = " << fmt(c.alpha.real()) << " " << fmt(c.alpha.imag()) << "\n"
        << "xi = " << fmt(c.xi) << "\n"
        << "thermal_n = " << fmt(c.n_thermal) << "\n"
        << "dtau = " << fmt(c.dtau) << "\n"
        << "grid = " << c.grid.n_r() << "x" << c.grid.n_phi() << "\n"
        << "rmax = " << fmt(c.grid.r_max()) << "\n"
        << "window = " << fmt(m.window.re_min) << "," << fmt(m.window.re_max) << "," << fmt(m.window.im_min) << ","
        << fmt(m.window.im_max) << "\n"
        << "resolution = " << m.resolution << "\n";
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        sum << "snapshot " << k << " tau " << fmt(r.tau) << " min " << fmt(r.negativity.min_value)
            << " negative_fraction " << fmt(r.negativity.negative_fraction) << " integral " << fmt(r.integral)
            << " vacuum_distance " << fmt(r.vacuum) << "\n";
    }
    for (std::size_t a = 0; a < records.size(); ++a)
        for (std::size_t b = a + 1; b < records.size(); ++b) {
            const double periods = (records[b].tau - records[a].tau) / (2.0 * std::numbers::pi);
            if (periods >= 0.5 && std::abs(periods - std::round(periods)) < 1e-9)
                sum << "periodicity " << a << " " << b << " distance "
                    << fmt(periodicity_check(records[a].field, records[b].field)) << "\n";
        }
    sum << audit.str();
    const fs::path summary = m.out_dir / "summary.txt";
    io_detail::write_text(summary, sum.str());
    outcome.files.push_back(summary);

    std::ostringstream timing;
    timing << "factor_seconds = " << factor_seconds << "\ntotal_seconds = " << total_seconds << "\n";
    const fs::path tp = m.out_dir / "timing.txt";
    io_detail::write_text(tp, timing.str());
    outcome.files.push_back(tp);
    return outcome;
}

}  // namespace kerrwig
