#pragma once

// Plain-text field and raster files, PPM heatmaps and file comparison.
//
// Field file:   "# polar n_r n_phi r_max tau alpha_re alpha_im xi n_thermal"
//               followed by one "r phi value" line per node in index order.
// Raster file:  "# cartesian res re_min re_max im_min im_max tau" followed
//               by res*res values, row-major (rows follow Im gamma).
// Numbers are written with 17 significant digits so doubles round-trip.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"

namespace kerrwig {

/// Physical parameters recorded next to a field.
struct FieldMeta {
    Complex alpha{0.0, 0.0};
    double xi = 0.0;
    double n_thermal = 0.0;
};

struct FieldFile {
    WignerField field;
    FieldMeta meta;
};

namespace io_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view token, const std::string& what) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw FormatError(what + ": cannot parse '" + std::string(token) + "'");
    return v;
}

inline std::size_t parse_size(std::string_view token, const std::string& what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw FormatError(what + ": cannot parse '" + std::string(token) + "'");
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
    if (!out) throw FormatError("write failed for " + path.string());
}

// Splits text into lines; the first must start with "# <kind>".
inline std::vector<std::string_view> header_and_body(std::string_view text, std::string_view kind,
                                                     std::vector<std::string_view>& body) {
    std::size_t eol = text.find('\n');
    std::string_view head = text.substr(0, eol);
    auto tokens = split_ws(head);
    if (tokens.size() < 2 || tokens[0] != "#" || tokens[1] != kind)
        throw FormatError("expected a '# " + std::string(kind) + "' header");
    body.clear();
    std::size_t pos = eol == std::string_view::npos ? text.size() : eol + 1;
    while (pos < text.size()) {
        std::size_t next = text.find('\n', pos);
        if (next == std::string_view::npos) next = text.size();
        std::string_view line = text.substr(pos, next - pos);
        if (!line.empty() && line[0] != '#') body.push_back(line);
        pos = next + 1;
    }
    return {tokens.begin() + 2, tokens.end()};
}

}  // namespace io_detail

inline std::string format_field(const WignerField& field, const FieldMeta& meta) {
    using io_detail::fmt;
    const PolarGrid& g = field.grid();
    std::string out = "# polar " + std::to_string(g.n_r()) + " " + std::to_string(g.n_phi()) + " " + fmt(g.r_max()) +
                      " " + fmt(field.tau()) + " " + fmt(meta.alpha.real()) + " " + fmt(meta.alpha.imag()) + " " +
                      fmt(meta.xi) + " " + fmt(meta.n_thermal) + "\n";
    out.reserve(out.size() + g.size() * 64);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_phi(); ++j) {
            out += fmt(g.radius(i));
            out += ' ';
            out += fmt(g.angle(j));
            out += ' ';
            out += fmt(field.at(i, static_cast<long>(j)));
            out += '\n';
        }
    return out;
}

inline FieldFile parse_field(std::string_view text) {
    using namespace io_detail;
    std::vector<std::string_view> body;
    auto h = header_and_body(text, "polar", body);
    if (h.size() != 8) throw FormatError("polar header needs 8 values, found " + std::to_string(h.size()));
    const std::size_t n_r = parse_size(h[0], "n_r");
    const std::size_t n_phi = parse_size(h[1], "n_phi");
    PolarGrid grid(n_r, n_phi, parse_double(h[2], "r_max"));
    const double tau = parse_double(h[3], "tau");
    FieldMeta meta{{parse_double(h[4], "alpha_re"), parse_double(h[5], "alpha_im")},
                   parse_double(h[6], "xi"),
                   parse_double(h[7], "n_thermal")};
    if (body.size() != grid.size())
        throw FormatError("polar file has " + std::to_string(body.size()) + " rows, header implies " +
                          std::to_string(grid.size()));
    std::vector<double> values(grid.size());
    for (std::size_t k = 0; k < body.size(); ++k) {
        auto t = split_ws(body[k]);
        if (t.size() != 3) throw FormatError("polar row " + std::to_string(k) + " needs 'r phi value'");
        values[k] = parse_double(t[2], "value");
    }
    return {WignerField(grid, tau, std::move(values)), meta};
}

inline void write_field(const std::filesystem::path& path, const WignerField& field, const FieldMeta& meta) {
    io_detail::write_text(path, format_field(field, meta));
}

inline FieldFile read_field(const std::filesystem::path& path) { return parse_field(io_detail::slurp(path)); }

inline std::string format_raster(const CartesianRaster& raster) {
    using io_detail::fmt;
    const auto& w = raster.window();
    std::string out = "# cartesian " + std::to_string(raster.resolution()) + " " + fmt(w.re_min) + " " +
                      fmt(w.re_max) + " " + fmt(w.im_min) + " " + fmt(w.im_max) + " " + fmt(raster.tau()) + "\n";
    out.reserve(out.size() + raster.size() * 26);
    for (double v : raster.values()) {
        out += fmt(v);
        out += '\n';
    }
    return out;
}

inline CartesianRaster parse_raster(std::string_view text) {
    using namespace io_detail;
    std::vector<std::string_view> body;
    auto h = header_and_body(text, "cartesian", body);
    if (h.size() != 6) throw FormatError("cartesian header needs 6 values, found " + std::to_string(h.size()));
    const std::size_t res = parse_size(h[0], "res");
    CartesianWindow w{parse_double(h[1], "re_min"), parse_double(h[2], "re_max"), parse_double(h[3], "im_min"),
                      parse_double(h[4], "im_max")};
    const double tau = parse_double(h[5], "tau");
    if (body.size() != res * res)
        throw FormatError("cartesian file has " + std::to_string(body.size()) + " values, header implies " +
                          std::to_string(res * res));
    std::vector<double> values(body.size());
    for (std::size_t k = 0; k < body.size(); ++k) {
        auto t = split_ws(body[k]);
        if (t.size() != 1) throw FormatError("cartesian row " + std::to_string(k) + " needs one value");
        values[k] = parse_double(t[0], "value");
    }
    return CartesianRaster(w, res, tau, std::move(values));
}

inline void write_raster(const std::filesystem::path& path, const CartesianRaster& raster) {
    io_detail::write_text(path, format_raster(raster));
}

inline CartesianRaster read_raster(const std::filesystem::path& path) {
    return parse_raster(io_detail::slurp(path));
}

/// Diverging blue-white-red colour for W on the fixed scale [-2/pi, 2/pi].
inline std::array<std::uint8_t, 3> diverging_color(double w) {
    const double t = std::clamp(w / kWignerBound, -1.0, 1.0);
    auto channel = [](double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); };
    if (t >= 0.0) return {255, channel(1.0 - t), channel(1.0 - t)};
    return {channel(1.0 + t), channel(1.0 + t), 255};
}

/// Binary PPM (P6); the top image row is the largest Im(gamma).
inline std::string format_ppm(const CartesianRaster& raster) {
    const std::size_t n = raster.resolution();
    std::string out = "P6\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    out.reserve(out.size() + 3 * n * n);
    for (std::size_t row = n; row-- > 0;)
        for (std::size_t col = 0; col < n; ++col) {
            auto c = diverging_color(raster.at(row, col));
            out.append(reinterpret_cast<const char*>(c.data()), 3);
        }
    return out;
}

inline void write_ppm(const std::filesystem::path& path, const CartesianRaster& raster) {
    io_detail::write_text(path, format_ppm(raster));
}

struct ComparisonReport {
    std::string kind;      // "polar" or "cartesian"
    double sup = 0.0;      // max |a - b|
    double l1_mean = 0.0;  // mean |a - b| per sample
    std::size_t samples = 0;
};

/// Compares two field files or two raster files sample by sample. Headers
/// must describe the same mesh (tau and physical parameters may differ).
inline ComparisonReport compare_files(const std::filesystem::path& a, const std::filesystem::path& b) {
    const std::string ta = io_detail::slurp(a);
    const std::string tb = io_detail::slurp(b);
    auto kind_of = [](const std::string& t) {
        if (t.rfind("# polar", 0) == 0) return std::string("polar");
        if (t.rfind("# cartesian", 0) == 0) return std::string("cartesian");
        throw FormatError("unrecognised file header");
    };
    const std::string ka = kind_of(ta);
    const std::string kb = kind_of(tb);
    if (ka != kb) throw HeaderMismatch("cannot compare a " + ka + " file with a " + kb + " file");
    std::vector<double> va, vb;
    if (ka == "polar") {
        auto fa = parse_field(ta);
        auto fb = parse_field(tb);
        if (!(fa.field.grid() == fb.field.grid())) throw HeaderMismatch("polar grids differ");
        va.assign(fa.field.values().begin(), fa.field.values().end());
        vb.assign(fb.field.values().begin(), fb.field.values().end());
    } else {
        auto ra = parse_raster(ta);
        auto rb = parse_raster(tb);
        if (!(ra.window() == rb.window()) || ra.resolution() != rb.resolution())
            throw HeaderMismatch("raster meshes differ");
        va.assign(ra.values().begin(), ra.values().end());
        vb.assign(rb.values().begin(), rb.values().end());
    }
    ComparisonReport r;
    r.kind = ka;
    r.samples = va.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < va.size(); ++k) {
        const double d = std::abs(va[k] - vb[k]);
        r.sup = std::max(r.sup, d);
        sum += d;
    }
    r.l1_mean = va.empty() ? 0.0 : sum / static_cast<double>(va.size());
    return r;
}

}  // namespace kerrwig
