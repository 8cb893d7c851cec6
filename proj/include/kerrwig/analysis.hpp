#pragma once

// Diagnostics over fields and rasters: negativity tracking, periodicity and
// vacuum distances, connected sign regions and sub-Planck structure metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"

namespace kerrwig {

inline constexpr double kNegativityThreshold = 1e-4;

struct NegativityReport {
    double tau = 0.0;
    double min_value = 0.0;
    double negative_fraction = 0.0;  // share of samples below -threshold
    double threshold = kNegativityThreshold;

    bool negative() const noexcept { return min_value < -threshold; }
};

struct TauInterval {
    double begin;
    double end;
};

inline NegativityReport negativity_report(std::span<const double> values, double tau,
                                          double threshold = kNegativityThreshold) {
    if (!(threshold > 0.0)) throw InvalidArgument("negativity threshold must be > 0");
    NegativityReport r;
    r.tau = tau;
    r.threshold = threshold;
    r.min_value = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
    std::size_t below = 0;
    for (double v : values) below += v < -threshold;
    r.negative_fraction = values.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(values.size());
    return r;
}

/// Maximal runs of consecutive negative reports, as [first tau, last tau].
inline std::vector<TauInterval> negativity_intervals(std::span<const NegativityReport> reports) {
    std::vector<TauInterval> out;
    std::optional<TauInterval> open;
    for (const auto& r : reports) {
        if (r.negative()) {
            if (open)
                open->end = r.tau;
            else
                open = TauInterval{r.tau, r.tau};
        } else if (open) {
            out.push_back(*open);
            open.reset();
        }
    }
    if (open) out.push_back(*open);
    return out;
}

struct NegativityScan {
    std::vector<NegativityReport> reports;
    std::vector<TauInterval> intervals;
};

/// Collects reports one field at a time, so long runs need not keep fields.
class NegativityTracker {
public:
    explicit NegativityTracker(double threshold = kNegativityThreshold) : threshold_(threshold) {}

    void add(double tau, std::span<const double> values) {
        if (!scan_.reports.empty() && tau < scan_.reports.back().tau)
            throw InvalidArgument("negativity scan: fields must be ordered by tau");
        scan_.reports.push_back(negativity_report(values, tau, threshold_));
    }

    NegativityScan result() const {
        NegativityScan s = scan_;
        s.intervals = negativity_intervals(s.reports);
        return s;
    }

private:
    double threshold_;
    NegativityScan scan_;
};

inline NegativityScan negativity_scan(std::span<const WignerField> fields, double threshold = kNegativityThreshold) {
    NegativityTracker t(threshold);
    for (const auto& f : fields) t.add(f.tau(), f.values());
    return t.result();
}

inline NegativityScan negativity_scan(std::span<const CartesianRaster> rasters,
                                      double threshold = kNegativityThreshold) {
    NegativityTracker t(threshold);
    for (const auto& r : rasters) t.add(r.tau(), r.values());
    return t.result();
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("sup_distance: sizes differ");
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

/// max |W_a - W_b| over a shared grid.
inline double periodicity_check(const WignerField& a, const WignerField& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch("periodicity_check: fields live on different grids");
    return sup_distance(a.values(), b.values());
}

inline double periodicity_check(const CartesianRaster& a, const CartesianRaster& b) {
    if (!(a.window() == b.window()) || a.resolution() != b.resolution())
        throw GridMismatch("periodicity_check: rasters cover different meshes");
    return sup_distance(a.values(), b.values());
}

/// Sup-norm distance to the vacuum Wigner function (2/pi) e^{-2 r^2}.
inline double vacuum_distance(const WignerField& field) {
    const PolarGrid& g = field.grid();
    double d = 0.0;
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        const double v = vacuum_wigner(g.radius(i));
        for (std::size_t j = 0; j < g.n_phi(); ++j) d = std::max(d, std::abs(field.at(i, static_cast<long>(j)) - v));
    }
    return d;
}

/// A 4-connected region of raster cells.
struct Component {
    int sign = 1;  // +1 or -1
    std::size_t cells = 0;
    double extreme = 0.0;  // value of largest magnitude
    double aspect = 1.0;   // sqrt of the eigenvalue ratio of the cell scatter
    double mean_row = 0.0;
    double mean_col = 0.0;
};

/// Labels the 4-connected components of cells where mask[k] is true.
inline std::vector<std::vector<std::size_t>> connected_components(std::span<const unsigned char> mask,
                                                                 std::size_t rows, std::size_t cols) {
    if (mask.size() != rows * cols) throw DimensionMismatch("connected_components: mask size mismatch");
    std::vector<std::vector<std::size_t>> out;
    std::vector<unsigned char> seen(mask.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || seen[start]) continue;
        std::vector<std::size_t> cells;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            cells.push_back(k);
            const std::size_t r = k / cols;
            const std::size_t c = k % cols;
            auto visit = [&](std::size_t nk) {
                if (mask[nk] && !seen[nk]) {
                    seen[nk] = 1;
                    stack.push_back(nk);
                }
            };
            if (r > 0) visit(k - cols);
            if (r + 1 < rows) visit(k + cols);
            if (c > 0) visit(k - 1);
            if (c + 1 < cols) visit(k + 1);
        }
        std::sort(cells.begin(), cells.end());
        out.push_back(std::move(cells));
    }
    return out;
}

namespace detail {

// sqrt(lambda_max / lambda_min) of the sample covariance of cell positions,
// with the variance I/12 of a uniform unit cell added so single cells and
// straight lines stay finite.
inline double aspect_ratio(std::span<const std::size_t> cells, std::size_t cols, double& mean_r, double& mean_c) {
    const double n = static_cast<double>(cells.size());
    mean_r = 0.0;
    mean_c = 0.0;
    for (std::size_t k : cells) {
        mean_r += static_cast<double>(k / cols);
        mean_c += static_cast<double>(k % cols);
    }
    mean_r /= n;
    mean_c /= n;
    if (cells.size() < 2) return 1.0;
    double srr = 0.0, scc = 0.0, src = 0.0;
    for (std::size_t k : cells) {
        const double dr = static_cast<double>(k / cols) - mean_r;
        const double dc = static_cast<double>(k % cols) - mean_c;
        srr += dr * dr;
        scc += dc * dc;
        src += dr * dc;
    }
    const double a = srr / (n - 1.0) + 1.0 / 12.0;
    const double d = scc / (n - 1.0) + 1.0 / 12.0;
    const double b = src / (n - 1.0);
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return std::sqrt((mid + rad) / (mid - rad));
}

}  // namespace detail

/// Components of {W > threshold} (sign +1) and {W < -threshold} (sign -1).
inline std::vector<Component> sign_components(const CartesianRaster& raster, double threshold = kNegativityThreshold) {
    const std::size_t n = raster.resolution();
    std::vector<Component> out;
    for (int sign : {1, -1}) {
        std::vector<unsigned char> mask(raster.size());
        for (std::size_t k = 0; k < raster.size(); ++k) mask[k] = sign * raster.values()[k] > threshold;
        for (const auto& cells : connected_components(mask, n, n)) {
            Component c;
            c.sign = sign;
            c.cells = cells.size();
            c.aspect = detail::aspect_ratio(cells, n, c.mean_row, c.mean_col);
            for (std::size_t k : cells)
                if (std::abs(raster.values()[k]) > std::abs(c.extreme)) c.extreme = raster.values()[k];
            out.push_back(c);
        }
    }
    return out;
}

/// Number of connected regions where W exceeds `level`.
inline std::size_t lobe_count(const CartesianRaster& raster, double level) {
    std::vector<unsigned char> mask(raster.size());
    for (std::size_t k = 0; k < raster.size(); ++k) mask[k] = raster.values()[k] > level;
    return connected_components(mask, raster.resolution(), raster.resolution()).size();
}

enum class StructureKind { none, dots, ribbons };

inline const char* to_string(StructureKind k) {
    switch (k) {
        case StructureKind::dots: return "dots";
        case StructureKind::ribbons: return "ribbons";
        default: return "none";
    }
}

struct SubPlanckReport {
    CartesianWindow window;
    std::size_t sign_cell_count = 0;  // connected same-sign regions, both signs
    std::size_t positive_components = 0;
    std::size_t negative_components = 0;
    double mean_aspect = 1.0;
    StructureKind structure_kind = StructureKind::none;
};

inline constexpr double kRibbonAspect = 2.0;

/// Sign-region statistics inside a window of area at most 1. Regions are
/// 4-connected cells with |W| > 1e-4; the structure is `dots` when the mean
/// aspect ratio is at most 2, `ribbons` above, and `none` without negative
/// regions. The classification is a heuristic.
inline SubPlanckReport subplanck_metrics(const CartesianRaster& raster, const CartesianWindow& window) {
    if (!(window.area() <= 1.0 + 1e-12))
        throw WindowTooLarge("subplanck_metrics: window area " + std::to_string(window.area()) + " exceeds 1");
    if (!(raster.window() == window)) throw GridMismatch("subplanck_metrics: raster does not cover the window");
    const auto comps = sign_components(raster);
    SubPlanckReport r;
    r.window = window;
    r.sign_cell_count = comps.size();
    double aspect_sum = 0.0;
    for (const auto& c : comps) {
        (c.sign > 0 ? r.positive_components : r.negative_components) += 1;
        aspect_sum += c.aspect;
    }
    r.mean_aspect = comps.empty() ? 1.0 : aspect_sum / static_cast<double>(comps.size());
    if (r.negative_components == 0)
        r.structure_kind = StructureKind::none;
    else
        r.structure_kind = r.mean_aspect <= kRibbonAspect ? StructureKind::dots : StructureKind::ribbons;
    return r;
}

}  // namespace kerrwig
