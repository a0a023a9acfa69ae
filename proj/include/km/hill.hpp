#pragma once

// Hill's region K_c = {q : U(q) <= c} on a grid: membership, connected
// components by 4-connected flood fill, and identification of the bounded
// component around the earth.
//
// Topology is resolved on the grid, not certified. Close to kappa the neck
// through L1 narrows like sqrt(kappa - c), so energies within a few cell
// widths of kappa need finer resolution to separate the components.

#include <cmath>
#include <limits>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "km/cr3bp.hpp"
#include "km/errors.hpp"
#include "km/parallel.hpp"

namespace km {

inline bool hill_membership(const SystemParams& params, double c, const Vec& q) {
    return effective_potential(params, q) <= c;
}

struct HillGridSpec {
    double xmin = -2.0, xmax = 2.0;
    double ymin = -2.0, ymax = 2.0;
    int resolution = 400;  // cells per axis

    void validate() const {
        if (resolution < 16) throw ValidationError("grid resolution must be >= 16");
        if (!(xmax > xmin && ymax > ymin)) throw ValidationError("grid bounds are empty");
    }
};

struct HillComponent {
    int id;
    std::size_t cells;
    bool bounded;  // does not touch the grid frame
    bool contains_earth;
    bool contains_moon;
};

struct HillGrid {
    HillGridSpec spec;
    double mu = 0.0;
    double c = 0.0;
    // Row-major: index = j * resolution + i, cell center
    // (xmin + (i + 1/2) dx, ymin + (j + 1/2) dy). U is -inf at a primary.
    std::vector<double> values;
    std::vector<int> labels;  // component id, -1 outside the region
    std::vector<HillComponent> components;
    std::optional<int> earth_component;
    std::optional<int> moon_component;

    int resolution() const { return spec.resolution; }
    double dx() const { return (spec.xmax - spec.xmin) / spec.resolution; }
    double dy() const { return (spec.ymax - spec.ymin) / spec.resolution; }
    double x_center(int i) const { return spec.xmin + (i + 0.5) * dx(); }
    double y_center(int j) const { return spec.ymin + (j + 0.5) * dy(); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * spec.resolution + i; }
    bool in_region(std::size_t k) const { return labels[k] >= 0; }

    std::size_t count() const { return components.size(); }
    std::size_t bounded_count() const {
        std::size_t b = 0;
        for (const auto& comp : components) b += comp.bounded ? 1 : 0;
        return b;
    }

    // Cell containing (x, y), or nullopt outside the bounds.
    std::optional<std::pair<int, int>> cell_of(double x, double y) const {
        const double fi = std::floor((x - spec.xmin) / dx());
        const double fj = std::floor((y - spec.ymin) / dy());
        if (fi < 0 || fj < 0 || fi >= spec.resolution || fj >= spec.resolution) return std::nullopt;
        return std::pair{static_cast<int>(fi), static_cast<int>(fj)};
    }

    // Component of the in-region cell nearest to (x, y) among the containing
    // cell and its 8 neighbours; -1 if none is in the region.
    int component_near(double x, double y) const {
        const auto cell = cell_of(x, y);
        if (!cell) return -1;
        const auto [ci, cj] = *cell;
        if (labels[index(ci, cj)] >= 0) return labels[index(ci, cj)];
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                const int i = ci + di, j = cj + dj;
                if (i < 0 || j < 0 || i >= spec.resolution || j >= spec.resolution) continue;
                const int lab = labels[index(i, j)];
                if (lab < 0) continue;
                const double d = std::hypot(x_center(i) - x, y_center(j) - y);
                if (d < best_d) {
                    best_d = d;
                    best = lab;
                }
            }
        return best;
    }
};

namespace detail {

// Labels the true cells of a 2- or 3-dimensional boolean grid by
// face-connected flood fill. Ids are assigned in scan order starting at 0.
inline int label_components(const std::vector<char>& inside, const std::vector<int>& dims,
                            std::vector<int>& labels) {
    const std::size_t total = inside.size();
    labels.assign(total, -1);
    std::vector<std::size_t> strides(dims.size());
    std::size_t s = 1;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        strides[a] = s;
        s *= static_cast<std::size_t>(dims[a]);
    }
    int next_id = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < total; ++start) {
        if (!inside[start] || labels[start] >= 0) continue;
        labels[start] = next_id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            for (std::size_t a = 0; a < dims.size(); ++a) {
                const std::size_t coord = (k / strides[a]) % static_cast<std::size_t>(dims[a]);
                if (coord > 0) {
                    const std::size_t nb = k - strides[a];
                    if (inside[nb] && labels[nb] < 0) {
                        labels[nb] = next_id;
                        stack.push_back(nb);
                    }
                }
                if (coord + 1 < static_cast<std::size_t>(dims[a])) {
                    const std::size_t nb = k + strides[a];
                    if (inside[nb] && labels[nb] < 0) {
                        labels[nb] = next_id;
                        stack.push_back(nb);
                    }
                }
            }
        }
        ++next_id;
    }
    return next_id;
}

inline double potential_or_minus_inf(const SystemParams& params, const Vec& q) {
    try {
        return effective_potential(params, q);
    } catch (const DomainError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

// Classifies the planar slice (q3 = ... = qn = 0) of the Hill region.
inline HillGrid classify_components(const SystemParams& params, double c, const HillGridSpec& spec = {}) {
    spec.validate();
    HillGrid grid;
    grid.spec = spec;
    grid.mu = params.mu();
    grid.c = c;
    const int res = spec.resolution;
    const std::size_t total = static_cast<std::size_t>(res) * res;
    grid.values.assign(total, 0.0);
    parallel_for(static_cast<std::size_t>(res), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vec q = Vec::Zero(params.n());
        q(1) = grid.y_center(j);
        for (int i = 0; i < res; ++i) {
            q(0) = grid.x_center(i);
            grid.values[grid.index(i, j)] = detail::potential_or_minus_inf(params, q);
        }
    });

    std::vector<char> inside(total);
    for (std::size_t k = 0; k < total; ++k) inside[k] = grid.values[k] <= c;
    const auto earth_cell = grid.cell_of(params.earth()(0), 0.0);
    const auto moon_cell = grid.cell_of(params.moon()(0), 0.0);
    if (earth_cell) inside[grid.index(earth_cell->first, earth_cell->second)] = 1;
    if (moon_cell && params.mu() > 0.0) inside[grid.index(moon_cell->first, moon_cell->second)] = 1;

    const int ncomp = detail::label_components(inside, {res, res}, grid.labels);
    grid.components.resize(static_cast<std::size_t>(ncomp));
    for (int id = 0; id < ncomp; ++id) grid.components[static_cast<std::size_t>(id)] = {id, 0, true, false, false};
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const int lab = grid.labels[grid.index(i, j)];
            if (lab < 0) continue;
            auto& comp = grid.components[static_cast<std::size_t>(lab)];
            ++comp.cells;
            if (i == 0 || j == 0 || i == res - 1 || j == res - 1) comp.bounded = false;
        }
    if (earth_cell) {
        const int id = grid.labels[grid.index(earth_cell->first, earth_cell->second)];
        grid.earth_component = id;
        grid.components[static_cast<std::size_t>(id)].contains_earth = true;
    }
    if (moon_cell && params.mu() > 0.0) {
        const int id = grid.labels[grid.index(moon_cell->first, moon_cell->second)];
        grid.moon_component = id;
        grid.components[static_cast<std::size_t>(id)].contains_moon = true;
    }
    return grid;
}

// Decides whether a point of the Hill region lies in the component of the
// earth. U depends on q only through (q1, q2, |q^3|) with q^3 = (q3..qn), so
// for n >= 3 the components are resolved on that reduced 3-d grid.
class EarthComponentLocator {
public:
    EarthComponentLocator(const SystemParams& params, double c, int resolution = 800, double half_width = 2.0)
        : params_(params), c_(c), half_(half_width) {
        if (params.n() == 2) {
            planar_ = classify_components(params, c, {-half_width, half_width, -half_width, half_width, resolution});
            if (!planar_->earth_component) throw NumericalError("earth cell outside the locator grid");
            return;
        }
        nx_ = resolution / 2;
        nz_ = nx_ / 2;
        const std::vector<int> dims = {nx_, nx_, nz_};
        const std::size_t total = static_cast<std::size_t>(nx_) * nx_ * nz_;
        std::vector<char> inside(total);
        parallel_for(static_cast<std::size_t>(nz_), [&](std::size_t kk) {
            Vec q = Vec::Zero(params.n());
            q(2) = (static_cast<double>(kk) + 0.5) * cell3();
            for (int j = 0; j < nx_; ++j) {
                q(1) = -half_ + (j + 0.5) * cell3();
                for (int i = 0; i < nx_; ++i) {
                    q(0) = -half_ + (i + 0.5) * cell3();
                    inside[index3(i, j, static_cast<int>(kk))] = detail::potential_or_minus_inf(params, q) <= c;
                }
            }
        });
        const auto e = cell3_of(params.earth()(0), 0.0, 0.0);
        if (!e) throw NumericalError("earth cell outside the locator grid");
        inside[*e] = 1;
        detail::label_components(inside, dims, labels3_);
        earth_id_ = labels3_[*e];
    }

    // True if q (assumed in the Hill region) belongs to the earth component.
    bool in_earth_component(const Vec& q) const {
        if (planar_) return planar_->component_near(q(0), q(1)) == *planar_->earth_component;
        const double rho = q.tail(q.size() - 2).norm();
        const auto cell = cell3_of(q(0), q(1), rho);
        if (!cell) return false;
        if (labels3_[*cell] >= 0) return labels3_[*cell] == earth_id_;
        // Nearest labeled neighbour.
        const int i0 = static_cast<int>(std::floor((q(0) + half_) / cell3()));
        const int j0 = static_cast<int>(std::floor((q(1) + half_) / cell3()));
        const int k0 = static_cast<int>(std::floor(rho / cell3()));
        double best = std::numeric_limits<double>::infinity();
        int lab = -1;
        for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int i = i0 + di, j = j0 + dj, k = k0 + dk;
                    if (i < 0 || j < 0 || k < 0 || i >= nx_ || j >= nx_ || k >= nz_) continue;
                    const int l = labels3_[index3(i, j, k)];
                    if (l < 0) continue;
                    const double d = std::hypot(std::hypot(-half_ + (i + 0.5) * cell3() - q(0),
                                                           -half_ + (j + 0.5) * cell3() - q(1)),
                                                (k + 0.5) * cell3() - rho);
                    if (d < best) {
                        best = d;
                        lab = l;
                    }
                }
        return lab == earth_id_;
    }

    const std::optional<HillGrid>& planar_grid() const { return planar_; }

private:
    double cell3() const { return 2.0 * half_ / nx_; }
    std::size_t index3(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * nx_ + j) * nx_ + i;
    }
    std::optional<std::size_t> cell3_of(double x, double y, double rho) const {
        const double fi = std::floor((x + half_) / cell3());
        const double fj = std::floor((y + half_) / cell3());
        const double fk = std::floor(rho / cell3());
        if (fi < 0 || fj < 0 || fk < 0 || fi >= nx_ || fj >= nx_ || fk >= nz_) return std::nullopt;
        return index3(static_cast<int>(fi), static_cast<int>(fj), static_cast<int>(fk));
    }

    SystemParams params_;
    double c_;
    double half_;
    std::optional<HillGrid> planar_;
    int nx_ = 0, nz_ = 0;
    std::vector<int> labels3_;
    int earth_id_ = -1;
};

// CSV matrix: one row per grid row (increasing q2), columns
// j,i,q1,q2,U,label in row-major order.
inline void write_hill_csv(std::ostream& os, const HillGrid& grid) {
    os << "j,i,q1,q2,U,label\n";
    char buf[160];
    for (int j = 0; j < grid.resolution(); ++j)
        for (int i = 0; i < grid.resolution(); ++i) {
            const std::size_t k = grid.index(i, j);
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%d\n", j, i, grid.x_center(i), grid.y_center(j),
                          grid.values[k], grid.labels[k]);
            os << buf;
        }
}

// SVG: in-region cells coloured by component (earth blue, moon grey, the
// unbounded one pale), and the zero-velocity curve U = c traced as the cell
// edges separating in-region from out-of-region cells.
inline void write_hill_svg(std::ostream& os, const HillGrid& grid, int pixels = 800) {
    const int res = grid.resolution();
    const double px = static_cast<double>(pixels) / res;
    static const char* palette[] = {"#e07a5f", "#81b29a", "#f2cc8f", "#9c89b8", "#f4a261"};
    auto colour = [&](int lab) -> const char* {
        const auto& comp = grid.components[static_cast<std::size_t>(lab)];
        if (comp.contains_earth) return "#3d5a80";
        if (comp.contains_moon) return "#8d99ae";
        if (!comp.bounded) return "#e0fbfc";
        return palette[lab % 5];
    };
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  pixels, pixels, pixels, pixels);
    os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // Runs of equal labels along each row keep the file small.
    for (int j = 0; j < res; ++j) {
        const double y = (res - 1 - j) * px;
        int i = 0;
        while (i < res) {
            const int lab = grid.labels[grid.index(i, j)];
            int e = i + 1;
            while (e < res && grid.labels[grid.index(e, j)] == lab) ++e;
            if (lab >= 0) {
                std::snprintf(buf, sizeof buf, "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"%s\"/>\n",
                              i * px, y, (e - i) * px, px, colour(lab));
                os << buf;
            }
            i = e;
        }
    }
    os << "<path fill=\"none\" stroke=\"black\" stroke-width=\"1\" d=\"";
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const bool in = grid.labels[grid.index(i, j)] >= 0;
            const double x0 = i * px, y0 = (res - 1 - j) * px;
            if (i + 1 < res && in != (grid.labels[grid.index(i + 1, j)] >= 0)) {
                std::snprintf(buf, sizeof buf, "M%.3f %.3fv%.3f", x0 + px, y0, px);
                os << buf;
            }
            if (j + 1 < res && in != (grid.labels[grid.index(i, j + 1)] >= 0)) {
                std::snprintf(buf, sizeof buf, "M%.3f %.3fh%.3f", x0, y0, px);
                os << buf;
            }
        }
    os << "\"/>\n</svg>\n";
}

}  // namespace km
