#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "km/equilibria.hpp"
#include "km/hill.hpp"

using namespace km;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST(HillMembership, Examples) {
    SystemParams kepler(2, 0.0);
    EXPECT_TRUE(hill_membership(kepler, -2.0, v2(0.1, 0)));
    EXPECT_FALSE(hill_membership(kepler, -2.0, v2(1, 0)));
    EXPECT_TRUE(hill_membership(kepler, -1.5, v2(1, 0)));
    SystemParams params(2, 0.3);
    EXPECT_THROW(hill_membership(params, -2.0, params.earth()), DomainError);
}

TEST(HillGrid, RejectsCoarseResolution) {
    HillGridSpec spec;
    spec.resolution = 15;
    EXPECT_THROW(classify_components(SystemParams(2, 0.2), -2.0, spec), ValidationError);
}

TEST(HillGrid, ThreeComponentsBelowKappa) {
    SystemParams params(2, 0.2);
    const double kappa = first_critical_value(params).kappa;
    const auto grid = classify_components(params, kappa - 0.1);
    EXPECT_EQ(grid.count(), 3u);
    EXPECT_EQ(grid.bounded_count(), 2u);
    ASSERT_TRUE(grid.earth_component && grid.moon_component);
    EXPECT_NE(*grid.earth_component, *grid.moon_component);
    EXPECT_TRUE(grid.components[*grid.earth_component].bounded);
    EXPECT_TRUE(grid.components[*grid.moon_component].bounded);
}

TEST(HillGrid, RotatingKeplerHasTwoComponents) {
    const auto grid = classify_components(SystemParams(2, 0.0), -1.6);
    EXPECT_EQ(grid.count(), 2u);
    EXPECT_EQ(grid.bounded_count(), 1u);
    ASSERT_TRUE(grid.earth_component);
    EXPECT_TRUE(grid.components[*grid.earth_component].bounded);
}

TEST(HillGrid, ContiguousIdsAndOneUnbounded) {
    for (double mu : {0.1, 0.2, 0.5, 0.8}) {
        SystemParams params(2, mu);
        const double kappa = first_critical_value(params).kappa;
        const auto grid = classify_components(params, kappa - 0.2, {-2, 2, -2, 2, 200});
        int maxlab = -1;
        for (int lab : grid.labels) maxlab = std::max(maxlab, lab);
        EXPECT_EQ(maxlab + 1, static_cast<int>(grid.count()));
        EXPECT_EQ(grid.count() - grid.bounded_count(), 1u) << "mu=" << mu;
    }
}

TEST(HillGrid, StableUnderRefinement) {
    for (double mu : {0.1, 0.2, 0.5}) {
        SystemParams params(2, mu);
        const double c = first_critical_value(params).kappa - 0.05;
        std::size_t counts[3];
        int k = 0;
        for (int res : {200, 400, 800}) counts[k++] = classify_components(params, c, {-2, 2, -2, 2, res}).count();
        EXPECT_EQ(counts[0], 3u);
        EXPECT_EQ(counts[1], counts[0]);
        EXPECT_EQ(counts[2], counts[0]);
    }
}

TEST(HillGrid, PrimaryNeighbourhoodsInTheirComponents) {
    SystemParams params(2, 0.3);
    const auto grid = classify_components(params, first_critical_value(params).kappa - 0.1);
    for (auto [x, id] : {std::pair{params.earth()(0), *grid.earth_component},
                         std::pair{params.moon()(0), *grid.moon_component}}) {
        const auto [ci, cj] = *grid.cell_of(x, 0.0);
        for (auto [di, dj] : {std::pair{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}})
            EXPECT_EQ(grid.labels[grid.index(ci + di, cj + dj)], id);
    }
}

TEST(HillGrid, MonotoneInEnergy) {
    SystemParams params(2, 0.2);
    const HillGridSpec spec{-2, 2, -2, 2, 200};
    const auto lo = classify_components(params, -2.1, spec);
    const auto hi = classify_components(params, -1.9, spec);
    for (std::size_t k = 0; k < lo.labels.size(); ++k) {
        if (lo.in_region(k)) {
            EXPECT_TRUE(hi.in_region(k));
        }
    }
}

TEST(HillGrid, DeepEnergyGivesSmallDisks) {
    // For c -> -inf the region near a primary of mass m is |q - P| <~ m/|c|.
    const double mu = 0.3, c = -50.0;
    SystemParams params(2, mu);
    const HillGridSpec spec{-2, 2, -2, 2, 800};
    const auto grid = classify_components(params, c, spec);
    // The unbounded component needs |q| >= 10 and lies outside these bounds.
    ASSERT_EQ(grid.count(), 2u);
    for (auto [id, center, mass] : {std::tuple{*grid.earth_component, params.earth()(0), 1.0 - mu},
                                    std::tuple{*grid.moon_component, params.moon()(0), mu}}) {
        const double radius = mass / std::abs(c);
        double far = 0.0;
        for (int j = 0; j < grid.resolution(); ++j)
            for (int i = 0; i < grid.resolution(); ++i)
                if (grid.labels[grid.index(i, j)] == id)
                    far = std::max(far, std::hypot(grid.x_center(i) - center, grid.y_center(j)));
        EXPECT_LE(far, radius + 1.5 * grid.dx());
        // Area agrees with the disk to within the boundary cells.
        const double area = static_cast<double>(grid.components[id].cells) * grid.dx() * grid.dy();
        EXPECT_NEAR(area, M_PI * radius * radius, 2 * M_PI * radius * 1.5 * grid.dx());
    }
}

TEST(HillGrid, SpatialSliceMatchesPlanar) {
    SystemParams p2(2, 0.2), p3(3, 0.2);
    const HillGridSpec spec{-2, 2, -2, 2, 100};
    const auto a = classify_components(p2, -1.8, spec);
    const auto b = classify_components(p3, -1.8, spec);
    EXPECT_EQ(a.labels, b.labels);
}

TEST(EarthLocator, PlanarAndSpatial) {
    for (int n : {2, 3}) {
        SystemParams params(n, 0.2);
        const double c = first_critical_value(params).kappa - 0.1;
        EarthComponentLocator loc(params, c, 400);
        Vec near_e = Vec::Zero(n), near_m = Vec::Zero(n);
        near_e(0) = params.earth()(0) + 0.05;
        near_m(0) = params.moon()(0) + 0.02;
        EXPECT_TRUE(loc.in_earth_component(near_e));
        EXPECT_FALSE(loc.in_earth_component(near_m));
        if (n == 3) {
            near_e(2) = 0.05;
            EXPECT_TRUE(loc.in_earth_component(near_e));
        }
    }
}

TEST(HillExport, CsvAndSvg) {
    const auto grid = classify_components(SystemParams(2, 0.2), -2.0, {-2, 2, -2, 2, 16});
    std::ostringstream csv, svg;
    write_hill_csv(csv, grid);
    const std::string s = csv.str();
    EXPECT_EQ(s.rfind("j,i,q1,q2,U,label\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 16 * 16);
    write_hill_svg(svg, grid);
    EXPECT_NE(svg.str().find("<svg"), std::string::npos);
    EXPECT_NE(svg.str().find("</svg>"), std::string::npos);
}
