#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pnsfv/geometry.hpp"
#include "pnsfv/grid.hpp"

#include <cmath>
#include <random>

using namespace pnsfv;

namespace {
Grid make_grid(int n) { return Grid(GridSpec{2, n, 2.0, {-1, -1, -1}}); }

// Monte-Carlo area of a region on the side-2 torus (independent oracle).
template <typename Inside>
double mc_area(Inside&& inside, int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    int hits = 0;
    for (int i = 0; i < samples; ++i) {
        std::array<double, 3> x{dist(rng), dist(rng), 0.0};
        if (inside(x)) ++hits;
    }
    return 4.0 * hits / samples;
}
} // namespace

TEST_CASE("ring classification: worked corner examples at h = 0.2") {
    Grid g = make_grid(10);
    const Shape ring = Shape::ring(0.2, 0.7);
    const RegionMask mask = classify_cells(ring, g);

    // cell centered at (0.5, 0.1): farthest corner (0.6, 0.2) at ~0.632 < 0.7,
    // nearest corner (0.4, 0.0) at 0.4 > 0.2 -> FLUID
    const Index fluid_cell = g.cell_at({7, 5, 0});
    CHECK(g.cell_center(fluid_cell, 0) == doctest::Approx(0.5));
    CHECK(g.cell_center(fluid_cell, 1) == doctest::Approx(0.1));
    CHECK(mask.is_fluid(fluid_cell));

    // cell centered at (0.1, 0.1): nearest corner is the origin -> SOLID
    const Index solid_cell = g.cell_at({5, 5, 0});
    CHECK(g.cell_center(solid_cell, 0) == doctest::Approx(0.1));
    CHECK(mask.is_solid(solid_cell));
}

TEST_CASE("discrete fluid domain is contained in the fluid region") {
    const Shape ring = Shape::ring(0.2, 0.7);
    Grid g = make_grid(40);
    const RegionMask mask = classify_cells(ring, g);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (Index c = 0; c < g.num_cells(); ++c) {
        if (!mask.is_fluid(c)) continue;
        const auto lo = g.cell_low(c);
        for (int k = 0; k < 100; ++k) {
            std::array<double, 3> x{lo[0] + g.h() * dist(rng), lo[1] + g.h() * dist(rng), 0.0};
            CHECK(ring.inside(x, 2));
        }
    }
}

TEST_CASE("uncovered fluid area vanishes linearly under refinement") {
    const Shape ring = Shape::ring(0.2, 0.7);
    const double ring_area = mc_area([&](const std::array<double, 3>& x) {
        return ring.inside(x, 2);
    }, 2000000, 99);
    std::vector<double> gaps, hs;
    for (int m = 0; m <= 3; ++m) {
        const int n = 10 << m;
        Grid g = make_grid(n);
        const RegionMask mask = classify_cells(ring, g);
        const double covered = static_cast<double>(mask.count_fluid()) * g.cell_volume();
        gaps.push_back(ring_area - covered);
        hs.push_back(g.h());
        CHECK(covered <= ring_area + 2e-3); // containment, up to MC noise
    }
    // fitted slope of log(gap) vs log(h) close to 1
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double x = std::log(hs[i]), y = std::log(gaps[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double slope = (hs.size() * sxy - sx * sy) / (hs.size() * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("fluid cell count is nondecreasing under refinement") {
    const Shape ring = Shape::ring(0.2, 0.7);
    double prev = -1.0;
    for (int m = 0; m <= 3; ++m) {
        Grid g = make_grid(10 << m);
        const double area = classify_cells(ring, g).count_fluid() * g.cell_volume();
        CHECK(area >= prev);
        prev = area;
    }
}

TEST_CASE("layer splitting partitions the grid and tracks the boundary") {
    const Shape ring = Shape::ring(0.2, 0.7);
    for (int m = 0; m <= 2; ++m) {
        Grid g = make_grid(10 << m);
        const RegionMask mask = classify_cells(ring, g);
        const SplitMask split = split_layers(mask, ring, g);
        CHECK(split.count(LayerClass::I) + split.count(LayerClass::C) +
                  split.count(LayerClass::O) ==
              g.num_cells());
        for (Index c = 0; c < g.num_cells(); ++c) {
            if (split.at(c) == LayerClass::I) CHECK(mask.is_fluid(c));
            if (split.at(c) == LayerClass::O) CHECK(mask.is_solid(c));
            // every fluid cell adjacent to a solid cell sits in the collar
            if (mask.is_fluid(c)) {
                bool touches_solid = false;
                for (int a = 0; a < 2; ++a)
                    for (int dir : {-1, +1})
                        if (mask.is_solid(g.neighbor(c, a, dir))) touches_solid = true;
                if (touches_solid) CHECK(split.at(c) == LayerClass::C);
            }
        }
    }
}

TEST_CASE("collar measure shrinks linearly in h") {
    const Shape ring = Shape::ring(0.2, 0.7);
    const double c_geom = 3.0 * 2.0 * 3.14159265358979323846 * 0.9; // 3 x perimeter
    std::vector<double> areas, hs;
    for (int m = 0; m <= 4; ++m) {
        Grid g = make_grid(10 << m);
        const RegionMask mask = classify_cells(ring, g);
        const SplitMask split = split_layers(mask, ring, g);
        const double area = split.count(LayerClass::C) * g.cell_volume();
        areas.push_back(area);
        hs.push_back(g.h());
        CHECK(area <= 1.30 * c_geom * g.h()); // geometry constant with slack
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double x = std::log(hs[i]), y = std::log(areas[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double slope = (hs.size() * sxy - sx * sy) / (hs.size() * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("ball inside one cell: collar is the cell plus its one-ring") {
    Grid g = make_grid(10);
    // ball well inside the interior of the cell centered at (0.5, 0.5)
    const Shape ball = Shape::ball(0.01, {0.5, 0.5, 0.0});
    const RegionMask mask = classify_cells(ball, g);
    const SplitMask split = split_layers(mask, ball, g);
    CHECK(split.count(LayerClass::C) == 9); // 3x3 block
    CHECK(split.count(LayerClass::I) == 0); // no fully-inside cell
}

TEST_CASE("masked_norm") {
    Grid g = make_grid(10);
    ScalarField z(g, 0.0);
    auto everywhere = [](Index) { return true; };
    CHECK(masked_norm(z, everywhere, 2.0) == 0.0);

    ScalarField ones(g, 1.0);
    auto first_k = [](Index c) { return c < 7; };
    CHECK(masked_norm(ones, first_k, 2.0) ==
          doctest::Approx(std::sqrt(7.0 * g.cell_volume())));
    CHECK(masked_norm(ones, first_k, 1.0) == doctest::Approx(7.0 * g.cell_volume()));

    auto nothing = [](Index) { return false; };
    CHECK(masked_norm(ones, nothing, 2.0) == 0.0);

    // whole-torus norm agrees with the cell integral
    ScalarField f(g);
    for (Index c = 0; c < g.num_cells(); ++c) f[c] = 0.5 + 0.001 * static_cast<double>(c);
    ScalarField f2(g);
    for (Index c = 0; c < g.num_cells(); ++c) f2[c] = f[c] * f[c];
    CHECK(masked_norm(f, everywhere, 2.0) ==
          doctest::Approx(std::sqrt(cell_integral(f2))).epsilon(1e-13));
}

TEST_CASE("shapes touching the seam are rejected") {
    Grid g = make_grid(10);
    CHECK_THROWS_AS(classify_cells(Shape::ring(0.2, 0.98), g), std::invalid_argument);
    CHECK_THROWS_AS(classify_cells(Shape::ball(0.5, {0.8, 0.0, 0.0}), g),
                    std::invalid_argument);
}

TEST_CASE("flower classification stays inside and splits cleanly") {
    const Shape flower = Shape::flower(0.2, 0.7, 0.05, 8);
    Grid g = make_grid(40);
    const RegionMask mask = classify_cells(flower, g);
    CHECK(mask.count_fluid() > 0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (Index c = 0; c < g.num_cells(); ++c) {
        if (!mask.is_fluid(c)) continue;
        const auto lo = g.cell_low(c);
        for (int k = 0; k < 32; ++k) {
            std::array<double, 3> x{lo[0] + g.h() * dist(rng), lo[1] + g.h() * dist(rng), 0.0};
            CHECK(flower.inside(x, 2));
        }
    }
    const SplitMask split = split_layers(mask, flower, g);
    CHECK(split.count(LayerClass::I) + split.count(LayerClass::C) +
              split.count(LayerClass::O) ==
          g.num_cells());
}

TEST_CASE("solid fraction: exact on clean cells, partial near the boundary") {
    const Shape ring = Shape::ring(0.2, 0.7);
    Grid g = make_grid(20);
    const RegionMask mask = classify_cells(ring, g);
    const ScalarField frac = solid_fraction(ring, g);
    for (Index c = 0; c < g.num_cells(); ++c) {
        if (mask.is_fluid(c)) CHECK(frac[c] == 0.0);
        CHECK(frac[c] >= 0.0);
        CHECK(frac[c] <= 1.0);
    }
}
