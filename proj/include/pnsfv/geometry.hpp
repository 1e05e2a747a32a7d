/// @file geometry.hpp
/// @brief Fluid-domain shapes, classification of cells into fluid/solid, and
///        the interior/collar/outer splitting of the mesh near the fluid
///        boundary.
///
/// A cell is FLUID only if it lies entirely inside the fluid region, so the
/// discrete fluid domain is always contained in the continuous one. Radial
/// shapes (ball, ring) use exact box-to-center distance tests; the flower
/// uses corner plus interior sampling with a conservative SOLID fallback.

#pragma once

#include <cmath>
#include "pnsfv/grid.hpp"

#include <functional>
#include <string>

namespace pnsfv {

struct Shape {
    enum class Kind { Ball, Ring, Flower, Custom };
    Kind kind = Kind::Ring;
    double r_in = 0.2;
    double r_out = 0.7;
    double base = 0.7;    // flower: mean outer radius is base + delta
    double delta = 0.05;  // flower: lobe amplitude
    int lobes = 8;
    std::array<double, 3> center{0.0, 0.0, 0.0};
    std::function<bool(const std::array<double, 3>&, int)> custom_inside;

    /// Pointwise membership test for the fluid region.
    bool inside(const std::array<double, 3>& x, int d) const;
    /// Upper bound on the distance from center to any boundary point.
    double bounding_radius() const;
    /// Flower outer radius at angle phi = atan2(x1, x2) measured in the
    /// (x1,x2) plane relative to the center.
    double flower_radius(double phi) const { return base + delta + delta * std::cos(lobes * phi); }

    static Shape ball(double r, std::array<double, 3> c = {0, 0, 0});
    static Shape ring(double r_in, double r_out, std::array<double, 3> c = {0, 0, 0});
    static Shape flower(double r_in, double base, double delta, int lobes,
                        std::array<double, 3> c = {0, 0, 0});
};

enum class CellClass : std::uint8_t { FLUID = 0, SOLID = 1 };
enum class LayerClass : std::uint8_t { I = 0, C = 1, O = 2 };

struct RegionMask {
    std::vector<CellClass> label;
    bool is_fluid(Index c) const { return label[static_cast<std::size_t>(c)] == CellClass::FLUID; }
    bool is_solid(Index c) const { return !is_fluid(c); }
    Index count_fluid() const;
};

struct SplitMask {
    std::vector<LayerClass> label;
    LayerClass at(Index c) const { return label[static_cast<std::size_t>(c)]; }
    Index count(LayerClass k) const;
};

/// Classify cells: FLUID iff the whole cell lies inside the fluid region.
/// Throws if the shape (plus a collar margin) does not fit inside the torus
/// without touching the periodic seam.
RegionMask classify_cells(const Shape& shape, const Grid& g);

/// Collar C = cells whose one-ring closure (face and corner neighbors)
/// meets the fluid boundary; I = fluid cells outside C; O = the rest.
SplitMask split_layers(const RegionMask& mask, const Shape& shape, const Grid& g);

/// (sum_{K in region} h^d |v_K|^p)^{1/p}; empty region gives 0.
double masked_norm(const ScalarField& v, const std::function<bool(Index)>& in_region,
                   double p);
double masked_norm(const VectorField& v, const std::function<bool(Index)>& in_region,
                   double p);

/// Per-cell volume fraction of the SOLID region (complement of the fluid
/// region), estimated with s x s(+) midpoint subsampling. Exactly 0 on cells
/// fully inside the fluid and 1 on cells fully outside.
ScalarField solid_fraction(const Shape& shape, const Grid& g, int samples = 8);

} // namespace pnsfv
