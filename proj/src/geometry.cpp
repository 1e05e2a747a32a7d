#include "pnsfv/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace pnsfv {

Shape Shape::ball(double r, std::array<double, 3> c) {
    Shape s;
    s.kind = Kind::Ball;
    s.r_out = r;
    s.r_in = 0.0;
    s.center = c;
    return s;
}

Shape Shape::ring(double r_in, double r_out, std::array<double, 3> c) {
    if (!(0.0 < r_in && r_in < r_out))
        throw std::invalid_argument("ring requires 0 < r_in < r_out");
    Shape s;
    s.kind = Kind::Ring;
    s.r_in = r_in;
    s.r_out = r_out;
    s.center = c;
    return s;
}

Shape Shape::flower(double r_in, double base, double delta, int lobes,
                    std::array<double, 3> c) {
    if (!(0.0 < r_in && r_in < base))
        throw std::invalid_argument("flower requires 0 < r_in < base");
    Shape s;
    s.kind = Kind::Flower;
    s.r_in = r_in;
    s.base = base;
    s.delta = delta;
    s.lobes = lobes;
    s.center = c;
    return s;
}

bool Shape::inside(const std::array<double, 3>& x, int d) const {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
        const double dx = x[a] - center[a];
        r2 += dx * dx;
    }
    const double r = std::sqrt(r2);
    switch (kind) {
        case Kind::Ball:
            return r < r_out;
        case Kind::Ring:
            return r_in < r && r < r_out;
        case Kind::Flower: {
            if (r <= r_in) return false;
            const double phi = std::atan2(x[0] - center[0], x[1] - center[1]);
            return r < flower_radius(phi);
        }
        case Kind::Custom:
            return custom_inside(x, d);
    }
    return false;
}

double Shape::bounding_radius() const {
    switch (kind) {
        case Kind::Ball:
        case Kind::Ring:
            return r_out;
        case Kind::Flower:
            return base + 2.0 * delta;
        case Kind::Custom:
            throw std::invalid_argument("custom shape has no bounding radius");
    }
    return 0.0;
}

Index RegionMask::count_fluid() const {
    Index k = 0;
    for (auto l : label)
        if (l == CellClass::FLUID) ++k;
    return k;
}

Index SplitMask::count(LayerClass kind) const {
    Index k = 0;
    for (auto l : label)
        if (l == kind) ++k;
    return k;
}

namespace {

// Per-axis min/max distance from the cell box to the shape center.
struct BoxDist {
    double dmin, dmax; // Euclidean distances
};

BoxDist box_distance(const Grid& g, Index cell, const std::array<double, 3>& c) {
    const auto lo = g.cell_low(cell);
    double mn2 = 0.0, mx2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double l = lo[a] - c[a];
        const double r = l + g.h();
        const double amin = (l <= 0.0 && r >= 0.0) ? 0.0 : std::min(std::abs(l), std::abs(r));
        const double amax = std::max(std::abs(l), std::abs(r));
        mn2 += amin * amin;
        mx2 += amax * amax;
    }
    return {std::sqrt(mn2), std::sqrt(mx2)};
}

// Samples: 2^d corners plus s x s(+) interior midpoints.
template <typename Fn>
bool all_samples(const Grid& g, Index cell, int s, Fn&& pred) {
    const auto lo = g.cell_low(cell);
    const double h = g.h();
    const int d = g.dim();
    const int nz = (d == 3) ? s : 1;
    // corners
    for (int mask = 0; mask < (1 << d); ++mask) {
        std::array<double, 3> x = lo;
        for (int a = 0; a < d; ++a)
            if (mask & (1 << a)) x[a] += h;
        if (!pred(x)) return false;
    }
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < nz; ++k) {
                std::array<double, 3> x{lo[0] + (i + 0.5) * h / s, lo[1] + (j + 0.5) * h / s,
                                        (d == 3) ? lo[2] + (k + 0.5) * h / s : 0.0};
                if (!pred(x)) return false;
            }
    return true;
}

template <typename Fn>
bool any_sample_differs(const Grid& g, Index cell, int s, Fn&& pred) {
    bool first = true, ref = false;
    const auto lo = g.cell_low(cell);
    const double h = g.h();
    const int d = g.dim();
    const int nz = (d == 3) ? s : 1;
    auto visit = [&](const std::array<double, 3>& x) {
        const bool v = pred(x);
        if (first) {
            ref = v;
            first = false;
            return false;
        }
        return v != ref;
    };
    for (int mask = 0; mask < (1 << d); ++mask) {
        std::array<double, 3> x = lo;
        for (int a = 0; a < d; ++a)
            if (mask & (1 << a)) x[a] += h;
        if (visit(x)) return true;
    }
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < nz; ++k) {
                std::array<double, 3> x{lo[0] + (i + 0.5) * h / s, lo[1] + (j + 0.5) * h / s,
                                        (d == 3) ? lo[2] + (k + 0.5) * h / s : 0.0};
                if (visit(x)) return true;
            }
    return false;
}

// Does the cell meet the fluid boundary? Exact for radial shapes, sampled
// for the flower.
bool meets_boundary(const Shape& shape, const Grid& g, Index cell) {
    switch (shape.kind) {
        case Shape::Kind::Ball: {
            const auto bd = box_distance(g, cell, shape.center);
            return bd.dmin <= shape.r_out && shape.r_out <= bd.dmax;
        }
        case Shape::Kind::Ring: {
            const auto bd = box_distance(g, cell, shape.center);
            return (bd.dmin <= shape.r_out && shape.r_out <= bd.dmax) ||
                   (bd.dmin <= shape.r_in && shape.r_in <= bd.dmax);
        }
        case Shape::Kind::Flower: {
            const auto bd = box_distance(g, cell, shape.center);
            if (bd.dmin <= shape.r_in && shape.r_in <= bd.dmax) return true;
            if (bd.dmax < shape.base - shape.delta || bd.dmin > shape.base + 2.0 * shape.delta)
                return false; // clear of the outer lobe band
            return any_sample_differs(g, cell, 8, [&](const std::array<double, 3>& x) {
                return shape.inside(x, g.dim());
            });
        }
        case Shape::Kind::Custom:
            return any_sample_differs(g, cell, 8, [&](const std::array<double, 3>& x) {
                return shape.inside(x, g.dim());
            });
    }
    return false;
}

// The shape must stay clear of the outermost cell ring: then membership
// tests need no periodic images and the collar cannot wrap across the seam.
void check_seam(const Shape& shape, const Grid& g) {
    if (shape.kind == Shape::Kind::Custom) return; // caller's responsibility
    const double margin = shape.bounding_radius() + g.h();
    for (int a = 0; a < g.dim(); ++a) {
        const double lo = g.origin()[a];
        const double hi = lo + g.side();
        if (shape.center[a] - margin < lo || shape.center[a] + margin > hi)
            throw std::invalid_argument(
                "shape boundary (plus its collar) reaches the torus seam; enlarge the domain");
    }
}

} // namespace

RegionMask classify_cells(const Shape& shape, const Grid& g) {
    check_seam(shape, g);
    RegionMask mask;
    mask.label.assign(static_cast<std::size_t>(g.num_cells()), CellClass::SOLID);
    for (Index c = 0; c < g.num_cells(); ++c) {
        bool fluid = false;
        switch (shape.kind) {
            case Shape::Kind::Ball: {
                const auto bd = box_distance(g, c, shape.center);
                fluid = bd.dmax < shape.r_out;
                break;
            }
            case Shape::Kind::Ring: {
                const auto bd = box_distance(g, c, shape.center);
                fluid = bd.dmax < shape.r_out && bd.dmin > shape.r_in;
                break;
            }
            case Shape::Kind::Flower: {
                const auto bd = box_distance(g, c, shape.center);
                if (bd.dmin <= shape.r_in) break; // touches the inner disk
                if (bd.dmax < shape.base - shape.delta) {
                    fluid = true; // inside the smallest lobe radius
                    break;
                }
                fluid = all_samples(g, c, 8, [&](const std::array<double, 3>& x) {
                    return shape.inside(x, g.dim());
                });
                break;
            }
            case Shape::Kind::Custom:
                fluid = all_samples(g, c, 8, [&](const std::array<double, 3>& x) {
                    return shape.inside(x, g.dim());
                });
                break;
        }
        if (fluid) mask.label[static_cast<std::size_t>(c)] = CellClass::FLUID;
    }
    return mask;
}

SplitMask split_layers(const RegionMask& mask, const Shape& shape, const Grid& g) {
    if (static_cast<Index>(mask.label.size()) != g.num_cells())
        throw std::invalid_argument("split_layers: mask/grid mismatch");
    const Index nc = g.num_cells();
    std::vector<std::uint8_t> meets(static_cast<std::size_t>(nc), 0);
    for (Index c = 0; c < nc; ++c)
        meets[static_cast<std::size_t>(c)] = meets_boundary(shape, g, c) ? 1 : 0;

    SplitMask out;
    out.label.assign(static_cast<std::size_t>(nc), LayerClass::O);
    const int d = g.dim();
    for (Index c = 0; c < nc; ++c) {
        // one-ring closure: all cells whose closure intersects this cell's
        // closure, i.e. the full 3^d block including corner neighbors
        bool in_collar = false;
        const auto cc = g.coords(c);
        const int kz = (d == 3) ? 1 : 0;
        for (int di = -1; di <= 1 && !in_collar; ++di)
            for (int dj = -1; dj <= 1 && !in_collar; ++dj)
                for (int dk = -kz; dk <= kz && !in_collar; ++dk) {
                    std::array<int, 3> nb = cc;
                    nb[0] = (nb[0] + di + g.cells_per_axis()) % g.cells_per_axis();
                    nb[1] = (nb[1] + dj + g.cells_per_axis()) % g.cells_per_axis();
                    if (d == 3) nb[2] = (nb[2] + dk + g.cells_per_axis()) % g.cells_per_axis();
                    if (meets[static_cast<std::size_t>(g.cell_at(nb))]) in_collar = true;
                }
        if (in_collar) {
            out.label[static_cast<std::size_t>(c)] = LayerClass::C;
        } else if (mask.is_fluid(c)) {
            out.label[static_cast<std::size_t>(c)] = LayerClass::I;
        } // else O
    }
    return out;
}

double masked_norm(const ScalarField& v, const std::function<bool(Index)>& in_region,
                   double p) {
    const Grid& g = v.grid();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(g.num_cells()));
    for (Index c = 0; c < g.num_cells(); ++c)
        if (in_region(c)) terms.push_back(g.cell_volume() * std::pow(std::abs(v[c]), p));
    if (terms.empty()) return 0.0;
    return std::pow(pairwise_sum(terms), 1.0 / p);
}

double masked_norm(const VectorField& v, const std::function<bool(Index)>& in_region,
                   double p) {
    const Grid& g = v.grid();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(g.num_cells()));
    for (Index c = 0; c < g.num_cells(); ++c) {
        if (!in_region(c)) continue;
        double mag2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) mag2 += v.at(a, c) * v.at(a, c);
        terms.push_back(g.cell_volume() * std::pow(std::sqrt(mag2), p));
    }
    if (terms.empty()) return 0.0;
    return std::pow(pairwise_sum(terms), 1.0 / p);
}

ScalarField solid_fraction(const Shape& shape, const Grid& g, int samples) {
    ScalarField frac(g);
    const int d = g.dim();
    const double h = g.h();
    const int nz = (d == 3) ? samples : 1;
    const double w = 1.0 / (samples * samples * nz);
    for (Index c = 0; c < g.num_cells(); ++c) {
        // cheap exact cases first
        if (shape.kind == Shape::Kind::Ball || shape.kind == Shape::Kind::Ring) {
            const auto bd = box_distance(g, c, shape.center);
            const bool fully_fluid =
                (shape.kind == Shape::Kind::Ball)
                    ? bd.dmax < shape.r_out
                    : (bd.dmax < shape.r_out && bd.dmin > shape.r_in);
            const bool fully_solid =
                (shape.kind == Shape::Kind::Ball)
                    ? bd.dmin > shape.r_out
                    : (bd.dmin > shape.r_out || bd.dmax < shape.r_in);
            if (fully_fluid) {
                frac[c] = 0.0;
                continue;
            }
            if (fully_solid) {
                frac[c] = 1.0;
                continue;
            }
        }
        const auto lo = g.cell_low(c);
        int hits = 0;
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < samples; ++j)
                for (int k = 0; k < nz; ++k) {
                    std::array<double, 3> x{lo[0] + (i + 0.5) * h / samples,
                                            lo[1] + (j + 0.5) * h / samples,
                                            (d == 3) ? lo[2] + (k + 0.5) * h / samples : 0.0};
                    if (!shape.inside(x, d)) ++hits;
                }
        frac[c] = hits * w;
    }
    return frac;
}

} // namespace pnsfv
