/// @file grid.hpp
/// @brief Uniform periodic structured mesh of the d-torus with face and
///        dual-cell topology, plus piecewise-constant field storage.
///
/// Cells are cubes of edge h = side/n, indexed lexicographically with axis 0
/// fastest. Each interior face is stored once as (axis, leftCell); the face
/// normal is +e_axis pointing from leftCell to its +1 neighbor, so the face
/// set partitions into d axis classes of n^d faces each.

#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pnsfv {

using Index = std::int64_t;

/// Deterministic pairwise tree sum; bitwise reproducible for a fixed order.
double pairwise_sum(std::span<const double> v);

struct GridSpec {
    int d = 2;                              // dimension, 2 or 3
    int n = 2;                              // cells per axis
    double side = 2.0;                      // torus edge length
    std::array<double, 3> origin{-1.0, -1.0, -1.0};
};

class Grid {
public:
    explicit Grid(const GridSpec& spec);

    int dim() const { return d_; }
    int cells_per_axis() const { return n_; }
    double side() const { return side_; }
    double h() const { return h_; }
    double cell_volume() const { return cell_vol_; }
    double face_area() const { return face_area_; }
    double torus_volume() const { return cell_vol_ * static_cast<double>(ncells_); }
    const std::array<double, 3>& origin() const { return origin_; }

    Index num_cells() const { return ncells_; }
    Index num_faces() const { return static_cast<Index>(d_) * ncells_; }

    std::array<int, 3> coords(Index cell) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = 0; a < d_; ++a) {
            c[a] = static_cast<int>(cell % n_);
            cell /= n_;
        }
        return c;
    }
    Index cell_at(const std::array<int, 3>& c) const {
        Index id = 0;
        for (int a = d_ - 1; a >= 0; --a) id = id * n_ + c[a];
        return id;
    }

    /// Periodic shift by one cell along `axis`; dir in {-1,+1}.
    Index neighbor(Index cell, int axis, int dir) const {
        assert(axis >= 0 && axis < d_ && (dir == 1 || dir == -1));
        const Index s = stride_[axis];
        const Index block = s * n_;
        const Index base = (cell / block) * block;
        const Index off = cell - base;
        Index shifted = off + dir * s;
        if (shifted < 0) shifted += block;
        else if (shifted >= block) shifted -= block;
        return base + shifted;
    }

    /// Faces: id = axis * n^d + leftCell.
    struct Face {
        int axis;
        Index left;   // normal +e_axis points left -> right
        Index right;
    };
    Index face_id(int axis, Index left_cell) const {
        return static_cast<Index>(axis) * ncells_ + left_cell;
    }
    Face face(Index f) const {
        const int axis = static_cast<int>(f / ncells_);
        const Index left = f % ncells_;
        return Face{axis, left, neighbor(left, axis, +1)};
    }

    /// Center coordinate of a cell along one axis.
    double cell_center(Index cell, int axis) const {
        const auto c = coords(cell);
        return origin_[axis] + (c[axis] + 0.5) * h_;
    }
    std::array<double, 3> cell_center(Index cell) const {
        const auto c = coords(cell);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < d_; ++a) x[a] = origin_[a] + (c[a] + 0.5) * h_;
        return x;
    }
    /// Low corner of a cell.
    std::array<double, 3> cell_low(Index cell) const {
        const auto c = coords(cell);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < d_; ++a) x[a] = origin_[a] + c[a] * h_;
        return x;
    }
    /// Center of a face (midpoint of the shared plane).
    std::array<double, 3> face_center(Index f) const {
        const Face fc = face(f);
        auto x = cell_center(fc.left);
        x[fc.axis] += 0.5 * h_;
        if (x[fc.axis] >= origin_[fc.axis] + side_) x[fc.axis] -= side_;
        return x;
    }

private:
    int d_, n_;
    double side_, h_, cell_vol_, face_area_;
    std::array<double, 3> origin_;
    Index ncells_;
    std::array<Index, 3> stride_;
};

/// One scalar per cell.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g, double init = 0.0)
        : grid_(&g), v_(static_cast<std::size_t>(g.num_cells()), init) {}

    const Grid& grid() const { return *grid_; }
    double& operator[](Index i) { return v_[static_cast<std::size_t>(i)]; }
    double operator[](Index i) const { return v_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }
    Index size() const { return static_cast<Index>(v_.size()); }

private:
    const Grid* grid_ = nullptr;
    std::vector<double> v_;
};

/// One d-vector per cell, stored component-major.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const Grid& g, double init = 0.0) : grid_(&g) {
        for (int a = 0; a < g.dim(); ++a)
            comp_[a].assign(static_cast<std::size_t>(g.num_cells()), init);
    }

    const Grid& grid() const { return *grid_; }
    int dim() const { return grid_->dim(); }
    std::vector<double>& comp(int a) { return comp_[a]; }
    const std::vector<double>& comp(int a) const { return comp_[a]; }
    double& at(int a, Index i) { return comp_[a][static_cast<std::size_t>(i)]; }
    double at(int a, Index i) const { return comp_[a][static_cast<std::size_t>(i)]; }

private:
    const Grid* grid_ = nullptr;
    std::array<std::vector<double>, 3> comp_;
};

/// Discrete density/velocity pair at one time level; rho must stay positive.
struct State {
    ScalarField rho;
    VectorField u;
    double t = 0.0;

    double min_rho() const {
        double m = rho[0];
        for (Index i = 1; i < rho.size(); ++i) m = std::min(m, rho[i]);
        return m;
    }
};

/// Sum_K |K| v_K with a fixed lexicographic pairwise-tree order.
double cell_integral(const ScalarField& f);

/// Momentum-style integral of one vector component.
double cell_integral_product(const ScalarField& a, const std::vector<double>& b,
                             const Grid& g);

Grid build_grid(const GridSpec& spec);

} // namespace pnsfv
