/// @file ops.hpp
/// @brief Discrete calculus on piecewise constants: jumps, averages, face
///        gradient, cell divergence, Laplacian, the L2 projection onto
///        piecewise constants, and the upwind numerical flux.
///
/// Conventions: a face stores the normal +e_axis pointing from its left cell K
/// to its right cell L. jump = v(L) - v(K), average = (v(K)+v(L))/2. The face
/// gradient lives on dual cells of volume h^d; the divergence and Laplacian
/// are cell quantities.

#pragma once

#include <cmath>
#include "pnsfv/grid.hpp"

#include <functional>

namespace pnsfv {

/// One scalar per stored face, indexed like the grid's face table.
class FaceField {
public:
    FaceField() = default;
    explicit FaceField(const Grid& g, double init = 0.0)
        : grid_(&g), v_(static_cast<std::size_t>(g.num_faces()), init) {}

    const Grid& grid() const { return *grid_; }
    double& operator[](Index f) { return v_[static_cast<std::size_t>(f)]; }
    double operator[](Index f) const { return v_[static_cast<std::size_t>(f)]; }
    Index size() const { return static_cast<Index>(v_.size()); }

private:
    const Grid* grid_ = nullptr;
    std::vector<double> v_;
};

inline double jump(const ScalarField& v, const Grid::Face& f) {
    return v[f.right] - v[f.left];
}
inline double average(const ScalarField& v, const Grid::Face& f) {
    return 0.5 * (v[f.left] + v[f.right]);
}
/// Normal component of the face-averaged vector field, w.r.t. +e_axis.
inline double average_normal(const VectorField& v, const Grid::Face& f) {
    return 0.5 * (v.at(f.axis, f.left) + v.at(f.axis, f.right));
}

/// Face gradient [[r]]/h (the component along the face axis).
FaceField grad_E(const ScalarField& r);

/// Cell divergence (1/h) sum over faces of <v>.n; central two-point formula.
ScalarField div_h(const VectorField& v);

/// (2d+1)-point periodic Laplacian.
ScalarField laplace_h(const ScalarField& r);

/// || grad_E r ||_{L2}^2 with dual-cell volumes: sum_sigma h^d ([[r]]/h)^2.
double grad_E_norm2(const ScalarField& r);
/// Frobenius L2 norm^2 of the full velocity gradient tensor.
double grad_E_norm2(const VectorField& u);
double div_h_norm2(const VectorField& u);

/// Tensor Gauss-Legendre rule on the reference cell [-1/2,1/2]^d.
struct Quadrature {
    std::vector<double> nodes;   // 1-D nodes on [-1/2,1/2]
    std::vector<double> weights; // 1-D weights summing to 1
    static Quadrature gauss(int order);
    /// Uniform midpoint subsampling (s points per axis), for non-smooth data.
    static Quadrature midpoint(int s);
};

/// Per-cell average of a pointwise function via tensor quadrature.
ScalarField project(const std::function<double(const std::array<double, 3>&)>& f,
                    const Grid& g, int quad_order = 3);

/// Discontinuity-aware projection: cells flagged by `crossed` use s x s
/// midpoint subsampling, the rest tensor Gauss of the given order.
ScalarField project_adaptive(
    const std::function<double(const std::array<double, 3>&)>& f, const Grid& g,
    const std::function<bool(Index)>& crossed, int quad_order = 3,
    int subsamples = 8);

/// Upwind mass flux with h^alpha jump diffusion:
///   F = r_up * (<u>.n) - h^alpha * [[r]],  r_up = donor-cell value.
/// The tie <u>.n = 0 takes the left (in) value.
inline double upwind_flux_kernel(double r_left, double r_right, double un,
                                 double h, double alpha) {
    const double r_up = (un >= 0.0) ? r_left : r_right;
    return r_up * un - std::pow(h, alpha) * (r_right - r_left);
}
double upwind_flux(const ScalarField& r, const VectorField& u, Index face_id,
                   double alpha);

/// Residual of the discrete integration-by-parts identity for one axis:
///   | int (d_E^i f) v + int f (d_T^i v) |,
/// where v is piecewise constant on the axis-i dual cells (one value per
/// axis-i face). Telescopes to zero exactly on the torus.
double check_ibp(const Grid& g, const ScalarField& f,
                 const std::vector<double>& v_dual, int axis);

} // namespace pnsfv
