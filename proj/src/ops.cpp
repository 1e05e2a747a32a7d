#include "pnsfv/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace pnsfv {

FaceField grad_E(const ScalarField& r) {
    const Grid& g = r.grid();
    FaceField out(g);
    const double inv_h = 1.0 / g.h();
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        out[f] = (r[fc.right] - r[fc.left]) * inv_h;
    }
    return out;
}

ScalarField div_h(const VectorField& v) {
    const Grid& g = v.grid();
    ScalarField out(g);
    const double inv_2h = 0.5 / g.h();
    for (Index c = 0; c < g.num_cells(); ++c) {
        double s = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            s += v.at(a, g.neighbor(c, a, +1)) - v.at(a, g.neighbor(c, a, -1));
        }
        out[c] = s * inv_2h;
    }
    return out;
}

ScalarField laplace_h(const ScalarField& r) {
    const Grid& g = r.grid();
    ScalarField out(g);
    const double inv_h2 = 1.0 / (g.h() * g.h());
    for (Index c = 0; c < g.num_cells(); ++c) {
        double s = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            s += r[g.neighbor(c, a, +1)] + r[g.neighbor(c, a, -1)] - 2.0 * r[c];
        }
        out[c] = s * inv_h2;
    }
    return out;
}

double grad_E_norm2(const ScalarField& r) {
    const Grid& g = r.grid();
    const double dual_vol = g.cell_volume();
    const double inv_h = 1.0 / g.h();
    std::vector<double> terms(static_cast<std::size_t>(g.num_faces()));
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double gr = (r[fc.right] - r[fc.left]) * inv_h;
        terms[static_cast<std::size_t>(f)] = dual_vol * gr * gr;
    }
    return pairwise_sum(terms);
}

double grad_E_norm2(const VectorField& u) {
    const Grid& g = u.grid();
    const double dual_vol = g.cell_volume();
    const double inv_h = 1.0 / g.h();
    std::vector<double> terms(static_cast<std::size_t>(g.num_faces()));
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        double s = 0.0;
        for (int j = 0; j < g.dim(); ++j) {
            const double gr = (u.at(j, fc.right) - u.at(j, fc.left)) * inv_h;
            s += gr * gr;
        }
        terms[static_cast<std::size_t>(f)] = dual_vol * s;
    }
    return pairwise_sum(terms);
}

double div_h_norm2(const VectorField& u) {
    const ScalarField d = div_h(u);
    const Grid& g = u.grid();
    std::vector<double> terms(static_cast<std::size_t>(g.num_cells()));
    for (Index c = 0; c < g.num_cells(); ++c)
        terms[static_cast<std::size_t>(c)] = g.cell_volume() * d[c] * d[c];
    return pairwise_sum(terms);
}

Quadrature Quadrature::gauss(int order) {
    Quadrature q;
    switch (order) {
        case 1:
            q.nodes = {0.0};
            q.weights = {1.0};
            break;
        case 2: {
            const double x = 0.5 / std::sqrt(3.0);
            q.nodes = {-x, x};
            q.weights = {0.5, 0.5};
            break;
        }
        case 3: {
            const double x = 0.5 * std::sqrt(3.0 / 5.0);
            q.nodes = {-x, 0.0, x};
            q.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
            break;
        }
        case 4: {
            const double a = 0.5 * std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double b = 0.5 * std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
            q.nodes = {-b, -a, a, b};
            q.weights = {wb, wa, wa, wb};
            break;
        }
        default:
            throw std::invalid_argument("quadrature order must be in [1,4]");
    }
    return q;
}

Quadrature Quadrature::midpoint(int s) {
    Quadrature q;
    q.nodes.resize(s);
    q.weights.assign(s, 1.0 / s);
    for (int i = 0; i < s; ++i) q.nodes[i] = -0.5 + (i + 0.5) / s;
    return q;
}

namespace {

double cell_average(const std::function<double(const std::array<double, 3>&)>& f,
                    const Grid& g, Index cell, const Quadrature& q) {
    const int d = g.dim();
    const double h = g.h();
    const auto xc = g.cell_center(cell);
    const int nq = static_cast<int>(q.nodes.size());
    double sum = 0.0;
    if (d == 2) {
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nq; ++j) {
                std::array<double, 3> x{xc[0] + q.nodes[i] * h, xc[1] + q.nodes[j] * h, 0.0};
                sum += q.weights[i] * q.weights[j] * f(x);
            }
    } else {
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nq; ++j)
                for (int k = 0; k < nq; ++k) {
                    std::array<double, 3> x{xc[0] + q.nodes[i] * h, xc[1] + q.nodes[j] * h,
                                            xc[2] + q.nodes[k] * h};
                    sum += q.weights[i] * q.weights[j] * q.weights[k] * f(x);
                }
    }
    return sum;
}

} // namespace

ScalarField project(const std::function<double(const std::array<double, 3>&)>& f,
                    const Grid& g, int quad_order) {
    const Quadrature q = Quadrature::gauss(quad_order);
    ScalarField out(g);
    for (Index c = 0; c < g.num_cells(); ++c) out[c] = cell_average(f, g, c, q);
    return out;
}

ScalarField project_adaptive(
    const std::function<double(const std::array<double, 3>&)>& f, const Grid& g,
    const std::function<bool(Index)>& crossed, int quad_order, int subsamples) {
    const Quadrature smooth = Quadrature::gauss(quad_order);
    const Quadrature rough = Quadrature::midpoint(subsamples);
    ScalarField out(g);
    for (Index c = 0; c < g.num_cells(); ++c)
        out[c] = cell_average(f, g, c, crossed(c) ? rough : smooth);
    return out;
}

double upwind_flux(const ScalarField& r, const VectorField& u, Index face_id,
                   double alpha) {
    const Grid& g = r.grid();
    const auto fc = g.face(face_id);
    const double un = average_normal(u, fc);
    return upwind_flux_kernel(r[fc.left], r[fc.right], un, g.h(), alpha);
}

double check_ibp(const Grid& g, const ScalarField& f,
                 const std::vector<double>& v_dual, int axis) {
    if (static_cast<Index>(v_dual.size()) != g.num_cells())
        throw std::invalid_argument("check_ibp: dual field must have one value per axis face");
    const double inv_h = 1.0 / g.h();
    // int (d_E f) v over dual cells of this axis
    std::vector<double> lhs(static_cast<std::size_t>(g.num_cells()));
    for (Index c = 0; c < g.num_cells(); ++c) {
        const Index right = g.neighbor(c, axis, +1);
        lhs[static_cast<std::size_t>(c)] =
            g.cell_volume() * (f[right] - f[c]) * inv_h * v_dual[static_cast<std::size_t>(c)];
    }
    // int f (d_T v) over cells: d_T v |_K = (v_{K,+} - v_{K,-})/h, where the
    // +/- faces of K along the axis are faces (axis,K) and (axis,K-e_axis).
    std::vector<double> rhs(static_cast<std::size_t>(g.num_cells()));
    for (Index c = 0; c < g.num_cells(); ++c) {
        const Index minus = g.neighbor(c, axis, -1);
        const double dT =
            (v_dual[static_cast<std::size_t>(c)] - v_dual[static_cast<std::size_t>(minus)]) * inv_h;
        rhs[static_cast<std::size_t>(c)] = g.cell_volume() * f[c] * dT;
    }
    return std::abs(pairwise_sum(lhs) + pairwise_sum(rhs));
}

} // namespace pnsfv
