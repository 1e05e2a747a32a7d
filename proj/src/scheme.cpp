#include "pnsfv/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pnsfv {

double sup_norm(const ScalarField& f) {
    double m = 0.0;
    for (Index c = 0; c < f.size(); ++c) m = std::max(m, std::abs(f[c]));
    return m;
}

double sup_norm(const VectorField& f) {
    double m = 0.0;
    const Grid& g = f.grid();
    for (int a = 0; a < g.dim(); ++a)
        for (Index c = 0; c < g.num_cells(); ++c) m = std::max(m, std::abs(f.at(a, c)));
    return m;
}

namespace {

// Face-averaged normal velocities, one value per stored face.
std::vector<double> face_velocities(const VectorField& u) {
    const Grid& g = u.grid();
    std::vector<double> v(static_cast<std::size_t>(g.num_faces()));
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        v[static_cast<std::size_t>(f)] = 0.5 * (u.at(fc.axis, fc.left) + u.at(fc.axis, fc.right));
    }
    return v;
}

// Accumulates the outward flux divergence (1/h) sum s_{K,sigma} F_sigma of
// the upwind flux of r into `out` (added, not assigned).
void add_flux_divergence(const ScalarField& r, const std::vector<double>& face_v,
                         double alpha, ScalarField& out) {
    const Grid& g = r.grid();
    const double h = g.h();
    const double ha = std::pow(h, alpha);
    const double inv_h = 1.0 / h;
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double un = face_v[static_cast<std::size_t>(f)];
        const double rup = (un >= 0.0) ? r[fc.left] : r[fc.right];
        const double flux = rup * un - ha * (r[fc.right] - r[fc.left]);
        out[fc.left] += flux * inv_h;
        out[fc.right] -= flux * inv_h;
    }
}

} // namespace

ScalarField continuity_residual(const State& now, const State& old,
                                const FluidParams& par, double dt) {
    const Grid& g = now.rho.grid();
    if (&g != &old.rho.grid()) throw std::invalid_argument("residual: grid mismatch");
    ScalarField res(g);
    const double inv_dt = 1.0 / dt;
    for (Index c = 0; c < g.num_cells(); ++c) res[c] = (now.rho[c] - old.rho[c]) * inv_dt;
    add_flux_divergence(now.rho, face_velocities(now.u), par.alpha, res);
    return res;
}

VectorField momentum_residual(const State& now, const State& old,
                              const RegionMask& mask, const FluidParams& par,
                              double dt) {
    const Grid& g = now.rho.grid();
    if (&g != &old.rho.grid()) throw std::invalid_argument("residual: grid mismatch");
    if (static_cast<Index>(mask.label.size()) != g.num_cells())
        throw std::invalid_argument("residual: mask/grid mismatch");
    const int d = g.dim();
    const double h = g.h();
    const double inv_dt = 1.0 / dt;
    const double inv_2h = 0.5 / h;
    const double inv_h2 = 1.0 / (h * h);
    const double nu = par.nu(d);
    const double inv_eps = 1.0 / par.eps;

    VectorField res(g);
    const auto face_v = face_velocities(now.u);

    // backward-Euler momentum rate and penalty friction
    for (int j = 0; j < d; ++j)
        for (Index c = 0; c < g.num_cells(); ++c) {
            const double m_new = now.rho[c] * now.u.at(j, c);
            const double m_old = old.rho[c] * old.u.at(j, c);
            double r = (m_new - m_old) * inv_dt;
            if (mask.is_solid(c)) r += inv_eps * now.u.at(j, c);
            res.at(j, c) = r;
        }

    // upwind convection of momentum, componentwise with a common donor side
    const double ha = std::pow(h, par.alpha);
    const double inv_h = 1.0 / h;
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double un = face_v[static_cast<std::size_t>(f)];
        const Index up = (un >= 0.0) ? fc.left : fc.right;
        for (int j = 0; j < d; ++j) {
            const double mj_up = now.rho[up] * now.u.at(j, up);
            const double mj_l = now.rho[fc.left] * now.u.at(j, fc.left);
            const double mj_r = now.rho[fc.right] * now.u.at(j, fc.right);
            const double flux = mj_up * un - ha * (mj_r - mj_l);
            res.at(j, fc.left) += flux * inv_h;
            res.at(j, fc.right) -= flux * inv_h;
        }
    }

    // central pressure gradient, viscosity, grad-div term
    ScalarField p(g), divu(g);
    for (Index c = 0; c < g.num_cells(); ++c) p[c] = par.pressure(now.rho[c]);
    if (nu != 0.0) divu = div_h(now.u);
    for (int j = 0; j < d; ++j)
        for (Index c = 0; c < g.num_cells(); ++c) {
            const Index cp = g.neighbor(c, j, +1);
            const Index cm = g.neighbor(c, j, -1);
            double r = (p[cp] - p[cm]) * inv_2h;
            double lap = -2.0 * d * now.u.at(j, c);
            for (int a = 0; a < d; ++a)
                lap += now.u.at(j, g.neighbor(c, a, +1)) + now.u.at(j, g.neighbor(c, a, -1));
            r -= par.mu * lap * inv_h2;
            if (nu != 0.0) r -= nu * (divu[cp] - divu[cm]) * inv_2h;
            res.at(j, c) += r;
        }
    return res;
}

// ---------------------------------------------------------------------------
// Matrix-free preconditioned BiCGStab. Deterministic: fixed loop order, no
// threading. Convergence is declared on the inf-norm of the true residual.
// ---------------------------------------------------------------------------
namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
double inf_norm(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

struct BiCGStabResult {
    int iters = 0;
    bool converged = false;
    double residual = 0.0;
};

template <typename Apply>
BiCGStabResult bicgstab(const Apply& A, const Vec& b, Vec& x, const Vec& inv_diag,
                        double tol_abs, int max_iter) {
    const std::size_t n = b.size();
    Vec r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n), tmp(n);

    A(x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rhat = r;
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;

    BiCGStabResult out;
    out.residual = inf_norm(r);
    if (out.residual <= tol_abs) {
        out.converged = true;
        return out;
    }

    for (int it = 1; it <= max_iter; ++it) {
        const double rho = dot(rhat, r);
        if (std::abs(rho) < 1e-300) { // breakdown: restart from current residual
            A(x, tmp);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
            rhat = r;
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            continue;
        }
        const double beta = (rho / rho_old) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (std::size_t i = 0; i < n; ++i) phat[i] = p[i] * inv_diag[i];
        A(phat, v);
        alpha = rho / dot(rhat, v);
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (inf_norm(s) <= 0.1 * tol_abs) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) shat[i] = s[i] * inv_diag[i];
            A(shat, t);
            const double tt = dot(t, t);
            omega = (tt > 0.0) ? dot(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
            for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        }
        out.iters = it;
        // cheap screening on the recurrence residual; convergence is only
        // declared on the true residual, which also resyncs the recurrence
        // against accumulated drift on a fixed schedule
        if (inf_norm(r) <= tol_abs || it % 16 == 0) {
            A(x, tmp);
            double rn = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = b[i] - tmp[i];
                rn = std::max(rn, std::abs(r[i]));
            }
            out.residual = rn;
            if (rn <= tol_abs) {
                out.converged = true;
                return out;
            }
        }
        rho_old = rho;
    }
    // final true-residual verdict
    A(x, tmp);
    double rn = 0.0;
    for (std::size_t i = 0; i < n; ++i) rn = std::max(rn, std::abs(b[i] - tmp[i]));
    out.residual = rn;
    out.converged = rn <= tol_abs;
    return out;
}

// Upwind continuity operator in time-step form: y = x + (dt/h) fluxdiv(x; v).
struct DensityOp {
    const Grid& g;
    const std::vector<double>& face_v;
    double dt, alpha;

    void operator()(const Vec& x, Vec& y) const {
        const double h = g.h();
        const double ha = std::pow(h, alpha);
        const double c = dt / h;
        std::copy(x.begin(), x.end(), y.begin());
        for (Index f = 0; f < g.num_faces(); ++f) {
            const auto fc = g.face(f);
            const double un = face_v[static_cast<std::size_t>(f)];
            const double xl = x[static_cast<std::size_t>(fc.left)];
            const double xr = x[static_cast<std::size_t>(fc.right)];
            const double flux = ((un >= 0.0) ? xl : xr) * un - ha * (xr - xl);
            y[static_cast<std::size_t>(fc.left)] += c * flux;
            y[static_cast<std::size_t>(fc.right)] -= c * flux;
        }
    }

    Vec inverse_diagonal() const {
        const double h = g.h();
        const double ha = std::pow(h, alpha);
        const double c = dt / h;
        Vec diag(static_cast<std::size_t>(g.num_cells()), 1.0);
        for (Index f = 0; f < g.num_faces(); ++f) {
            const auto fc = g.face(f);
            const double un = face_v[static_cast<std::size_t>(f)];
            diag[static_cast<std::size_t>(fc.left)] += c * (std::max(un, 0.0) + ha);
            diag[static_cast<std::size_t>(fc.right)] += c * (std::max(-un, 0.0) + ha);
        }
        for (double& x : diag) x = 1.0 / x;
        return diag;
    }
};

// Momentum operator acting on the flat velocity vector (component-major):
// mass rate with the new density, frozen upwind convection, penalty,
// Laplacian viscosity and the grad-div term.
struct MomentumOp {
    const Grid& g;
    const ScalarField& rho;
    const std::vector<double>& face_v;
    const RegionMask& mask;
    const FluidParams& par;
    double dt;

    std::size_t ncells() const { return static_cast<std::size_t>(g.num_cells()); }

    void operator()(const Vec& x, Vec& y) const {
        const int d = g.dim();
        const double h = g.h();
        const double ha = std::pow(h, par.alpha);
        const double inv_h = 1.0 / h;
        const double inv_h2 = inv_h * inv_h;
        const double inv_2h = 0.5 * inv_h;
        const double inv_dt = 1.0 / dt;
        const double inv_eps = 1.0 / par.eps;
        const double nu = par.nu(d);
        const std::size_t nc = ncells();

        for (int j = 0; j < d; ++j)
            for (std::size_t c = 0; c < nc; ++c) {
                const Index ci = static_cast<Index>(c);
                double r = rho[ci] * x[j * nc + c] * inv_dt;
                if (mask.is_solid(ci)) r += inv_eps * x[j * nc + c];
                double lap = -2.0 * d * x[j * nc + c];
                for (int a = 0; a < d; ++a) {
                    lap += x[j * nc + static_cast<std::size_t>(g.neighbor(ci, a, +1))] +
                           x[j * nc + static_cast<std::size_t>(g.neighbor(ci, a, -1))];
                }
                y[j * nc + c] = r - par.mu * lap * inv_h2;
            }

        for (Index f = 0; f < g.num_faces(); ++f) {
            const auto fc = g.face(f);
            const double un = face_v[static_cast<std::size_t>(f)];
            const Index up = (un >= 0.0) ? fc.left : fc.right;
            const std::size_t l = static_cast<std::size_t>(fc.left);
            const std::size_t r = static_cast<std::size_t>(fc.right);
            const std::size_t u = static_cast<std::size_t>(up);
            for (int j = 0; j < d; ++j) {
                const double flux = rho[up] * x[j * nc + u] * un -
                                    ha * (rho[fc.right] * x[j * nc + r] -
                                          rho[fc.left] * x[j * nc + l]);
                y[j * nc + l] += flux * inv_h;
                y[j * nc + r] -= flux * inv_h;
            }
        }

        if (nu != 0.0) {
            Vec divu(nc, 0.0);
            for (std::size_t c = 0; c < nc; ++c) {
                const Index ci = static_cast<Index>(c);
                double s = 0.0;
                for (int a = 0; a < d; ++a)
                    s += x[a * nc + static_cast<std::size_t>(g.neighbor(ci, a, +1))] -
                         x[a * nc + static_cast<std::size_t>(g.neighbor(ci, a, -1))];
                divu[c] = s * inv_2h;
            }
            for (int j = 0; j < d; ++j)
                for (std::size_t c = 0; c < nc; ++c) {
                    const Index ci = static_cast<Index>(c);
                    const std::size_t cp = static_cast<std::size_t>(g.neighbor(ci, j, +1));
                    const std::size_t cm = static_cast<std::size_t>(g.neighbor(ci, j, -1));
                    y[j * nc + c] -= nu * (divu[cp] - divu[cm]) * inv_2h;
                }
        }
    }

    Vec inverse_diagonal() const {
        const int d = g.dim();
        const double h = g.h();
        const double ha = std::pow(h, par.alpha);
        const double inv_h = 1.0 / h;
        const double inv_dt = 1.0 / dt;
        const double inv_eps = 1.0 / par.eps;
        const double nu = par.nu(d);
        const std::size_t nc = ncells();
        Vec diag(static_cast<std::size_t>(d) * nc, 0.0);
        for (int j = 0; j < d; ++j)
            for (std::size_t c = 0; c < nc; ++c) {
                const Index ci = static_cast<Index>(c);
                double v = rho[ci] * inv_dt + 2.0 * d * par.mu * inv_h * inv_h +
                           0.5 * nu * inv_h * inv_h;
                if (mask.is_solid(ci)) v += inv_eps;
                diag[j * nc + c] = v;
            }
        for (Index f = 0; f < g.num_faces(); ++f) {
            const auto fc = g.face(f);
            const double un = face_v[static_cast<std::size_t>(f)];
            const double dl = ((un >= 0.0) ? rho[fc.left] * un : 0.0) + ha * rho[fc.left];
            const double dr = ((un < 0.0) ? -rho[fc.right] * un : 0.0) + ha * rho[fc.right];
            for (int j = 0; j < d; ++j) {
                diag[j * nc + static_cast<std::size_t>(fc.left)] += dl * inv_h;
                diag[j * nc + static_cast<std::size_t>(fc.right)] += dr * inv_h;
            }
        }
        for (double& x : diag) x = 1.0 / x;
        return diag;
    }
};

} // namespace

std::pair<State, StepStats> step_implicit(const State& old, const RegionMask& mask,
                                          const FluidParams& par,
                                          const SolverParams& solver) {
    const Grid& g = old.rho.grid();
    if (old.min_rho() <= 0.0) throw NegativeDensity("initial density not positive");
    const double dt = solver.dt;
    const int max_lin =
        solver.max_lin > 0 ? solver.max_lin : static_cast<int>(10 * g.num_cells());
    // Tolerances: the density solve also controls the per-step mass drift, so
    // it is driven below the Picard tolerance by a fixed safety factor.
    const double tol_density = std::min(solver.tol_lin, 0.05 * solver.tol_nl * dt);
    const double tol_momentum = std::min(solver.tol_lin, 0.05 * solver.tol_nl);

    const int d = g.dim();
    const std::size_t nc = static_cast<std::size_t>(g.num_cells());

    State cur = old; // Picard iterate (rho_k, u_k)
    StepStats stats;
    double best_res = std::numeric_limits<double>::infinity();
    State best = old;

    for (int iter = 1; iter <= solver.max_picard; ++iter) {
        const auto face_v = face_velocities(cur.u);

        // (i) density solve, linear in rho with frozen advection velocity
        DensityOp dop{g, face_v, dt, par.alpha};
        Vec rho_x(nc);
        for (std::size_t c = 0; c < nc; ++c) rho_x[c] = cur.rho[static_cast<Index>(c)];
        Vec b(nc);
        for (std::size_t c = 0; c < nc; ++c) b[c] = old.rho[static_cast<Index>(c)];
        const Vec dinv = dop.inverse_diagonal();
        auto dres = bicgstab(dop, b, rho_x, dinv, tol_density, max_lin);
        stats.lin_iters += dres.iters;
        if (!dres.converged)
            throw LinearSolveFailed("density solve stalled at residual " +
                                    std::to_string(dres.residual));

        // damping against the previous (positive) iterate if the solve
        // produced a nonpositive density
        ScalarField rho_new(g);
        {
            double theta = 1.0;
            bool ok = false;
            for (int attempt = 0; attempt <= 5; ++attempt) {
                double mn = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < nc; ++c) {
                    const double v =
                        cur.rho[static_cast<Index>(c)] +
                        theta * (rho_x[c] - cur.rho[static_cast<Index>(c)]);
                    rho_new[static_cast<Index>(c)] = v;
                    mn = std::min(mn, v);
                }
                if (mn > 0.0) {
                    ok = true;
                    break;
                }
                theta *= 0.5;
            }
            if (!ok) throw NegativeDensity("density iterate not positive after damping");
        }

        // (ii) momentum solve: unknown velocity, frozen upwind coefficients
        MomentumOp mop{g, rho_new, face_v, mask, par, dt};
        Vec u_x(static_cast<std::size_t>(d) * nc);
        for (int j = 0; j < d; ++j)
            for (std::size_t c = 0; c < nc; ++c) u_x[j * nc + c] = cur.u.at(j, static_cast<Index>(c));
        Vec bm(static_cast<std::size_t>(d) * nc);
        {
            ScalarField p(g);
            for (Index c = 0; c < g.num_cells(); ++c) p[c] = par.pressure(rho_new[c]);
            const double inv_2h = 0.5 / g.h();
            const double inv_dt = 1.0 / dt;
            for (int j = 0; j < d; ++j)
                for (std::size_t c = 0; c < nc; ++c) {
                    const Index ci = static_cast<Index>(c);
                    const double m_old = old.rho[ci] * old.u.at(j, ci);
                    const double gradp =
                        (p[g.neighbor(ci, j, +1)] - p[g.neighbor(ci, j, -1)]) * inv_2h;
                    bm[j * nc + c] = m_old * inv_dt - gradp;
                }
        }
        const Vec minv = mop.inverse_diagonal();
        auto mres = bicgstab(mop, bm, u_x, minv, tol_momentum, max_lin);
        stats.lin_iters += mres.iters;
        if (!mres.converged)
            throw LinearSolveFailed("momentum solve stalled at residual " +
                                    std::to_string(mres.residual));

        cur.rho = rho_new;
        for (int j = 0; j < d; ++j)
            for (std::size_t c = 0; c < nc; ++c) cur.u.at(j, static_cast<Index>(c)) = u_x[j * nc + c];

        // (iii) nonlinear residuals at the updated iterate
        const double res_d = sup_norm(continuity_residual(cur, old, par, dt));
        const double res_m = sup_norm(momentum_residual(cur, old, mask, par, dt));
        const double res = std::max(res_d, res_m);
        stats.picard = iter;
        stats.residual = res;
        if (res < best_res) {
            best_res = res;
            best = cur;
        }
        if (res <= solver.tol_nl) {
            cur.t = old.t + dt;
            stats.min_rho = cur.min_rho();
            if (stats.min_rho <= 0.0) throw NegativeDensity("accepted step lost positivity");
            return {cur, stats};
        }
    }
    throw PicardDiverged(best_res, std::move(best));
}

State step_explicit(const State& old, const RegionMask& mask, const FluidParams& par,
                    const SolverParams& solver) {
    const Grid& g = old.rho.grid();
    const int d = g.dim();
    const double h = g.h();
    const double dt = solver.dt;

    double umax = 0.0, cmax = 0.0;
    for (Index c = 0; c < g.num_cells(); ++c) {
        double u2 = 0.0;
        for (int a = 0; a < d; ++a) u2 += old.u.at(a, c) * old.u.at(a, c);
        umax = std::max(umax, std::sqrt(u2));
        cmax = std::max(cmax, std::sqrt(par.a * par.gamma * std::pow(old.rho[c], par.gamma - 1.0)));
    }
    const double speed = umax + cmax + 2.0 * d * std::pow(h, par.alpha - 1.0);
    const double dt_max = solver.cfl * h / speed;
    if (dt > dt_max)
        throw CFLViolation("dt " + std::to_string(dt) + " exceeds CFL limit " +
                           std::to_string(dt_max));

    State out(old);
    out.t = old.t + dt;
    const auto face_v = face_velocities(old.u);

    ScalarField rho_new(g);
    {
        ScalarField fluxdiv(g);
        add_flux_divergence(old.rho, face_v, par.alpha, fluxdiv);
        for (Index c = 0; c < g.num_cells(); ++c) rho_new[c] = old.rho[c] - dt * fluxdiv[c];
    }
    for (Index c = 0; c < g.num_cells(); ++c)
        if (rho_new[c] <= 0.0) throw NegativeDensity("explicit step produced nonpositive density");

    // explicit momentum rate (convection, pressure, off-diagonal viscosity,
    // grad-div), then pointwise-implicit relaxation of penalty and the
    // viscous diagonal
    const double inv_h = 1.0 / h;
    const double inv_2h = 0.5 * inv_h;
    const double inv_h2 = inv_h * inv_h;
    const double ha = std::pow(h, par.alpha);
    const double nu = par.nu(d);

    VectorField rate(g); // right-hand side in momentum units per time
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double un = face_v[static_cast<std::size_t>(f)];
        const Index up = (un >= 0.0) ? fc.left : fc.right;
        for (int j = 0; j < d; ++j) {
            const double mj_up = old.rho[up] * old.u.at(j, up);
            const double mj_l = old.rho[fc.left] * old.u.at(j, fc.left);
            const double mj_r = old.rho[fc.right] * old.u.at(j, fc.right);
            const double flux = mj_up * un - ha * (mj_r - mj_l);
            rate.at(j, fc.left) -= flux * inv_h;
            rate.at(j, fc.right) += flux * inv_h;
        }
    }
    ScalarField p(g), divu(g);
    for (Index c = 0; c < g.num_cells(); ++c) p[c] = par.pressure(old.rho[c]);
    if (nu != 0.0) divu = div_h(old.u);
    for (int j = 0; j < d; ++j)
        for (Index c = 0; c < g.num_cells(); ++c) {
            const Index cp = g.neighbor(c, j, +1);
            const Index cm = g.neighbor(c, j, -1);
            double r = rate.at(j, c) - (p[cp] - p[cm]) * inv_2h;
            double nb = 0.0;
            for (int a = 0; a < d; ++a)
                nb += old.u.at(j, g.neighbor(c, a, +1)) + old.u.at(j, g.neighbor(c, a, -1));
            r += par.mu * nb * inv_h2; // neighbor part; the diagonal is implicit below
            if (nu != 0.0) r += nu * (divu[cp] - divu[cm]) * inv_2h;
            const double m_star = old.rho[c] * old.u.at(j, c) + dt * r;
            const double denom = rho_new[c] + dt * (2.0 * d * par.mu * inv_h2) +
                                 (mask.is_solid(c) ? dt / par.eps : 0.0);
            out.u.at(j, c) = m_star / denom;
        }
    out.rho = rho_new;
    return out;
}

State run(const State& init, const RegionMask& mask, const FluidParams& par,
          const SolverParams& solver, const RunHooks& hooks) {
    par.validate();
    const int n_steps = solver.num_steps();
    if (n_steps < 1) throw std::invalid_argument("run: T/dt must round to at least one step");
    State cur = init;
    for (int k = 1; k <= n_steps; ++k) {
        State old = cur;
        StepStats stats;
        try {
            if (solver.mode == SolverParams::Mode::Implicit) {
                auto [next, st] = step_implicit(old, mask, par, solver);
                cur = std::move(next);
                stats = st;
            } else {
                cur = step_explicit(old, mask, par, solver);
                stats.min_rho = cur.min_rho();
            }
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(k) + ": " + e.what());
        }
        cur.t = init.t + k * solver.dt; // avoid accumulation drift in t
        if (hooks.on_step) hooks.on_step(k, cur, old, stats);
        if (hooks.snapshot_every > 0 && hooks.on_snapshot && k % hooks.snapshot_every == 0)
            hooks.on_snapshot(k, cur);
    }
    return cur;
}

} // namespace pnsfv
