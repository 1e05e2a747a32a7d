#include "pnsfv/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace pnsfv {

namespace {

constexpr double kPi = 3.14159265358979323846;

State random_state(const Grid& g, std::mt19937_64& rng, double rho_lo = 0.5,
                   double rho_hi = 2.0, double u_amp = 0.5) {
    std::uniform_real_distribution<double> rho_dist(rho_lo, rho_hi);
    std::uniform_real_distribution<double> u_dist(-u_amp, u_amp);
    State s;
    s.rho = ScalarField(g);
    s.u = VectorField(g);
    for (Index c = 0; c < g.num_cells(); ++c) s.rho[c] = rho_dist(rng);
    for (int a = 0; a < g.dim(); ++a)
        for (Index c = 0; c < g.num_cells(); ++c) s.u.at(a, c) = u_dist(rng);
    return s;
}

} // namespace

double weak_form_continuity(const State& now, const State& old, const FluidParams& par,
                            double dt, const ScalarField& phi) {
    const Grid& g = now.rho.grid();
    const double h = g.h();
    const double ha = std::pow(h, par.alpha);
    double acc = 0.0;
    for (Index c = 0; c < g.num_cells(); ++c)
        acc += g.cell_volume() * (now.rho[c] - old.rho[c]) / dt * phi[c];
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double un = 0.5 * (now.u.at(fc.axis, fc.left) + now.u.at(fc.axis, fc.right));
        const double rup = (un >= 0.0) ? now.rho[fc.left] : now.rho[fc.right];
        const double flux = rup * un - ha * (now.rho[fc.right] - now.rho[fc.left]);
        acc -= g.face_area() * flux * (phi[fc.right] - phi[fc.left]);
    }
    return acc;
}

double weak_form_momentum(const State& now, const State& old, const RegionMask& mask,
                          const FluidParams& par, double dt, const VectorField& phi) {
    const Grid& g = now.rho.grid();
    const int d = g.dim();
    const double h = g.h();
    const double ha = std::pow(h, par.alpha);
    const double nu = par.nu(d);
    double acc = 0.0;

    // D_t (rho u) . phi + penalty
    for (Index c = 0; c < g.num_cells(); ++c) {
        for (int j = 0; j < d; ++j) {
            const double dm =
                (now.rho[c] * now.u.at(j, c) - old.rho[c] * old.u.at(j, c)) / dt;
            acc += g.cell_volume() * dm * phi.at(j, c);
            if (mask.is_solid(c))
                acc += g.cell_volume() / par.eps * now.u.at(j, c) * phi.at(j, c);
        }
    }
    // - sum F(m,u) . [[phi]]
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        const double un = 0.5 * (now.u.at(fc.axis, fc.left) + now.u.at(fc.axis, fc.right));
        const Index up = (un >= 0.0) ? fc.left : fc.right;
        for (int j = 0; j < d; ++j) {
            const double m_up = now.rho[up] * now.u.at(j, up);
            const double m_l = now.rho[fc.left] * now.u.at(j, fc.left);
            const double m_r = now.rho[fc.right] * now.u.at(j, fc.right);
            const double flux = m_up * un - ha * (m_r - m_l);
            acc -= g.face_area() * flux * (phi.at(j, fc.right) - phi.at(j, fc.left));
        }
    }
    // - int p div_h phi
    const ScalarField divphi = div_h(phi);
    for (Index c = 0; c < g.num_cells(); ++c)
        acc -= g.cell_volume() * par.pressure(now.rho[c]) * divphi[c];
    // + mu int grad_E u : grad_E phi  (dual-cell measure h^d)
    for (Index f = 0; f < g.num_faces(); ++f) {
        const auto fc = g.face(f);
        for (int j = 0; j < d; ++j) {
            const double gu = (now.u.at(j, fc.right) - now.u.at(j, fc.left)) / h;
            const double gp = (phi.at(j, fc.right) - phi.at(j, fc.left)) / h;
            acc += g.cell_volume() * par.mu * gu * gp;
        }
    }
    // + nu int div_h u div_h phi
    if (nu != 0.0) {
        const ScalarField divu = div_h(now.u);
        for (Index c = 0; c < g.num_cells(); ++c)
            acc += g.cell_volume() * nu * divu[c] * divphi[c];
    }
    return acc;
}

namespace {

CheckResult make_result(const std::string& name, double value, double threshold) {
    return CheckResult{name, value <= threshold, value, threshold};
}

} // namespace

std::vector<CheckResult> check_operator_identities(unsigned seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    GridSpec spec{2, 8, 2.0, {-1.0, -1.0, -1.0}};
    Grid g(spec);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    // constants are annihilated
    {
        ScalarField c(g, 3.5);
        VectorField v(g, 0.0);
        for (int a = 0; a < 2; ++a)
            for (Index i = 0; i < g.num_cells(); ++i) v.at(a, i) = 1.25;
        double worst = sup_norm(laplace_h(c));
        const FaceField gr = grad_E(c);
        for (Index f = 0; f < g.num_faces(); ++f) worst = std::max(worst, std::abs(gr[f]));
        worst = std::max(worst, sup_norm(div_h(v)));
        out.push_back(make_result("constants annihilated", worst, 1e-13));
    }
    // discrete integration by parts, random fields
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            ScalarField f(g);
            std::vector<double> v(static_cast<std::size_t>(g.num_cells()));
            for (Index c = 0; c < g.num_cells(); ++c) f[c] = dist(rng);
            for (auto& x : v) x = dist(rng);
            for (int axis = 0; axis < 2; ++axis)
                worst = std::max(worst, check_ibp(g, f, v, axis));
        }
        out.push_back(make_result("integration by parts", worst, 1e-12));
    }
    // divergence telescoping: int div_h v = 0
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            VectorField v(g);
            for (int a = 0; a < 2; ++a)
                for (Index c = 0; c < g.num_cells(); ++c) v.at(a, c) = dist(rng);
            worst = std::max(worst, std::abs(cell_integral(div_h(v))));
        }
        out.push_back(make_result("divergence telescoping", worst, 1e-12));
    }
    // upwind flux conservativity: sum over cells of the flux divergence = 0
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            State s = random_state(g, rng);
            State old = s;
            FluidParams par;
            const ScalarField res = continuity_residual(s, old, par, 1.0);
            worst = std::max(worst, std::abs(cell_integral(res)));
        }
        out.push_back(make_result("flux conservativity", worst, 1e-12));
    }
    // adjointness: int (div_h v) q = - sum_faces |sigma| <v>.n [[q]]
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            VectorField v(g);
            ScalarField q(g);
            for (int a = 0; a < 2; ++a)
                for (Index c = 0; c < g.num_cells(); ++c) v.at(a, c) = dist(rng);
            for (Index c = 0; c < g.num_cells(); ++c) q[c] = dist(rng);
            const ScalarField dv = div_h(v);
            double lhs = 0.0;
            for (Index c = 0; c < g.num_cells(); ++c) lhs += g.cell_volume() * dv[c] * q[c];
            double rhs = 0.0;
            for (Index f = 0; f < g.num_faces(); ++f) {
                const auto fc = g.face(f);
                rhs -= g.face_area() * average_normal(v, fc) * (q[fc.right] - q[fc.left]);
            }
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        out.push_back(make_result("divergence adjointness", worst, 1e-12));
    }
    // projection bounds for a smooth function
    {
        GridSpec fine{2, 32, 2.0, {-1.0, -1.0, -1.0}};
        Grid gf(fine);
        auto f = [](const std::array<double, 3>& x) { return std::sin(kPi * x[0]); };
        const ScalarField pf = project(f, gf);
        const double grad_sup = kPi;
        double max_err = 0.0, max_jump = 0.0;
        for (Index c = 0; c < gf.num_cells(); ++c)
            max_err = std::max(max_err, std::abs(pf[c] - f(gf.cell_center(c))));
        for (Index fid = 0; fid < gf.num_faces(); ++fid) {
            const auto fc = gf.face(fid);
            max_jump = std::max(max_jump, std::abs(pf[fc.right] - pf[fc.left]));
        }
        const double bound = gf.h() * grad_sup;
        out.push_back(make_result("projection sup bound", max_err, bound));
        out.push_back(make_result("projection jump bound", max_jump, bound));
    }
    return out;
}

std::vector<CheckResult> check_weak_strong(unsigned seed, Mutation mutation) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    GridSpec spec{2, 8, 2.0, {-1.0, -1.0, -1.0}};
    Grid g(spec);
    FluidParams par;
    par.eps = 1e-2;
    const double dt = 1e-2;

    // a small off-center solid patch
    RegionMask mask;
    mask.label.assign(static_cast<std::size_t>(g.num_cells()), CellClass::FLUID);
    for (Index c = 0; c < g.num_cells(); ++c) {
        const auto xc = g.cell_center(c);
        if (xc[0] > 0.4 && xc[1] > 0.4) mask.label[static_cast<std::size_t>(c)] = CellClass::SOLID;
    }

    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst_d = 0.0, worst_m = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const State old = random_state(g, rng);
        const State now = random_state(g, rng);
        ScalarField res_d = continuity_residual(now, old, par, dt);
        VectorField res_m = momentum_residual(now, old, mask, par, dt);

        if (mutation == Mutation::PressureSign) {
            // flip the sign of the central pressure gradient in the residual
            ScalarField p(g);
            for (Index c = 0; c < g.num_cells(); ++c) p[c] = par.pressure(now.rho[c]);
            const double inv_2h = 0.5 / g.h();
            for (int j = 0; j < g.dim(); ++j)
                for (Index c = 0; c < g.num_cells(); ++c) {
                    const double gp =
                        (p[g.neighbor(c, j, +1)] - p[g.neighbor(c, j, -1)]) * inv_2h;
                    res_m.at(j, c) -= 2.0 * gp;
                }
        }

        ScalarField phi(g);
        VectorField vphi(g);
        for (Index c = 0; c < g.num_cells(); ++c) phi[c] = dist(rng);
        for (int a = 0; a < g.dim(); ++a)
            for (Index c = 0; c < g.num_cells(); ++c) vphi.at(a, c) = dist(rng);

        // contract the residuals against the test fields
        double strong_d = 0.0, scale_d = 0.0;
        for (Index c = 0; c < g.num_cells(); ++c) {
            strong_d += g.cell_volume() * res_d[c] * phi[c];
            scale_d += g.cell_volume() * std::abs(res_d[c] * phi[c]);
        }
        const double weak_d = weak_form_continuity(now, old, par, dt, phi);
        worst_d = std::max(worst_d, std::abs(weak_d - strong_d) / std::max(1.0, scale_d));

        double strong_m = 0.0, scale_m = 0.0;
        for (int j = 0; j < g.dim(); ++j)
            for (Index c = 0; c < g.num_cells(); ++c) {
                strong_m += g.cell_volume() * res_m.at(j, c) * vphi.at(j, c);
                scale_m += g.cell_volume() * std::abs(res_m.at(j, c) * vphi.at(j, c));
            }
        const double weak_m = weak_form_momentum(now, old, mask, par, dt, vphi);
        worst_m = std::max(worst_m, std::abs(weak_m - strong_m) / std::max(1.0, scale_m));
    }
    out.push_back(make_result("weak-strong equivalence (continuity)", worst_d, 1e-12));
    out.push_back(make_result("weak-strong equivalence (momentum)", worst_m, 1e-12));
    return out;
}

std::vector<CheckResult> check_bregman(unsigned seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(1e-3, 10.0);
    double worst = 0.0;
    for (double gamma : {1.4, 2.0, 3.0}) {
        FluidParams par;
        par.gamma = gamma;
        for (int rep = 0; rep < 10000; ++rep) {
            const double r = dist(rng), s = dist(rng);
            worst = std::min(worst, bregman(r, s, par));
        }
    }
    out.push_back(make_result("Bregman nonnegativity", -worst, 0.0));

    GridSpec spec{2, 8, 2.0, {-1.0, -1.0, -1.0}};
    Grid g(spec);
    State s = random_state(g, rng);
    FluidParams par;
    const double self = relative_energy(s, s.rho, s.u, par);
    out.push_back(make_result("relative energy of state vs itself", std::abs(self), 1e-14));
    return out;
}

std::vector<CheckResult> check_energy(unsigned seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    GridSpec spec{2, 8, 2.0, {-1.0, -1.0, -1.0}};
    Grid g(spec);
    FluidParams par;
    par.eps = 1e-2;
    RegionMask mask;
    mask.label.assign(static_cast<std::size_t>(g.num_cells()), CellClass::FLUID);
    for (Index c = 0; c < g.num_cells(); ++c)
        if (g.cell_center(c)[0] > 0.5) mask.label[static_cast<std::size_t>(c)] = CellClass::SOLID;

    State old = random_state(g, rng, 0.8, 1.2, 0.1);
    SolverParams solver;
    solver.dt = 1e-3;
    solver.T = 1e-3;
    auto [now, stats] = step_implicit(old, mask, par, solver);
    const auto rec = energy_audit(now, old, mask, par, solver.dt);

    const double e_scale =
        rec.ekin + rec.eint + 1.0;
    double min_component = std::min({rec.dnum_ut, rec.dnum_uj, rec.dnum_ua, rec.dnum_rt,
                                     rec.dnum_rj, rec.visc_diss, rec.pen_diss});
    out.push_back(make_result("dissipation components nonnegative",
                              std::max(0.0, -min_component), 1e-14 * e_scale));
    out.push_back(
        make_result("energy balance slack", rec.slack, 10.0 * solver.tol_nl * e_scale));
    out.push_back(make_result("kinetic sub-balance", std::abs(rec.kin_slack),
                              10.0 * solver.tol_nl * e_scale));
    return out;
}

bool run_verify(const std::string& suite, Mutation mutation) {
    std::vector<CheckResult> results;
    const bool all = suite.empty();
    if (all || suite == "ops") {
        auto r = check_operator_identities(1234);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (all || suite == "weakstrong") {
        auto r = check_weak_strong(42, mutation);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (all || suite == "bregman") {
        auto r = check_bregman(7);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (all || suite == "energy") {
        auto r = check_energy(99);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (results.empty()) {
        std::printf("unknown suite '%s' (known: ops, weakstrong, bregman, energy)\n",
                    suite.c_str());
        return false;
    }
    bool ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %-42s  value %.3e  limit %.3e\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.value, r.threshold);
        ok = ok && r.passed;
    }
    return ok;
}

} // namespace pnsfv
