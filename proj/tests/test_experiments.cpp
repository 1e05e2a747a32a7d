#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pnsfv/experiments.hpp"

#include <cmath>

using namespace pnsfv;

TEST_CASE("experiment 1 initial data, worked points") {
    const ExperimentDef def = make_experiment("exp1");
    // |x| = 0.325: sin(4 pi 0.125) = 1 -> u = (0, -1)
    std::array<double, 3> x{0.325, 0.0, 0.0};
    CHECK(def.rho0(x) == doctest::Approx(1.0));
    CHECK(def.m0(x, 0) == doctest::Approx(0.0));
    CHECK(def.m0(x, 1) == doctest::Approx(-1.0));
    // |x| = 0.45: sin(pi) = 0
    std::array<double, 3> y{0.45, 0.0, 0.0};
    CHECK(def.m0(y, 0) == doctest::Approx(0.0));
    CHECK(def.m0(y, 1) == doctest::Approx(0.0).epsilon(1e-12));
    // outside the ring the momentum extension vanishes
    std::array<double, 3> z{0.9, 0.0, 0.0};
    CHECK(def.m0(z, 0) == 0.0);
    CHECK(def.m0(z, 1) == 0.0);
    CHECK(def.rho0(z) == doctest::Approx(1.0));
}

TEST_CASE("experiment 2 initial data regions") {
    const ExperimentDef def = make_experiment("exp2");
    CHECK(def.rho0({0.1, 0.0, 0.0}) == doctest::Approx(0.01));
    CHECK(def.m0({0.1, 0.0, 0.0}, 0) == 0.0);
    CHECK(def.rho0({0.4, 0.1, 0.0}) == doctest::Approx(1.0));
    CHECK(def.rho0({0.9, 0.0, 0.0}) == doctest::Approx(2.0));
    CHECK(def.m0({0.9, 0.0, 0.0}, 1) == 0.0);
}

TEST_CASE("experiment 3 initial data regions, delta = 0.05") {
    const ExperimentDef def = make_experiment("exp3");
    CHECK(def.shape.delta == doctest::Approx(0.05));
    // petal region: radius 0.7..0.8 depending on angle; at phi = 0 the
    // radius is 0.75 + 0.05 cos 0 = 0.8, so |x| = 0.72 on the x2 axis lies
    // between the circle 0.7 and the flower curve -> rho = 1, u = 0
    CHECK(def.rho0({0.0, 0.72, 0.0}) == doctest::Approx(1.0));
    CHECK(def.m0({0.0, 0.72, 0.0}, 0) == 0.0);
    // far field
    CHECK(def.rho0({0.9, 0.5, 0.0}) == doctest::Approx(0.01));
    // inner disk
    CHECK(def.rho0({0.05, 0.05, 0.0}) == doctest::Approx(0.01));
    // swirl annuli carry momentum
    const double r = 0.325; // 1 - cos(8 pi 0.125) = 1 - cos(pi) = 2
    CHECK(def.m0({r, 0.0, 0.0}, 1) == doctest::Approx(-2.0));
    const double r2 = 0.55; // -1 + cos(8 pi 0.35): cos(2.8 pi) = cos(0.8 pi)
    CHECK(def.m0({r2, 0.0, 0.0}, 1) ==
          doctest::Approx(-(-1.0 + std::cos(0.8 * 3.14159265358979323846))));
}

TEST_CASE("paired eps rules reproduce the published sweep values") {
    // quadratic rule: 4^{-(m+2)} for m = 0..4 -> 4^{-2}..4^{-6}
    for (int m = 0; m <= 4; ++m)
        CHECK(paired_eps("quadratic", m) == doctest::Approx(std::pow(4.0, -(m + 2))));
    CHECK(paired_eps("sqrt", 0) == doctest::Approx(std::pow(2.0, -7)));
    CHECK(paired_eps("sqrt", 2) == doctest::Approx(std::pow(2.0, -8)));
    CHECK(paired_eps("quartic", 3) == doctest::Approx(std::pow(16.0, -3)));
    CHECK_THROWS_AS(paired_eps("cubic", 1), std::invalid_argument);
}

TEST_CASE("initial projection: mass and energy converge under refinement") {
    const ExperimentDef def = make_experiment("exp2"); // discontinuous density
    const FluidParams par = def.fluid;
    const double pi = 3.14159265358979323846;
    // continuum mass: 0.01 pi 0.2^2 + pi(0.7^2-0.2^2) + 2(4 - pi 0.7^2)
    const double mass_exact =
        0.01 * pi * 0.04 + pi * (0.49 - 0.04) + 2.0 * (4.0 - pi * 0.49);
    // kinetic energy: 1/2 int_ring sin^2(4 pi (r-0.2)) dx = pi (1/16 + 0.2/4)
    const double ekin_exact = pi * 0.1125;
    const double eint_exact =
        par.P(0.01) * pi * 0.04 + par.P(1.0) * pi * (0.49 - 0.04) +
        par.P(2.0) * (4.0 - pi * 0.49);
    std::vector<double> mass_errs, energy_errs, hs;
    for (int m = 0; m <= 3; ++m) {
        Grid g(GridSpec{2, 10 << m, 2.0, {-1, -1, -1}});
        const State s = initial_state(def, g);
        mass_errs.push_back(std::abs(cell_integral(s.rho) - mass_exact));
        double e = 0.0;
        for (Index c = 0; c < g.num_cells(); ++c) {
            double u2 = 0.0;
            for (int a = 0; a < 2; ++a) u2 += s.u.at(a, c) * s.u.at(a, c);
            e += g.cell_volume() * (0.5 * s.rho[c] * u2 + par.P(s.rho[c]));
        }
        energy_errs.push_back(std::abs(e - (ekin_exact + eint_exact)));
        hs.push_back(g.h());
        CHECK(s.min_rho() > 0.0);
    }
    CHECK(fitted_order(hs, mass_errs) >= 1.0);
    CHECK(fitted_order(hs, energy_errs) >= 1.0);
}

TEST_CASE("penalty profile: all-fluid shape gives a zero profile") {
    ExperimentDef def = make_experiment("exp1");
    // shrink T so this stays fast; the profile is zero regardless
    def.T = 0.05; // one step at h = 0.2 with dt = h/4
    Shape everywhere;
    everywhere.kind = Shape::Kind::Custom;
    everywhere.custom_inside = [](const std::array<double, 3>&, int) { return true; };
    def.shape = everywhere;

    SolverParams solver;
    solver.dt = 0.0; // profile derives dt from h
    const GridSpec domain{2, 10, 2.0, {-1, -1, -1}};
    const auto rows = penalty_profile(def, 0.2, {1e-2, 1e-3}, solver, domain);
    for (const auto& r : rows) {
        CHECK(r.u_l2_solid == 0.0);
        CHECK(r.u_linf_solid == 0.0);
        CHECK(r.accumulated == 0.0);
    }
}

TEST_CASE("study: single case equal to the reference gives zero errors") {
    const ExperimentDef base = make_experiment("exp1");
    ExperimentDef def = base;
    def.T = 0.025; // two steps at m = 0; keep the unit test quick

    StudyPlan plan;
    plan.mode = StudyPlan::Mode::FixedEps;
    plan.eps_fixed = std::pow(4.0, -3);
    plan.m_min = 0;
    plan.m_max = 0;
    plan.m_ref = 0; // reference case IS the single case
    SolverParams solver;

    const auto out = std::filesystem::temp_directory_path() / "pnsfv_study_self";
    std::filesystem::remove_all(out);
    const StudyResult res = run_study(plan, def, solver, out, 1, false);
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].E_rho == doctest::Approx(0.0));
    CHECK(res.rows[0].E_u == doctest::Approx(0.0));
    CHECK(res.rows[0].E_gradu == doctest::Approx(0.0));
    CHECK(res.rows[0].RE == doctest::Approx(0.0));
    std::filesystem::remove_all(out);
}

TEST_CASE("study cache: resumed run reproduces the CSVs byte for byte") {
    const ExperimentDef base = make_experiment("exp1");
    ExperimentDef def = base;
    def.T = 0.025;

    StudyPlan plan;
    plan.mode = StudyPlan::Mode::FixedEps;
    plan.eps_fixed = std::pow(4.0, -3);
    plan.m_min = 0;
    plan.m_max = 1;
    plan.m_ref = 2;
    SolverParams solver;

    const auto out = std::filesystem::temp_directory_path() / "pnsfv_study_cache";
    std::filesystem::remove_all(out);
    run_study(plan, def, solver, out, 1, false);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
    };
    const std::string errors1 = slurp(out / "errors.csv");
    const std::string eoc1 = slurp(out / "eoc.csv");
    REQUIRE(!errors1.empty());

    // resume with the cache in place
    std::filesystem::remove(out / "errors.csv");
    std::filesystem::remove(out / "eoc.csv");
    run_study(plan, def, solver, out, 1, true);
    CHECK(slurp(out / "errors.csv") == errors1);
    CHECK(slurp(out / "eoc.csv") == eoc1);

    // a different configuration must refuse to reuse the directory
    StudyPlan other = plan;
    other.eps_fixed = std::pow(4.0, -4);
    CHECK_THROWS_AS(run_study(other, def, solver, out, 1, true), std::runtime_error);
    std::filesystem::remove_all(out);
}
