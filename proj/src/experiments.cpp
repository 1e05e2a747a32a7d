#include "pnsfv/experiments.hpp"

#include "pnsfv/snapshot.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace pnsfv {

namespace {

constexpr double kPi = 3.14159265358979323846;

double radius2d(const std::array<double, 3>& x) {
    return std::sqrt(x[0] * x[0] + x[1] * x[1]);
}

// swirl profile (amp(r) * x2 / r, -amp(r) * x1 / r)
double swirl(const std::array<double, 3>& x, int j, double amp) {
    const double r = radius2d(x);
    if (r <= 0.0) return 0.0;
    return (j == 0) ? amp * x[1] / r : -amp * x[0] / r;
}

FluidParams common_fluid() {
    FluidParams p;
    p.a = 1.0;
    p.gamma = 1.4;
    p.mu = 0.1;
    p.lambda = 0.0; // nu = 0 in 2-D
    p.alpha = 0.6;
    p.eps = std::pow(4.0, -4);
    return p;
}

} // namespace

ExperimentDef make_experiment(const std::string& id) {
    ExperimentDef def;
    def.id = id;
    def.fluid = common_fluid();
    def.T = 0.1;
    if (id == "exp1") {
        def.shape = Shape::ring(0.2, 0.7);
        def.break_radii = {0.2, 0.7};
        def.rho0 = [](const std::array<double, 3>&) { return 1.0; };
        def.m0 = [](const std::array<double, 3>& x, int j) {
            const double r = radius2d(x);
            if (r <= 0.2 || r >= 0.7) return 0.0;
            return swirl(x, j, std::sin(4.0 * kPi * (r - 0.2)));
        };
    } else if (id == "exp2") {
        def.shape = Shape::ring(0.2, 0.7);
        def.break_radii = {0.2, 0.7};
        def.rho0 = [](const std::array<double, 3>& x) {
            const double r = radius2d(x);
            if (r < 0.2) return 0.01;
            if (r < 0.7) return 1.0;
            return 2.0;
        };
        def.m0 = [](const std::array<double, 3>& x, int j) {
            const double r = radius2d(x);
            if (r <= 0.2 || r >= 0.7) return 0.0;
            return swirl(x, j, std::sin(4.0 * kPi * (r - 0.2)));
        };
    } else if (id == "exp3") {
        def.shape = Shape::flower(0.2, 0.7, 0.05, 8);
        def.break_radii = {0.2, 0.45, 0.7};
        def.flower_band = true;
        const Shape flower = def.shape;
        def.rho0 = [flower](const std::array<double, 3>& x) {
            const double r = radius2d(x);
            if (r < 0.2) return 0.01;
            if (r < 0.7) return 1.0;
            const double phi = std::atan2(x[0], x[1]);
            return (r < flower.flower_radius(phi)) ? 1.0 : 0.01;
        };
        def.m0 = [](const std::array<double, 3>& x, int j) {
            const double r = radius2d(x);
            if (r <= 0.2 || r >= 0.7) return 0.0;
            const double c = std::cos(8.0 * kPi * (r - 0.2));
            const double amp = (r < 0.45) ? (1.0 - c) : (-1.0 + c);
            return swirl(x, j, amp);
        };
    } else {
        throw std::invalid_argument("unknown experiment id: " + id);
    }
    return def;
}

State initial_state(const ExperimentDef& def, const Grid& g) {
    if (def.shape.kind != Shape::Kind::Custom &&
        def.shape.bounding_radius() + g.h() > 0.5 * g.side())
        throw std::invalid_argument("grid too small for the experiment shape");

    // cells whose radial span straddles a data discontinuity or kink
    auto crossed = [&](Index c) {
        const auto xc = g.cell_center(c);
        const double half_diag = 0.5 * g.h() * std::sqrt(static_cast<double>(g.dim()));
        const double r = std::sqrt((xc[0] - def.shape.center[0]) * (xc[0] - def.shape.center[0]) +
                                   (xc[1] - def.shape.center[1]) * (xc[1] - def.shape.center[1]));
        for (double rb : def.break_radii)
            if (std::abs(r - rb) <= half_diag) return true;
        if (def.flower_band) {
            const double lo = def.shape.base - half_diag;
            const double hi = def.shape.base + 2.0 * def.shape.delta + half_diag;
            if (r >= lo && r <= hi) return true;
        }
        return false;
    };

    State s;
    s.rho = project_adaptive([&](const std::array<double, 3>& x) { return def.rho0(x); }, g,
                             crossed);
    s.u = VectorField(g);
    for (int j = 0; j < g.dim(); ++j) {
        ScalarField mj = project_adaptive(
            [&](const std::array<double, 3>& x) { return def.m0(x, j); }, g, crossed);
        for (Index c = 0; c < g.num_cells(); ++c) s.u.at(j, c) = mj[c] / s.rho[c];
    }
    s.t = 0.0;
    if (s.min_rho() <= 0.0) throw std::invalid_argument("initial density not positive");
    return s;
}

double paired_eps(const std::string& rule, int m) {
    if (rule == "sqrt") return std::pow(2.0, -(m + 14) / 2.0);
    if (rule == "quadratic") return std::pow(4.0, -(m + 2));
    if (rule == "quartic") return std::pow(16.0, -m);
    throw std::invalid_argument("unknown pairing rule: " + rule);
}

namespace {

struct CaseSpec {
    int m = 0;
    int n = 0;
    double h = 0.0;
    double eps = 0.0;
    double dt = 0.0;
};

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string case_key(const ExperimentDef& def, const StudyPlan& plan,
                     const SolverParams& solver, const CaseSpec& cs) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "exp=%s;d=%d;n=%d;side=%.17g;ox=%.17g;oy=%.17g;a=%.17g;gamma=%.17g;"
                  "mu=%.17g;lambda=%.17g;alpha=%.17g;eps=%.17g;dt=%.17g;T=%.17g;"
                  "tol_nl=%.17g;tol_lin=%.17g;mode=%d",
                  def.id.c_str(), plan.domain.d, cs.n, plan.domain.side,
                  plan.domain.origin[0], plan.domain.origin[1], def.fluid.a,
                  def.fluid.gamma, def.fluid.mu, def.fluid.lambda, def.fluid.alpha,
                  cs.eps, cs.dt, def.T, solver.tol_nl, solver.tol_lin,
                  static_cast<int>(solver.mode));
    return buf;
}

std::string hash_hex(const std::string& key) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key)));
    return buf;
}

// Runs one case (or loads it from the cache) and returns the final state.
State run_case(const ExperimentDef& def, const StudyPlan& plan,
               const SolverParams& solver_base, const CaseSpec& cs, const Grid& g,
               const std::filesystem::path& out_dir, bool resume,
               const std::string& label) {
    const std::string key = case_key(def, plan, solver_base, cs);
    const std::string hash = hash_hex(key);
    const auto cache_dir = out_dir / "cache";
    const auto snap_path = cache_dir / (hash + ".pnsf");
    const auto diag_path = out_dir / ("diag_" + label + ".csv");

    FluidParams par = def.fluid;
    par.eps = cs.eps;

    if (resume && std::filesystem::exists(snap_path) &&
        std::filesystem::exists(diag_path)) {
        return snapshot_to_state(read_snapshot(snap_path), g);
    }

    const RegionMask mask = classify_cells(def.shape, g);
    const ScalarField solid_w = solid_fraction(def.shape, g);
    State init = initial_state(def, g);

    SolverParams solver = solver_base;
    solver.dt = cs.dt;
    solver.T = def.T;

    std::string diag;
    diag += "# pennsfv case=" + label + " config_hash=" + hash + "\n";
    diag += "# " + key + "\n";
    diag += std::string(kDiagnosticsHeader) + "\n";

    RunHooks hooks;
    hooks.on_step = [&](int, const State& now, const State& old, const StepStats&) {
        const auto rec = energy_audit(now, old, mask, par, solver.dt, &solid_w);
        diag += diagnostics_csv_row(rec) + "\n";
    };
    State final_state = run(init, mask, par, solver, hooks);

    std::filesystem::create_directories(cache_dir);
    {
        std::ofstream os(diag_path);
        os << diag;
    }
    write_snapshot(snap_path, final_state, par);
    return final_state;
}

} // namespace

StudyResult run_study(const StudyPlan& plan, const ExperimentDef& def,
                      const SolverParams& solver_base,
                      const std::filesystem::path& out_dir, int workers,
                      bool resume) {
    std::filesystem::create_directories(out_dir);

    // cases: coarse sweep + reference
    std::vector<CaseSpec> cases;
    for (int m = plan.m_min; m <= plan.m_max; ++m) {
        CaseSpec cs;
        cs.m = m;
        cs.h = plan.base_h * std::pow(2.0, -m);
        cs.n = static_cast<int>(std::llround(plan.domain.side / cs.h));
        cs.eps = (plan.mode == StudyPlan::Mode::FixedEps) ? plan.eps_fixed
                                                          : paired_eps(plan.rule, m);
        cs.dt = plan.dt_over_h * cs.h;
        cases.push_back(cs);
    }
    CaseSpec ref;
    ref.m = plan.m_ref;
    ref.h = plan.base_h * std::pow(2.0, -plan.m_ref);
    ref.n = static_cast<int>(std::llround(plan.domain.side / ref.h));
    ref.eps = (plan.mode == StudyPlan::Mode::FixedEps) ? plan.eps_fixed
                                                       : paired_eps(plan.rule, plan.m_ref);
    ref.dt = plan.dt_over_h * ref.h;
    for (const auto& cs : cases)
        if (ref.n % cs.n != 0)
            throw std::invalid_argument("reference grid is not nested with every case");

    // refuse to mix caches produced by a different study configuration
    std::string manifest = "study:" + def.id;
    manifest += (plan.mode == StudyPlan::Mode::FixedEps)
                    ? ";mode=fixed-eps;eps=" + std::to_string(plan.eps_fixed)
                    : ";mode=paired;rule=" + plan.rule;
    for (const auto& cs : cases) manifest += ";" + case_key(def, plan, solver_base, cs);
    manifest += ";ref:" + case_key(def, plan, solver_base, ref);
    const auto manifest_path = out_dir / "study_manifest.txt";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream is(manifest_path);
        std::string existing((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
        if (existing != manifest)
            throw std::runtime_error(
                "output directory holds a study with a different configuration; "
                "refusing to mix caches");
    } else {
        std::ofstream os(manifest_path);
        os << manifest;
    }

    auto label_of = [&](const CaseSpec& cs) {
        return def.id + "_m" + std::to_string(cs.m) + "_" +
               hash_hex(case_key(def, plan, solver_base, cs)).substr(0, 8);
    };

    // grids must outlive the states bound to them
    std::vector<std::unique_ptr<Grid>> grids(cases.size());
    std::vector<State> finals(cases.size());
    GridSpec ref_spec = plan.domain;
    ref_spec.n = ref.n;
    Grid ref_grid(ref_spec);

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mtx;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cases.size()) return;
            try {
                GridSpec gs = plan.domain;
                gs.n = cases[i].n;
                grids[i] = std::make_unique<Grid>(gs);
                finals[i] = run_case(def, plan, solver_base, cases[i], *grids[i], out_dir,
                                     resume, label_of(cases[i]));
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mtx);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const int nw = std::max(1, std::min<int>(workers, static_cast<int>(cases.size())));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    State ref_state =
        run_case(def, plan, solver_base, ref, ref_grid, out_dir, resume, label_of(ref));

    StudyResult result;
    FluidParams par = def.fluid;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        par.eps = cases[i].eps;
        ErrorRow row = error_norms(finals[i], ref_state, par, plan.grad_mode);
        row.h = cases[i].h;
        row.eps = cases[i].eps;
        result.rows.push_back(row);
    }

    const std::array<const char*, 4> names{"E_rho", "E_u", "E_gradu", "RE"};
    auto column = [&](const char* name) {
        std::vector<double> v;
        for (const auto& r : result.rows) {
            if (std::string(name) == "E_rho") v.push_back(r.E_rho);
            else if (std::string(name) == "E_u") v.push_back(r.E_u);
            else if (std::string(name) == "E_gradu") v.push_back(r.E_gradu);
            else v.push_back(r.RE);
        }
        return v;
    };
    std::vector<double> hs;
    for (const auto& r : result.rows) hs.push_back(r.h);
    for (const char* name : names) {
        const auto e = column(name);
        if (e.size() >= 2) {
            result.rates[name] = eoc(e);
            result.fitted[name] = fitted_order(hs, e);
        }
    }

    // errors.csv / eoc.csv with a provenance header
    const std::string study_hash = hash_hex(manifest);
    {
        std::ofstream os(out_dir / "errors.csv");
        os << "# pennsfv study=" << def.id << " config_hash=" << study_hash << "\n";
        os << "h,eps,E_rho,E_u,E_gradu,RE\n";
        char buf[256];
        for (const auto& r : result.rows) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.h,
                          r.eps, r.E_rho, r.E_u, r.E_gradu, r.RE);
            os << buf;
        }
    }
    {
        std::ofstream os(out_dir / "eoc.csv");
        char buf[256];
        os << "# pennsfv study=" << def.id << " config_hash=" << study_hash << "\n";
        std::snprintf(buf, sizeof(buf), "# fit,%.17g,%.17g,%.17g,%.17g\n",
                      result.fitted["E_rho"], result.fitted["E_u"],
                      result.fitted["E_gradu"], result.fitted["RE"]);
        os << buf;
        os << "m_pair,rate_E_rho,rate_E_u,rate_E_gradu,rate_RE\n";
        for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d-%d,%.17g,%.17g,%.17g,%.17g\n",
                          plan.m_min + static_cast<int>(i),
                          plan.m_min + static_cast<int>(i) + 1,
                          result.rates["E_rho"][i], result.rates["E_u"][i],
                          result.rates["E_gradu"][i], result.rates["RE"][i]);
            os << buf;
        }
    }
    return result;
}

std::vector<PenaltyRow> penalty_profile(const ExperimentDef& def, double h,
                                        const std::vector<double>& eps_list,
                                        const SolverParams& solver_base,
                                        const GridSpec& domain) {
    GridSpec gs = domain;
    gs.n = static_cast<int>(std::llround(domain.side / h));
    Grid g(gs);
    const RegionMask mask = classify_cells(def.shape, g);
    const State init = initial_state(def, g);

    std::vector<PenaltyRow> rows;
    for (double eps : eps_list) {
        FluidParams par = def.fluid;
        par.eps = eps;
        SolverParams solver = solver_base;
        solver.dt = solver_base.dt > 0.0 ? solver_base.dt : 0.25 * h;
        solver.T = def.T;

        PenaltyRow row;
        row.eps = eps;
        RunHooks hooks;
        hooks.on_step = [&](int, const State& now, const State&, const StepStats&) {
            std::vector<double> terms;
            for (Index c = 0; c < g.num_cells(); ++c) {
                if (!mask.is_solid(c)) continue;
                double u2 = 0.0;
                for (int a = 0; a < g.dim(); ++a) u2 += now.u.at(a, c) * now.u.at(a, c);
                terms.push_back(g.cell_volume() * u2);
            }
            row.accumulated += solver.dt / eps * pairwise_sum(terms);
        };
        State fin = run(init, mask, par, solver, hooks);
        row.u_l2_solid =
            masked_norm(fin.u, [&](Index c) { return mask.is_solid(c); }, 2.0);
        for (Index c = 0; c < g.num_cells(); ++c) {
            if (!mask.is_solid(c)) continue;
            double u2 = 0.0;
            for (int a = 0; a < g.dim(); ++a) u2 += fin.u.at(a, c) * fin.u.at(a, c);
            row.u_linf_solid = std::max(row.u_linf_solid, std::sqrt(u2));
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace pnsfv
