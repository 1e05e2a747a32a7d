/// @file pennsfv.cpp
/// @brief Command-line front end: run a single simulation, drive a
///        convergence study, run the self-check suites, print the
///        closed-form rate exponents, or inspect a snapshot.

#include "pnsfv/config.hpp"
#include "pnsfv/diagnostics.hpp"
#include "pnsfv/experiments.hpp"
#include "pnsfv/snapshot.hpp"
#include "pnsfv/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

namespace {

using namespace pnsfv;

int cmd_run(const std::string& config_path, const std::string& out_override) {
    Config cfg = Config::load(config_path);
    if (!out_override.empty()) cfg.output.dir = out_override;
    std::filesystem::create_directories(cfg.output.dir);

    const ExperimentDef base = make_experiment(cfg.experiment);
    ExperimentDef def = base;
    def.fluid = cfg.fluid;
    if (cfg.shape) def.shape = *cfg.shape;

    Grid grid(cfg.grid);
    const RegionMask mask = classify_cells(def.shape, grid);
    const ScalarField solid_w = solid_fraction(def.shape, grid);
    State init = initial_state(def, grid);

    SolverParams solver = cfg.solver;
    if (!cfg.has_explicit_dt) solver.dt = cfg.dt_over_h * grid.h();

    const std::string hash = cfg.hash_hex();
    const auto diag_path = cfg.output.dir / ("diag_" + hash + ".csv");
    std::ofstream diag(diag_path);
    diag << "# pennsfv run config_hash=" << hash << "\n";
    diag << "# experiment=" << cfg.experiment << " n=" << grid.cells_per_axis()
         << " h=" << grid.h() << " dt=" << solver.dt << " eps=" << cfg.fluid.eps << "\n";
    diag << kDiagnosticsHeader << "\n";

    RunHooks hooks;
    hooks.on_step = [&](int, const State& now, const State& old, const StepStats&) {
        diag << diagnostics_csv_row(energy_audit(now, old, mask, cfg.fluid, solver.dt,
                                                 &solid_w))
             << "\n";
    };
    hooks.snapshot_every = cfg.output.snapshot_every;
    int snap_count = 0;
    hooks.on_snapshot = [&](int step, const State& s) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_k%06d.pnsf", hash.c_str(), step);
        write_snapshot(cfg.output.dir / name, s, cfg.fluid);
        if (cfg.output.vtk) {
            std::snprintf(name, sizeof(name), "%s_k%06d.vtk", hash.c_str(), step);
            write_vtk(cfg.output.dir / name, s,
                      "pennsfv config_hash=" + hash + " step=" + std::to_string(step));
        }
        ++snap_count;
    };

    try {
        State fin = run(init, mask, cfg.fluid, solver, hooks);
        write_snapshot(cfg.output.dir / (hash + ".pnsf"), fin, cfg.fluid);
        if (cfg.output.vtk)
            write_vtk(cfg.output.dir / (hash + ".vtk"), fin,
                      "pennsfv config_hash=" + hash + " final");
        std::printf("run complete: %d steps, t = %.6g, mass = %.12g, min rho = %.6g\n",
                    solver.num_steps(), fin.t, cell_integral(fin.rho), fin.min_rho());
        std::printf("outputs: %s, %s\n", diag_path.string().c_str(),
                    (cfg.output.dir / (hash + ".pnsf")).string().c_str());
        return 0;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 1;
    }
}

int cmd_study(const std::string& config_path, const std::string& out_override,
              int workers_override, bool paper_scale, bool resume,
              const std::string& grad_override) {
    Config cfg = Config::load(config_path);
    if (!out_override.empty()) cfg.output.dir = out_override;
    if (workers_override > 0) cfg.output.workers = workers_override;
    if (paper_scale) {
        cfg.study.m_max = 3;
        cfg.study.m_ref = 4;
    }
    if (!grad_override.empty()) {
        if (grad_override == "overlay") cfg.study.grad_mode = GradCompare::Overlay;
        else if (grad_override == "fine-inject") cfg.study.grad_mode = GradCompare::FineInject;
        else if (grad_override == "coarse-transfer")
            cfg.study.grad_mode = GradCompare::CoarseTransfer;
        else {
            std::fprintf(stderr, "unknown grad-compare mode '%s'\n", grad_override.c_str());
            return 2;
        }
    }

    ExperimentDef def = make_experiment(cfg.experiment);
    def.fluid = cfg.fluid;
    if (cfg.shape) def.shape = *cfg.shape;
    SolverParams solver = cfg.solver;

    try {
        const StudyResult res = run_study(cfg.study, def, solver, cfg.output.dir,
                                          cfg.output.workers, resume);
        std::printf("%-8s %-12s %-12s %-12s %-12s %-12s\n", "h", "eps", "E_rho", "E_u",
                    "E_gradu", "RE");
        for (const auto& r : res.rows)
            std::printf("%-8.5g %-12.5g %-12.5g %-12.5g %-12.5g %-12.5g\n", r.h, r.eps,
                        r.E_rho, r.E_u, r.E_gradu, r.RE);
        if (res.rows.size() >= 2) {
            std::printf("EOC (pairwise; last row = least-squares fit)\n");
            std::printf("%-8s %-12s %-12s %-12s %-12s\n", "pair", "E_rho", "E_u",
                        "E_gradu", "RE");
            const auto& rr = res.rates;
            for (std::size_t i = 0; i + 1 < res.rows.size(); ++i)
                std::printf("%zu-%zu      %-12.4g %-12.4g %-12.4g %-12.4g\n", i, i + 1,
                            rr.at("E_rho")[i], rr.at("E_u")[i], rr.at("E_gradu")[i],
                            rr.at("RE")[i]);
            std::printf("fit      %-12.4g %-12.4g %-12.4g %-12.4g\n",
                        res.fitted.at("E_rho"), res.fitted.at("E_u"),
                        res.fitted.at("E_gradu"), res.fitted.at("RE"));
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "study failed: %s\n", e.what());
        return 1;
    }
}

int cmd_exponents(int d, double gamma, double alpha) {
    try {
        const RateExponents ex = exponents(d, gamma, alpha);
        std::printf("d = %d, gamma = %g, alpha = %g\n", d, gamma, alpha);
        std::printf("beta_D       = %.12g\n", ex.beta_D);
        std::printf("beta_R~      = %.12g\n", ex.beta_R_tilde);
        std::printf("beta_R       = %.12g\n", ex.beta_R);
        std::printf("beta_M       = %.12g\n", ex.beta_M);
        std::printf("beta_RE      = %.12g\n", ex.beta_RE);
        for (const auto& note : ex.notes) std::printf("note: %s\n", note.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

int cmd_info(const std::string& path) {
    try {
        const LoadedSnapshot snap = read_snapshot(path);
        std::printf("PNSF1 snapshot %s\n", path.c_str());
        std::printf("d = %d, n = %d, side = %.17g\n", snap.header.d, snap.header.n,
                    snap.header.side);
        if (snap.header.d == 3)
            std::printf("origin = (%.17g, %.17g, %.17g)\n", snap.header.origin[0],
                        snap.header.origin[1], snap.header.origin[2]);
        else
            std::printf("origin = (%.17g, %.17g)\n", snap.header.origin[0],
                        snap.header.origin[1]);
        std::printf("t = %.17g\n", snap.header.t);
        std::printf("gamma = %g, a = %g, mu = %g, lambda = %g, alpha = %g, eps = %.10g\n",
                    snap.header.gamma, snap.header.a, snap.header.mu, snap.header.lambda,
                    snap.header.alpha, snap.header.eps);
        double mn = snap.rho[0], mx = snap.rho[0], mass = 0.0;
        for (double r : snap.rho) {
            mn = std::min(mn, r);
            mx = std::max(mx, r);
            mass += r;
        }
        const double h = snap.header.side / snap.header.n;
        mass *= std::pow(h, snap.header.d);
        std::printf("rho: min %.6g, max %.6g, mass %.12g\n", mn, mx, mass);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"penalized finite volume solver for compressible Navier-Stokes"};
    app.require_subcommand(1);

    std::string config_path, out_dir, grad_mode, suite, mutate, snapshot_path;
    int workers = 0;
    bool paper_scale = false, resume = false;
    int exp_d = 2;
    double exp_gamma = 1.4, exp_alpha = 0.6;

    auto* run_cmd = app.add_subcommand("run", "run a single simulation");
    run_cmd->add_option("config", config_path, "TOML configuration file")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides config)");

    auto* study_cmd = app.add_subcommand("study", "run a convergence study");
    study_cmd->add_option("config", config_path, "TOML configuration file")->required();
    study_cmd->add_option("--out", out_dir, "output directory (overrides config)");
    study_cmd->add_option("--workers", workers, "parallel case workers");
    study_cmd->add_flag("--paper-scale", paper_scale, "use m <= 3 with reference m = 4");
    study_cmd->add_flag("--resume", resume, "reuse cached case results");
    study_cmd->add_option("--grad-compare", grad_mode,
                          "overlay | fine-inject | coarse-transfer");

    auto* verify_cmd = app.add_subcommand("verify", "run the self-check suites");
    verify_cmd->add_option("--suite", suite, "ops | weakstrong | bregman | energy");
    verify_cmd->add_option("--mutate", mutate,
                           "inject a deliberate fault (pressure-sign) and expect detection");

    auto* exp_cmd = app.add_subcommand("exponents", "print the closed-form rate exponents");
    exp_cmd->add_option("d", exp_d, "dimension (2 or 3)")->required();
    exp_cmd->add_option("gamma", exp_gamma, "adiabatic exponent")->required();
    exp_cmd->add_option("alpha", exp_alpha, "artificial viscosity exponent")->required();

    auto* info_cmd = app.add_subcommand("info", "describe a PNSF1 snapshot");
    info_cmd->add_option("snapshot", snapshot_path, "snapshot file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, out_dir);
        if (study_cmd->parsed())
            return cmd_study(config_path, out_dir, workers, paper_scale, resume, grad_mode);
        if (verify_cmd->parsed()) {
            Mutation m = Mutation::None;
            if (mutate == "pressure-sign") m = Mutation::PressureSign;
            else if (!mutate.empty()) {
                std::fprintf(stderr, "unknown mutation '%s'\n", mutate.c_str());
                return 2;
            }
            const bool ok = run_verify(suite, m);
            if (m != Mutation::None) {
                // mutation mode succeeds when the fault is detected
                std::printf(!ok ? "mutation detected\n" : "mutation NOT detected\n");
                return ok ? 1 : 0;
            }
            return ok ? 0 : 1;
        }
        if (exp_cmd->parsed()) return cmd_exponents(exp_d, exp_gamma, exp_alpha);
        if (info_cmd->parsed()) return cmd_info(snapshot_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
