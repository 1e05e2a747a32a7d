/// @file experiments.hpp
/// @brief Initial-data generators for the three benchmark flows (ring with
///        continuous extension, ring with discontinuous extension, flower
///        domain), parameter sweeps over (h, eps), and reference-solution
///        caching for the convergence studies.

#pragma once

#include <cmath>
#include "pnsfv/diagnostics.hpp"
#include "pnsfv/geometry.hpp"
#include "pnsfv/scheme.hpp"

#include <filesystem>
#include <map>
#include <optional>

namespace pnsfv {

struct ExperimentDef {
    std::string id;
    Shape shape;
    FluidParams fluid;   // eps is set per case by the study driver
    double T = 0.1;
    std::function<double(const std::array<double, 3>&)> rho0;
    std::function<double(const std::array<double, 3>&, int)> m0; // component j
    std::vector<double> break_radii;   // radial discontinuities/kinks
    bool flower_band = false;          // outer boundary is the flower curve
};

/// exp1 | exp2 | exp3 with the common parameters a=1, gamma=1.4, mu=0.1,
/// nu=0 (lambda=0 in 2-D), alpha=0.6, T=0.1.
ExperimentDef make_experiment(const std::string& id);

/// rho_h = projection of the extended density, m_h = projection of the
/// extended momentum (discontinuity-aware quadrature), u_h = m_h / rho_h.
State initial_state(const ExperimentDef& def, const Grid& g);

struct StudyPlan {
    enum class Mode { FixedEps, Paired };
    Mode mode = Mode::Paired;
    double eps_fixed = std::pow(4.0, -4); // FixedEps only
    std::string rule = "quadratic";       // Paired: sqrt | quadratic | quartic
    int m_min = 0;
    int m_max = 2;
    int m_ref = 3;
    double base_h = 0.2;
    GridSpec domain{2, 10, 2.0, {-1.0, -1.0, -1.0}}; // n is derived per case
    double dt_over_h = 0.25;
    GradCompare grad_mode = GradCompare::Overlay;
};

/// eps(h) pairing rules: sqrt -> 2^{-(m+14)/2}, quadratic -> 4^{-(m+2)},
/// quartic -> 16^{-m}.
double paired_eps(const std::string& rule, int m);

struct StudyResult {
    std::vector<ErrorRow> rows;                 // coarse cases, m ascending
    std::map<std::string, std::vector<double>> rates;  // pairwise EOC per error
    std::map<std::string, double> fitted;       // least-squares order per error
};

/// Runs (or loads from the snapshot cache) the reference and all coarse
/// cases, writes errors.csv / eoc.csv / per-case diagnostics, and returns
/// the error table. Cases are keyed by a hash of their full configuration;
/// an existing cache with a different study configuration is refused.
StudyResult run_study(const StudyPlan& plan, const ExperimentDef& def,
                      const SolverParams& solver_base,
                      const std::filesystem::path& out_dir, int workers = 1,
                      bool resume = false);

struct PenaltyRow {
    double eps = 0.0;
    double u_l2_solid = 0.0;    // ||u(T)||_{L2} over penalized cells
    double u_linf_solid = 0.0;  // max |u(T)| over penalized cells
    double accumulated = 0.0;   // (1/eps) int_0^T ||u||^2_{L2(solid cells)} dt
};

/// Final-time velocity magnitude in the penalized region for each eps on a
/// common grid, plus the accumulated penalty dissipation.
std::vector<PenaltyRow> penalty_profile(const ExperimentDef& def, double h,
                                        const std::vector<double>& eps_list,
                                        const SolverParams& solver_base,
                                        const GridSpec& domain);

} // namespace pnsfv
