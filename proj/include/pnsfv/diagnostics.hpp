/// @file diagnostics.hpp
/// @brief Computable forms of the scheme's stability and error machinery:
///        mass/energy bookkeeping, the per-step discrete energy balance with
///        its numerical-dissipation components, relative energy, cross-grid
///        error norms, convergence rates, consistency residuals, and the
///        closed-form rate exponents.

#pragma once

#include "pnsfv/geometry.hpp"
#include "pnsfv/grid.hpp"
#include "pnsfv/scheme.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pnsfv {

/// Bregman distance of the pressure potential,
///   E(rho | ref) = P(rho) - P'(ref)(rho - ref) - P(ref) >= 0.
double bregman(double rho, double rho_ref, const FluidParams& par);

/// int [ 1/2 rho |u - u_ref|^2 + E(rho|rho_ref) ] >= 0.
double relative_energy(const State& s, const ScalarField& rho_ref,
                       const VectorField& u_ref, const FluidParams& par);

/// Per-step energy bookkeeping. The five dissipation components split into
/// exact kinetic parts (time, upwind jump, artificial jump) and internal
/// parts: the time part is the exact Bregman defect of the pressure
/// potential; the face part is a guaranteed lower bound that evaluates P''
/// at the interval endpoint minimizing it (P'' is monotone in rho).
struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double ekin = 0.0;
    double eint = 0.0;
    double visc_diss = 0.0;  // mu ||grad_E u||^2 + nu ||div_h u||^2
    double pen_diss = 0.0;   // (1/eps) ||u||^2 over all penalized cells
    double dnum_ut = 0.0;    // (dt/2) int rho_old |D_t u|^2
    double dnum_uj = 0.0;    // 1/2 sum rho_up |<u>.n| |[[u]]|^2
    double dnum_ua = 0.0;    // h^alpha sum <rho> |[[u]]|^2
    double dnum_rt = 0.0;    // exact Bregman time defect of P
    double dnum_rj = 0.0;    // face defect of P, endpoint lower bound
    double slack = 0.0;      // energy-balance slack; <= 0 up to solver tol
    // not part of the CSV row:
    double pen_diss_solid = 0.0;  // penalty dissipation restricted to the
                                  // true solid region (sub-cell weights)
    double kin_slack = 0.0;       // kinetic sub-balance residual, exact
};

/// Evaluate the discrete energy balance across one accepted implicit step.
/// `solid_weight`, when given, holds the per-cell volume fraction of the
/// true solid region for the restricted penalty dissipation.
DiagnosticsRecord energy_audit(const State& now, const State& old,
                               const RegionMask& mask, const FluidParams& par,
                               double dt,
                               const ScalarField* solid_weight = nullptr);

constexpr const char* kDiagnosticsHeader =
    "t,mass,ekin,eint,visc_diss,pen_diss,dnum_ut,dnum_uj,dnum_ua,dnum_rt,dnum_rj,slack";
std::string diagnostics_csv_row(const DiagnosticsRecord& r);

// ---------------------------------------------------------------------------
// Cross-grid error norms (coarse solution vs. nested fine reference)
// ---------------------------------------------------------------------------

/// How to compare face gradients living on different nested grids.
/// Overlay integrates the exact L2 distance of the two dual-grid piecewise
/// constant gradient functions; the other two are cruder transfer
/// conventions kept for sensitivity checks.
enum class GradCompare { Overlay, FineInject, CoarseTransfer };

struct ErrorRow {
    double h = 0.0;
    double eps = 0.0;
    double E_rho = 0.0;    // L^gamma
    double E_u = 0.0;      // L^2
    double E_gradu = 0.0;  // L^2 of gradient difference
    double RE = 0.0;       // relative energy vs the reference
};

/// Inject the coarse piecewise constants onto the nested fine grid and
/// compute the error norms. Throws if the grids are not nested.
ErrorRow error_norms(const State& coarse, const State& fine, const FluidParams& par,
                     GradCompare mode = GradCompare::Overlay);

/// Exact piecewise-constant injection (constant per sub-cell).
ScalarField inject_to_fine(const ScalarField& coarse, const Grid& fine);
VectorField inject_to_fine(const VectorField& coarse, const Grid& fine);

/// rate_m = log2(e_m / e_{m+1}) for consecutive h halvings.
std::vector<double> eoc(const std::vector<double>& errors);

/// Least-squares slope of log(e) against log(h); the study's headline order.
double fitted_order(const std::vector<double>& hs, const std::vector<double>& errors);

// ---------------------------------------------------------------------------
// Consistency residuals against smooth space-time test functions
// ---------------------------------------------------------------------------

/// Scalar space-time test function with the derivatives the consistency
/// integrals need. `x` always has 3 entries; unused ones are zero.
struct TestFunction {
    std::function<double(const std::array<double, 3>&, double)> value;
    std::function<double(const std::array<double, 3>&, double)> dt;
    std::function<std::array<double, 3>(const std::array<double, 3>&, double)> grad;
};

struct VectorTestFunction {
    // component j of the field and its gradient row (d/dx_i phi_j)
    std::function<double(const std::array<double, 3>&, double, int)> value;
    std::function<double(const std::array<double, 3>&, double, int)> dt;
    std::function<double(const std::array<double, 3>&, double, int, int)> dx;
};

/// Streaming evaluator of the continuity consistency residual
///   e_rho(tau) = [int rho phi]_0^tau - int_0^tau int (rho dphi/dt + rho u . grad phi).
/// Feed states step by step (fields are constant on [t_k, t_{k+1})).
class ConsistencyRho {
public:
    ConsistencyRho(const Grid& g, TestFunction phi, int space_order = 3);
    void start(const State& initial);
    void advance(const State& from, double dt); // integrate over [from.t, from.t+dt)
    double finish(const State& final_state) const;

private:
    const Grid* g_;
    TestFunction phi_;
    int order_;
    double time_integral_ = 0.0;
    double initial_term_ = 0.0;
};

/// Momentum analogue, including viscous terms, pressure and the penalty
/// integral over the true solid region (sub-cell quadrature of the mask).
class ConsistencyMom {
public:
    ConsistencyMom(const Grid& g, const Shape& shape, VectorTestFunction phi,
                   const FluidParams& par, int space_order = 3, int subsamples = 8);
    void start(const State& initial);
    void advance(const State& from, double dt);
    double finish(const State& final_state) const;

private:
    const Grid* g_;
    VectorTestFunction phi_;
    FluidParams par_;
    int order_;
    double time_integral_ = 0.0;
    double initial_term_ = 0.0;
    // midpoint sub-cell quadrature points of the solid region, per cell
    std::vector<std::vector<std::array<double, 3>>> solid_pts_;
    double solid_pt_weight_ = 0.0;
};

// ---------------------------------------------------------------------------
// Closed-form rate exponents
// ---------------------------------------------------------------------------

/// The consistency/error exponents as functions of (d, gamma, alpha). The
/// p-extremal cases of d = 2 are evaluated in closed form (the extremand is
/// monotone in p, so the extremum is the p -> infinity limit).
struct RateExponents {
    double beta_D = 0.0;
    double beta_R_tilde = 0.0; // L2 L^{6/5} density exponent
    double beta_R = 0.0;       // 0 for d = 2, beta_R_tilde for d = 3
    double beta_M = 0.0;
    double beta_RE = 0.0;      // min{1, (1+alpha)/2, alpha}
    std::vector<std::string> notes;
};

RateExponents exponents(int d, double gamma, double alpha);

/// Simplified alpha >= 1 forms, used as a cross-check.
RateExponents exponents_alpha_ge1(int d, double gamma);

} // namespace pnsfv
