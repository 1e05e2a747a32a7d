/// @file scheme.hpp
/// @brief Penalized finite volume scheme for the isentropic Navier-Stokes
///        system on the torus: cellwise residuals of the continuity and
///        momentum equations, the implicit backward-Euler step solved by a
///        segregated Picard iteration, and an explicit convenience stepper.
///
/// The momentum equation carries the friction term (1/eps) u on every cell
/// that is not fully inside the fluid region, which drives the velocity to
/// zero there and enforces the no-slip condition in the limit.

#pragma once

#include <cmath>
#include "pnsfv/geometry.hpp"
#include "pnsfv/grid.hpp"
#include "pnsfv/ops.hpp"

#include <functional>
#include <stdexcept>
#include <string>

namespace pnsfv {

struct FluidParams {
    double a = 1.0;       // pressure coefficient
    double gamma = 1.4;   // adiabatic exponent, > 1
    double mu = 0.1;      // shear viscosity, > 0
    double lambda = 0.0;  // bulk viscosity, >= 0
    double alpha = 0.6;   // artificial viscosity exponent, > -1
    double eps = 1.0;     // penalty parameter, > 0

    double nu(int d) const { return lambda + (static_cast<double>(d - 2) / d) * mu; }
    double pressure(double rho) const { return a * std::pow(rho, gamma); }
    // pressure potential and its derivatives
    double P(double rho) const { return a / (gamma - 1.0) * std::pow(rho, gamma); }
    double Pprime(double rho) const { return a * gamma / (gamma - 1.0) * std::pow(rho, gamma - 1.0); }
    double Pdd(double rho) const { return a * gamma * std::pow(rho, gamma - 2.0); }

    void validate() const {
        if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
        if (!(gamma > 1.0)) throw std::invalid_argument("gamma must exceed 1");
        if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
        if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
        if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    }
};

struct SolverParams {
    enum class Mode { Implicit, Explicit };
    double dt = 0.0;    // time step
    double T = 0.1;     // final time; N_T = round(T/dt)
    Mode mode = Mode::Implicit;
    double tol_nl = 1e-10;   // Picard residual sup-norm tolerance
    int max_picard = 100;
    double tol_lin = 1e-12;  // linear-solver tolerance
    int max_lin = 0;         // 0 -> 10 * n^d
    double cfl = 0.4;        // explicit mode only

    int num_steps() const { return static_cast<int>(std::llround(T / dt)); }
};

struct StepStats {
    int picard = 0;
    double residual = 0.0;
    int lin_iters = 0;
    double min_rho = 0.0;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PicardDiverged : SolverError {
    double best_residual;
    State best_iterate; // closest approximation reached before giving up
    PicardDiverged(double r, State best)
        : SolverError("Picard iteration did not reach tolerance; best residual " +
                      std::to_string(r)),
          best_residual(r),
          best_iterate(std::move(best)) {}
};
struct NegativeDensity : SolverError {
    using SolverError::SolverError;
};
struct LinearSolveFailed : SolverError {
    using SolverError::SolverError;
};
struct CFLViolation : SolverError {
    using SolverError::SolverError;
};

/// Cellwise residual of the discrete continuity equation,
///   R_K = D_t rho_K + (1/h) sum_{faces of K} s_{K,sigma} F^alpha(rho,u).
/// A state solves the scheme iff R vanishes.
ScalarField continuity_residual(const State& now, const State& old,
                                const FluidParams& par, double dt);

/// Cellwise residual of the discrete momentum equation (per component):
/// backward-Euler momentum rate, upwind convection, central pressure
/// gradient, penalty friction on solid cells, Laplacian viscosity and the
/// grad-div viscosity term.
VectorField momentum_residual(const State& now, const State& old,
                              const RegionMask& mask, const FluidParams& par,
                              double dt);

/// One implicit backward-Euler step via segregated Picard iteration:
/// a linear upwind solve for the density with frozen advection velocity,
/// then a linear momentum solve with frozen convection coefficients.
std::pair<State, StepStats> step_implicit(const State& old, const RegionMask& mask,
                                          const FluidParams& par,
                                          const SolverParams& solver);

/// Forward-Euler update with old-state fluxes; the penalty term and the
/// diagonal of the viscous operator are treated implicitly pointwise so the
/// step is not constrained by eps or by the diffusion limit.
State step_explicit(const State& old, const RegionMask& mask, const FluidParams& par,
                    const SolverParams& solver);

struct RunHooks {
    /// Called after each accepted step (step index is 1-based).
    std::function<void(int, const State&, const State&, const StepStats&)> on_step;
    int snapshot_every = 0; // 0 = no periodic snapshots
    std::function<void(int, const State&)> on_snapshot;
};

/// Advance N_T = round(T/dt) steps; deterministic bit-for-bit for a fixed
/// configuration. Propagates solver errors with the failing step index.
State run(const State& init, const RegionMask& mask, const FluidParams& par,
          const SolverParams& solver, const RunHooks& hooks = {});

double sup_norm(const ScalarField& f);
double sup_norm(const VectorField& f);

} // namespace pnsfv
