/// @file verify.hpp
/// @brief Self-check suites runnable from the CLI: operator identities,
///        weak-form equivalence of the cellwise residuals against an
///        independently coded evaluator, convexity properties of the
///        pressure potential, and the per-step energy balance.
///
/// The weak-form evaluator here is written from the scheme definition with
/// its own loops; it shares no code path with the residual assembly, so a
/// sign or stencil mistake on either side makes the equivalence check fail.

#pragma once

#include "pnsfv/diagnostics.hpp"
#include "pnsfv/scheme.hpp"

#include <string>
#include <vector>

namespace pnsfv {

/// Deliberate faults for mutation testing of the check suites.
enum class Mutation { None, PressureSign };

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;     // worst observed discrepancy
    double threshold = 0.0;
};

/// Weak form of the continuity equation evaluated against one test field:
///   int D_t rho phi - sum_faces |sigma| F(rho,u) [[phi]].
double weak_form_continuity(const State& now, const State& old, const FluidParams& par,
                            double dt, const ScalarField& phi);

/// Weak form of the momentum equation against one vector test field.
double weak_form_momentum(const State& now, const State& old, const RegionMask& mask,
                          const FluidParams& par, double dt, const VectorField& phi);

std::vector<CheckResult> check_operator_identities(unsigned seed = 1234);
std::vector<CheckResult> check_weak_strong(unsigned seed = 42,
                                           Mutation mutation = Mutation::None);
std::vector<CheckResult> check_bregman(unsigned seed = 7);
std::vector<CheckResult> check_energy(unsigned seed = 99);

/// Runs the selected suites ("" = all) and prints a pass/fail matrix.
/// Returns true iff everything passed.
bool run_verify(const std::string& suite = "", Mutation mutation = Mutation::None);

} // namespace pnsfv
