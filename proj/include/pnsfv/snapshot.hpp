/// @file snapshot.hpp
/// @brief Binary state snapshots (format PNSF1) and legacy-ASCII VTK output.
///
/// PNSF1 layout, little-endian: magic "PNSF", u32 version = 1, i64 d, i64 n,
/// f64 side, f64 origin[d], f64 t, f64 gamma, f64 a, f64 mu, f64 lambda,
/// f64 alpha, f64 eps, then n^d density values in lexicographic cell order
/// (axis 0 fastest) and d * n^d velocity values component-major. The layout
/// is normative: nested-grid comparison and reference reuse depend on it.

#pragma once

#include "pnsfv/grid.hpp"
#include "pnsfv/scheme.hpp"

#include <filesystem>

namespace pnsfv {

struct SnapshotHeader {
    int d = 0;
    int n = 0;
    double side = 0.0;
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    double t = 0.0;
    double gamma = 0.0, a = 0.0, mu = 0.0, lambda = 0.0, alpha = 0.0, eps = 0.0;
};

void write_snapshot(const std::filesystem::path& path, const State& s,
                    const FluidParams& par);

struct LoadedSnapshot {
    SnapshotHeader header;
    std::vector<double> rho;
    std::vector<double> u; // component-major
};
LoadedSnapshot read_snapshot(const std::filesystem::path& path);

/// Rebind a loaded snapshot onto a live grid (must match the header).
State snapshot_to_state(const LoadedSnapshot& snap, const Grid& g);

/// Legacy ASCII VTK STRUCTURED_POINTS with fields `rho` (scalar) and `u`
/// (vector), one point per cell center. The title line carries provenance.
void write_vtk(const std::filesystem::path& path, const State& s,
               const std::string& title = "");

} // namespace pnsfv
