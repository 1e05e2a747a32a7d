#include "pnsfv/snapshot.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace pnsfv {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_i64(std::ostream& os, std::int64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::int64_t get_i64(std::istream& is) {
    std::int64_t v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
double get_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

} // namespace

void write_snapshot(const std::filesystem::path& path, const State& s,
                    const FluidParams& par) {
    const Grid& g = s.rho.grid();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open snapshot for writing: " + path.string());
    os.write("PNSF", 4);
    put_u32(os, 1u);
    put_i64(os, g.dim());
    put_i64(os, g.cells_per_axis());
    put_f64(os, g.side());
    for (int a = 0; a < g.dim(); ++a) put_f64(os, g.origin()[a]);
    put_f64(os, s.t);
    put_f64(os, par.gamma);
    put_f64(os, par.a);
    put_f64(os, par.mu);
    put_f64(os, par.lambda);
    put_f64(os, par.alpha);
    put_f64(os, par.eps);
    os.write(reinterpret_cast<const char*>(s.rho.values().data()),
             static_cast<std::streamsize>(sizeof(double) * s.rho.values().size()));
    for (int a = 0; a < g.dim(); ++a)
        os.write(reinterpret_cast<const char*>(s.u.comp(a).data()),
                 static_cast<std::streamsize>(sizeof(double) * s.u.comp(a).size()));
    if (!os) throw std::runtime_error("snapshot write failed: " + path.string());
}

LoadedSnapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open snapshot: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PNSF", 4) != 0)
        throw std::runtime_error("not a PNSF snapshot: " + path.string());
    const std::uint32_t version = get_u32(is);
    if (version != 1u)
        throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
    LoadedSnapshot snap;
    snap.header.d = static_cast<int>(get_i64(is));
    snap.header.n = static_cast<int>(get_i64(is));
    snap.header.side = get_f64(is);
    for (int a = 0; a < snap.header.d; ++a) snap.header.origin[a] = get_f64(is);
    snap.header.t = get_f64(is);
    snap.header.gamma = get_f64(is);
    snap.header.a = get_f64(is);
    snap.header.mu = get_f64(is);
    snap.header.lambda = get_f64(is);
    snap.header.alpha = get_f64(is);
    snap.header.eps = get_f64(is);
    std::size_t ncells = 1;
    for (int a = 0; a < snap.header.d; ++a) ncells *= static_cast<std::size_t>(snap.header.n);
    snap.rho.resize(ncells);
    is.read(reinterpret_cast<char*>(snap.rho.data()),
            static_cast<std::streamsize>(sizeof(double) * ncells));
    snap.u.resize(ncells * static_cast<std::size_t>(snap.header.d));
    is.read(reinterpret_cast<char*>(snap.u.data()),
            static_cast<std::streamsize>(sizeof(double) * snap.u.size()));
    if (!is) throw std::runtime_error("truncated snapshot: " + path.string());
    return snap;
}

State snapshot_to_state(const LoadedSnapshot& snap, const Grid& g) {
    if (snap.header.d != g.dim() || snap.header.n != g.cells_per_axis() ||
        snap.header.side != g.side())
        throw std::runtime_error("snapshot does not match the grid");
    State s;
    s.rho = ScalarField(g);
    s.u = VectorField(g);
    s.t = snap.header.t;
    const std::size_t nc = static_cast<std::size_t>(g.num_cells());
    for (std::size_t c = 0; c < nc; ++c) s.rho[static_cast<Index>(c)] = snap.rho[c];
    for (int a = 0; a < g.dim(); ++a)
        for (std::size_t c = 0; c < nc; ++c) s.u.at(a, static_cast<Index>(c)) = snap.u[a * nc + c];
    return s;
}

void write_vtk(const std::filesystem::path& path, const State& s,
               const std::string& title) {
    const Grid& g = s.rho.grid();
    const int n = g.cells_per_axis();
    const int d = g.dim();
    std::FILE* fp = std::fopen(path.string().c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open VTK file: " + path.string());
    std::fprintf(fp, "# vtk DataFile Version 3.0\n");
    if (title.empty())
        std::fprintf(fp, "pennsfv t=%.17g\n", s.t);
    else
        std::fprintf(fp, "%.255s\n", title.c_str());
    std::fprintf(fp, "ASCII\nDATASET STRUCTURED_POINTS\n");
    std::fprintf(fp, "DIMENSIONS %d %d %d\n", n, n, d == 3 ? n : 1);
    std::fprintf(fp, "ORIGIN %.17g %.17g %.17g\n", g.origin()[0] + 0.5 * g.h(),
                 g.origin()[1] + 0.5 * g.h(),
                 d == 3 ? g.origin()[2] + 0.5 * g.h() : 0.0);
    std::fprintf(fp, "SPACING %.17g %.17g %.17g\n", g.h(), g.h(), g.h());
    std::fprintf(fp, "POINT_DATA %lld\n", static_cast<long long>(g.num_cells()));
    std::fprintf(fp, "SCALARS rho double 1\nLOOKUP_TABLE default\n");
    for (Index c = 0; c < g.num_cells(); ++c) std::fprintf(fp, "%.17g\n", s.rho[c]);
    std::fprintf(fp, "VECTORS u double\n");
    for (Index c = 0; c < g.num_cells(); ++c)
        std::fprintf(fp, "%.17g %.17g %.17g\n", s.u.at(0, c), s.u.at(1, c),
                     d == 3 ? s.u.at(2, c) : 0.0);
    std::fclose(fp);
}

} // namespace pnsfv
