#include "pnsfv/grid.hpp"

#include <algorithm>
#include <cmath>

namespace pnsfv {

double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Grid::Grid(const GridSpec& spec)
    : d_(spec.d), n_(spec.n), side_(spec.side), origin_(spec.origin) {
    if (d_ != 2 && d_ != 3) throw std::invalid_argument("grid: d must be 2 or 3");
    if (n_ < 2) throw std::invalid_argument("grid: n must be at least 2");
    if (!(side_ > 0.0)) throw std::invalid_argument("grid: side must be positive");
    h_ = side_ / n_;
    ncells_ = 1;
    for (int a = 0; a < d_; ++a) {
        stride_[a] = ncells_;
        ncells_ *= n_;
    }
    for (int a = d_; a < 3; ++a) stride_[a] = 0;
    cell_vol_ = std::pow(h_, d_);
    face_area_ = std::pow(h_, d_ - 1);
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

double cell_integral(const ScalarField& f) {
    return f.grid().cell_volume() * pairwise_sum(f.values());
}

double cell_integral_product(const ScalarField& a, const std::vector<double>& b,
                             const Grid& g) {
    std::vector<double> prod(a.values().size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.values()[i] * b[i];
    return g.cell_volume() * pairwise_sum(prod);
}

} // namespace pnsfv
