#include "simto/filter.hpp"

#include <cmath>

#include "simto/errors.hpp"

namespace simto {

DensityFilter::DensityFilter(const GridSpec& grid, double radius_mm)
    : grid_(grid), radius_(radius_mm) {
    grid.validate();
    if (!(radius_mm > 0.0)) throw StructuralError("DensityFilter: radius must be > 0");
    const double h = grid.element_size;
    const int reach = std::max(0, static_cast<int>(std::ceil(radius_mm / h)) - 1);
    const int ne = grid.elem_count();

    offsets_.assign(ne + 1, 0);
    row_sum_.assign(ne, 0.0);
    neighbors_.reserve(static_cast<size_t>(ne) * (2 * reach + 1));
    weights_.reserve(neighbors_.capacity());

    for (int ex = 0; ex < grid.nelx; ++ex) {
        for (int ey = 0; ey < grid.nely; ++ey) {
            const int e = grid.elem_index(ex, ey);
            double wsum = 0.0;
            for (int ix = std::max(0, ex - reach); ix <= std::min(grid.nelx - 1, ex + reach); ++ix) {
                for (int iy = std::max(0, ey - reach); iy <= std::min(grid.nely - 1, ey + reach);
                     ++iy) {
                    const double dist =
                        h * std::sqrt(double(ix - ex) * (ix - ex) + double(iy - ey) * (iy - ey));
                    const double w = radius_mm - dist;
                    if (w <= 0.0) continue;
                    neighbors_.push_back(grid.elem_index(ix, iy));
                    weights_.push_back(w);
                    wsum += w;
                }
            }
            offsets_[e + 1] = static_cast<int>(neighbors_.size());
            row_sum_[e] = wsum;
        }
    }
    // offsets_ is filled in elem_index order only if we iterated in that order;
    // elem_index(ex, ey) = ex*nely + ey matches the loop nest above.

    // transposed structure, weights divided by the source row sums
    t_offsets_.assign(ne + 1, 0);
    for (int e = 0; e < ne; ++e)
        for (int k = offsets_[e]; k < offsets_[e + 1]; ++k) ++t_offsets_[neighbors_[k] + 1];
    for (int i = 0; i < ne; ++i) t_offsets_[i + 1] += t_offsets_[i];
    t_neighbors_.resize(neighbors_.size());
    t_weights_.resize(weights_.size());
    std::vector<int> cursor(t_offsets_.begin(), t_offsets_.end() - 1);
    for (int e = 0; e < ne; ++e) {
        for (int k = offsets_[e]; k < offsets_[e + 1]; ++k) {
            const int i = neighbors_[k];
            const int pos = cursor[i]++;
            t_neighbors_[pos] = e;
            t_weights_[pos] = weights_[k] / row_sum_[e];
        }
    }
}

Eigen::ArrayXd DensityFilter::apply(const Eigen::ArrayXd& x, ExecPolicy policy) const {
    if (x.size() != grid_.elem_count()) throw StructuralError("DensityFilter: size mismatch");
    Eigen::ArrayXd out(x.size());
    parallel_for(x.size(), [&](std::ptrdiff_t e) {
        double acc = 0.0;
        for (int k = offsets_[e]; k < offsets_[e + 1]; ++k) acc += weights_[k] * x[neighbors_[k]];
        out[e] = acc / row_sum_[e];
    }, policy);
    return out;
}

Eigen::ArrayXd DensityFilter::apply_adjoint(const Eigen::ArrayXd& g, ExecPolicy policy) const {
    if (g.size() != grid_.elem_count()) throw StructuralError("DensityFilter: size mismatch");
    Eigen::ArrayXd out(g.size());
    parallel_for(g.size(), [&](std::ptrdiff_t i) {
        double acc = 0.0;
        for (int k = t_offsets_[i]; k < t_offsets_[i + 1]; ++k)
            acc += t_weights_[k] * g[t_neighbors_[k]];
        out[i] = acc;
    }, policy);
    return out;
}

DensityField DensityFilter::apply(const DensityField& rho, ExecPolicy policy) const {
    if (!(rho.grid == grid_)) throw StructuralError("DensityFilter: grid mismatch");
    return DensityField(grid_, apply(rho.values, policy));
}

DensityField density_filter(const DensityField& rho, double radius_mm, ExecPolicy policy) {
    return DensityFilter(rho.grid, radius_mm).apply(rho, policy);
}

}  // namespace simto
