#pragma once

#include <Eigen/Core>
#include <array>

#include "simto/errors.hpp"

namespace simto {

// Regular grid of square bilinear elements. Nodes are numbered column-major,
// node(ix, iy) = ix*(nely+1) + iy with iy increasing upward; element (ex, ey)
// has corner nodes ordered counter-clockwise from the lower left. Each node
// carries two DOFs (2n = x, 2n+1 = y).
struct GridSpec {
    int nelx = 150;
    int nely = 70;
    double element_size = 1.0;  // mm

    void validate() const {
        if (nelx < 1 || nely < 1) throw StructuralError("GridSpec: element counts must be >= 1");
        if (!(element_size > 0.0)) throw StructuralError("GridSpec: element_size must be > 0");
    }

    int elem_count() const { return nelx * nely; }
    int node_count() const { return (nelx + 1) * (nely + 1); }
    int dof_count() const { return 2 * node_count(); }

    int node_index(int ix, int iy) const { return ix * (nely + 1) + iy; }
    int elem_index(int ex, int ey) const { return ex * nely + ey; }
    int elem_x(int e) const { return e / nely; }
    int elem_y(int e) const { return e % nely; }

    std::array<int, 4> elem_nodes(int ex, int ey) const {
        return {node_index(ex, ey), node_index(ex + 1, ey),
                node_index(ex + 1, ey + 1), node_index(ex, ey + 1)};
    }

    std::array<int, 8> elem_dofs(int ex, int ey) const {
        const auto n = elem_nodes(ex, ey);
        return {2 * n[0], 2 * n[0] + 1, 2 * n[1], 2 * n[1] + 1,
                2 * n[2], 2 * n[2] + 1, 2 * n[3], 2 * n[3] + 1};
    }

    Eigen::Vector2d node_pos(int ix, int iy) const {
        return {ix * element_size, iy * element_size};
    }

    Eigen::Vector2d elem_center(int e) const {
        return {(elem_x(e) + 0.5) * element_size, (elem_y(e) + 0.5) * element_size};
    }

    double width() const { return nelx * element_size; }
    double height() const { return nely * element_size; }

    bool operator==(const GridSpec&) const = default;
};

// Design vector: one density in [0,1] per element, stored column-major to
// match GridSpec::elem_index.
struct DensityField {
    GridSpec grid;
    Eigen::ArrayXd values;

    DensityField() = default;
    DensityField(const GridSpec& g, Eigen::ArrayXd v) : grid(g), values(std::move(v)) {
        grid.validate();
        if (values.size() != grid.elem_count())
            throw StructuralError("DensityField: value count does not match grid");
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            double& r = values[i];
            if (r < -1e-12 || r > 1.0 + 1e-12)
                throw DomainError("DensityField: density outside [0,1]");
            if (r < 0.0) r = 0.0;
            if (r > 1.0) r = 1.0;
        }
    }

    static DensityField uniform(const GridSpec& g, double value) {
        return DensityField(g, Eigen::ArrayXd::Constant(g.elem_count(), value));
    }

    double operator[](int e) const { return values[e]; }
    double at(int ex, int ey) const { return values[grid.elem_index(ex, ey)]; }
    int size() const { return static_cast<int>(values.size()); }
    double mean() const { return values.mean(); }
};

}  // namespace simto
