#pragma once

#include <Eigen/Core>
#include <vector>

#include "simto/errors.hpp"
#include "simto/grid.hpp"

namespace simto {

// One extracted contact load: a point force in the undeformed design frame.
// position is in design-domain millimetres, force holds the averaged in-plane
// vector and weight its magnitude. The optimizer applies the unit direction
// and carries the weight as the objective multiplier.
struct LoadCase {
    Eigen::Vector2d position{0.0, 0.0};  // mm
    Eigen::Vector2d force{0.0, 0.0};
    double weight = 0.0;

    Eigen::Vector2d direction() const { return force / force.norm(); }
};

struct ContactLoadSet {
    std::vector<LoadCase> loads;

    int size() const { return static_cast<int>(loads.size()); }
    bool empty() const { return loads.empty(); }

    void validate(const GridSpec& grid) const {
        if (loads.empty()) throw StructuralError("ContactLoadSet: needs at least one load");
        for (const auto& lc : loads) {
            if (!(lc.weight > 0.0)) throw StructuralError("ContactLoadSet: weights must be > 0");
            if (!(lc.force.norm() > 0.0))
                throw StructuralError("ContactLoadSet: zero force vector");
            if (lc.position.x() < -1e-9 || lc.position.x() > grid.width() + 1e-9 ||
                lc.position.y() < -1e-9 || lc.position.y() > grid.height() + 1e-9)
                throw StructuralError("ContactLoadSet: load outside the design domain");
        }
    }

    // Snap a load position to its nearest grid node.
    static int snap_node(const GridSpec& grid, const Eigen::Vector2d& pos_mm) {
        const double h = grid.element_size;
        int ix = static_cast<int>(std::lround(pos_mm.x() / h));
        int iy = static_cast<int>(std::lround(pos_mm.y() / h));
        ix = std::clamp(ix, 0, grid.nelx);
        iy = std::clamp(iy, 0, grid.nely);
        return grid.node_index(ix, iy);
    }
};

}  // namespace simto
