#include "simto/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "simto/errors.hpp"

namespace simto {

void BodyMesh::validate() const {
    if (nodes.empty() || triangles.empty()) throw StructuralError("BodyMesh: empty mesh");
    for (const auto& t : triangles) {
        for (int i : t)
            if (i < 0 || i >= static_cast<int>(nodes.size()))
                throw StructuralError("BodyMesh: triangle index out of range");
        const Eigen::Vector2d a = nodes[t[0]], b = nodes[t[1]], c = nodes[t[2]];
        const double twice_area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (!(twice_area > 1e-12)) throw StructuralError("BodyMesh: degenerate or inverted triangle");
    }
}

double BodyMesh::area() const {
    double s = 0.0;
    for (const auto& t : triangles) {
        const Eigen::Vector2d a = nodes[t[0]], b = nodes[t[1]], c = nodes[t[2]];
        s += 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    }
    return s;
}

Eigen::Vector2d BodyMesh::centroid() const {
    Eigen::Vector2d acc{0.0, 0.0};
    double total = 0.0;
    for (const auto& t : triangles) {
        const Eigen::Vector2d a = nodes[t[0]], b = nodes[t[1]], c = nodes[t[2]];
        const double w = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
        acc += w * (a + b + c) / 3.0;
        total += w;
    }
    return acc / total;
}

Eigen::AlignedBox2d BodyMesh::bounding_box() const {
    Eigen::AlignedBox2d box;
    for (const auto& p : nodes) box.extend(p);
    return box;
}

namespace {

void fill_boundary(BodyMesh& mesh) {
    // Edges appearing in exactly one triangle, kept in triangle orientation so
    // the interior lies on the left.
    std::map<std::pair<int, int>, std::pair<int, int>> count;  // sorted edge -> (count, oriented a)
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            const auto key = std::minmax(a, b);
            auto& entry = count[{key.first, key.second}];
            entry.first += 1;
            entry.second = a;
        }
    }
    mesh.boundary_edges.clear();
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            const auto key = std::minmax(a, b);
            if (count[{key.first, key.second}].first == 1)
                mesh.boundary_edges.push_back({a, b});
        }
    }
    std::vector<uint8_t> on_boundary(mesh.nodes.size(), 0);
    for (const auto& e : mesh.boundary_edges) {
        on_boundary[e[0]] = 1;
        on_boundary[e[1]] = 1;
    }
    mesh.boundary_nodes.clear();
    for (size_t i = 0; i < on_boundary.size(); ++i)
        if (on_boundary[i]) mesh.boundary_nodes.push_back(static_cast<int>(i));
}

// Mesh a set of solid grid cells: two triangles per cell, nodes shared.
BodyMesh mesh_cells(const std::vector<uint8_t>& keep, const GridSpec& grid, BodyRole role) {
    BodyMesh mesh;
    mesh.role = role;
    std::vector<int> grid2mesh(grid.node_count(), -1);
    auto mesh_node = [&](int ix, int iy) {
        const int gn = grid.node_index(ix, iy);
        if (grid2mesh[gn] < 0) {
            grid2mesh[gn] = static_cast<int>(mesh.nodes.size());
            mesh.nodes.push_back(grid.node_pos(ix, iy));
        }
        return grid2mesh[gn];
    };
    for (int ex = 0; ex < grid.nelx; ++ex) {
        for (int ey = 0; ey < grid.nely; ++ey) {
            if (!keep[grid.elem_index(ex, ey)]) continue;
            const int ll = mesh_node(ex, ey);
            const int lr = mesh_node(ex + 1, ey);
            const int ur = mesh_node(ex + 1, ey + 1);
            const int ul = mesh_node(ex, ey + 1);
            mesh.triangles.push_back({ll, lr, ur});
            mesh.triangles.push_back({ll, ur, ul});
        }
    }
    if (mesh.triangles.empty()) throw InfeasibleDesign("mesh: no solid material");
    fill_boundary(mesh);
    // remember the grid->mesh map via a side channel for port lookup
    mesh.fixed_port_nodes.clear();
    mesh.input_port_nodes.clear();
    // stash grid2mesh in a static-free way: caller resolves ports below
    // (ports resolved by mesh_from_density using the same deterministic
    // node ordering; rebuild the map here instead)
    return mesh;
}

}  // namespace

std::vector<uint8_t> solid_mask(const DensityField& rho, double threshold) {
    std::vector<uint8_t> solid(rho.size(), 0);
    for (int e = 0; e < rho.size(); ++e) solid[e] = rho[e] >= threshold ? 1 : 0;
    return solid;
}

std::vector<uint8_t> largest_component(const std::vector<uint8_t>& solid, const GridSpec& grid) {
    std::vector<int> label(solid.size(), -1);
    int best_label = -1, best_size = 0;
    int next = 0;
    for (int seed = 0; seed < static_cast<int>(solid.size()); ++seed) {
        if (!solid[seed] || label[seed] >= 0) continue;
        int size = 0;
        std::queue<int> q;
        q.push(seed);
        label[seed] = next;
        while (!q.empty()) {
            const int e = q.front();
            q.pop();
            ++size;
            const int ex = grid.elem_x(e), ey = grid.elem_y(e);
            const int nb[4][2] = {{ex - 1, ey}, {ex + 1, ey}, {ex, ey - 1}, {ex, ey + 1}};
            for (const auto& n : nb) {
                if (n[0] < 0 || n[0] >= grid.nelx || n[1] < 0 || n[1] >= grid.nely) continue;
                const int ne = grid.elem_index(n[0], n[1]);
                if (solid[ne] && label[ne] < 0) {
                    label[ne] = next;
                    q.push(ne);
                }
            }
        }
        if (size > best_size) {  // ties keep the earlier (lower-index) component
            best_size = size;
            best_label = next;
        }
        ++next;
    }
    std::vector<uint8_t> keep(solid.size(), 0);
    if (best_label >= 0)
        for (size_t e = 0; e < solid.size(); ++e) keep[e] = label[e] == best_label ? 1 : 0;
    return keep;
}

BodyMesh mesh_from_density(const DensityField& rho, double threshold, const PortLayout* ports) {
    const GridSpec& grid = rho.grid;
    const auto keep = largest_component(solid_mask(rho, threshold), grid);
    if (std::find(keep.begin(), keep.end(), uint8_t{1}) == keep.end())
        throw InfeasibleDesign("mesh_from_density: no solid material");

    BodyMesh mesh = mesh_cells(keep, grid, BodyRole::GripperLeft);

    if (ports) {
        // rebuild the grid-node -> mesh-node map (same ordering as mesh_cells)
        std::vector<int> grid2mesh(grid.node_count(), -1);
        int counter = 0;
        for (int ex = 0; ex < grid.nelx; ++ex) {
            for (int ey = 0; ey < grid.nely; ++ey) {
                if (!keep[grid.elem_index(ex, ey)]) continue;
                for (const int gn : {grid.node_index(ex, ey), grid.node_index(ex + 1, ey),
                                     grid.node_index(ex + 1, ey + 1), grid.node_index(ex, ey + 1)})
                    if (grid2mesh[gn] < 0) grid2mesh[gn] = counter++;
            }
        }
        for (int gn : ports->fixed_port_grid_nodes)
            if (grid2mesh[gn] >= 0) mesh.fixed_port_nodes.push_back(grid2mesh[gn]);
        for (int gn : ports->input_port_grid_nodes)
            if (grid2mesh[gn] >= 0) mesh.input_port_nodes.push_back(grid2mesh[gn]);
        if (mesh.fixed_port_nodes.empty())
            throw InfeasibleDesign("mesh_from_density: no material at the fixed port");
    }
    mesh.validate();
    return mesh;
}

bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon) {
    // crossing number over the closed polygon
    bool inside = false;
    const size_t n = polygon.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = polygon[i];
        const auto& b = polygon[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x_cross = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (p.x() < x_cross) inside = !inside;
        }
    }
    return inside;
}

BodyMesh mesh_from_polygon(const std::vector<Eigen::Vector2d>& polygon, double cell_mm) {
    if (polygon.size() < 3) throw StructuralError("mesh_from_polygon: need >= 3 vertices");
    if (!(cell_mm > 0.0)) throw StructuralError("mesh_from_polygon: cell size must be > 0");

    Eigen::AlignedBox2d box;
    for (const auto& p : polygon) box.extend(p);
    const int nx = std::max(1, static_cast<int>(std::ceil(box.sizes().x() / cell_mm)));
    const int ny = std::max(1, static_cast<int>(std::ceil(box.sizes().y() / cell_mm)));
    GridSpec grid{nx, ny, cell_mm};

    std::vector<uint8_t> solid(grid.elem_count(), 0);
    const Eigen::Vector2d origin = box.min();
    for (int ex = 0; ex < nx; ++ex) {
        for (int ey = 0; ey < ny; ++ey) {
            const Eigen::Vector2d center = origin + Eigen::Vector2d{(ex + 0.5) * cell_mm,
                                                                    (ey + 0.5) * cell_mm};
            if (point_in_polygon(center, polygon)) solid[grid.elem_index(ex, ey)] = 1;
        }
    }
    const auto keep = largest_component(solid, grid);
    if (std::find(keep.begin(), keep.end(), uint8_t{1}) == keep.end())
        throw StructuralError("mesh_from_polygon: polygon rasterized to nothing");
    BodyMesh mesh = mesh_cells(keep, grid, BodyRole::Object);
    for (auto& p : mesh.nodes) p += origin;
    mesh.validate();
    return mesh;
}

}  // namespace simto
