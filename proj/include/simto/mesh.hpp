#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "simto/grid.hpp"

namespace simto {

enum class BodyRole { GripperLeft, GripperRight, Object };

// Port node segments carried over from the design domain so meshed fingers
// know which nodes are kinematically driven.
struct PortLayout {
    std::vector<int> fixed_port_grid_nodes;
    std::vector<int> input_port_grid_nodes;
};

// Triangle mesh of one body in its local frame (mm). Triangles are positively
// oriented and the mesh is a single 4-connected component by construction.
struct BodyMesh {
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> triangles;
    BodyRole role = BodyRole::Object;

    // mesh-local indices of port nodes (fingers only)
    std::vector<int> fixed_port_nodes;
    std::vector<int> input_port_nodes;

    // boundary edges (a, b) with the interior on the left; outward normal is
    // (b-a) rotated by -90 degrees
    std::vector<std::array<int, 2>> boundary_edges;
    std::vector<int> boundary_nodes;

    void validate() const;
    double area() const;
    Eigen::Vector2d centroid() const;
    Eigen::AlignedBox2d bounding_box() const;
};

// Keeps elements with rho >= threshold, retains only the largest 4-connected
// component and splits every kept square into two triangles. Throws
// InfeasibleDesign when nothing is solid or, if ports are given, when the
// component has no node on the fixed port.
BodyMesh mesh_from_density(const DensityField& rho, double threshold = 0.5,
                           const PortLayout* ports = nullptr);

// Thresholded solid mask after the largest-component rule; exposed for the
// feasibility checks and tests.
std::vector<uint8_t> solid_mask(const DensityField& rho, double threshold);
std::vector<uint8_t> largest_component(const std::vector<uint8_t>& solid, const GridSpec& grid);

// Rasterize a counter-clockwise polygon (mm) onto a square grid of pitch
// cell_mm and mesh the largest component of inside cells.
BodyMesh mesh_from_polygon(const std::vector<Eigen::Vector2d>& polygon, double cell_mm = 1.0);

bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon);

}  // namespace simto
