#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "simto/mesh.hpp"

namespace simto {

// Grasping simulation parameters. Internally the simulator works in the
// mm / N / s / tonne unit system (stresses in MPa); moduli and densities are
// given in SI here and converted on entry.
struct SimConfig {
    double E_g = 0.46e6;  // gripper modulus, Pa
    double E_o = 0.46e6;  // object modulus, Pa
    double nu_g = 0.4;
    double nu_o = 0.4;
    double d_c = 80.0;  // compression distance, mm
    double d_l = 30.0;  // lift distance, mm
    double t = 4.0;     // total duration, s
    int N_t = 0;        // timestep count; 0 -> smallest even count with step <= 2.5 ms
    double friction_mu = 0.5;
    double gravity = 9.81;             // m/s^2 along -y
    double material_density = 1000.0;  // kg/m^3
    double contact_stiffness = 0.0;    // Pa/mm penalty constant; <= 0 -> 50 * E_g per mm
    std::uint64_t seed = 0;            // drives the initial object-pose jitter

    // placement and integrator knobs
    double standoff = 2.0;           // mm gap between finger face and object at start
    double base_height = -3.0;       // world y of the finger port row
    double ground_y = 0.0;
    double rayleigh_beta = 2e-3;     // stiffness-proportional damping, s
    double friction_smooth_v = 1.0;  // mm/s tanh regularization of Coulomb friction
    int newton_max_iters = 20;
    double newton_rel_tol = 1e-6;
    double jitter_mm = 0.1;
    double object_cell_mm = 1.0;  // raster pitch when meshing object polygons
    bool record_positions = true;
    std::string constitutive = "corotational";

    int steps() const;
    double dt() const { return t / steps(); }
    void validate() const;
};

// Rigid placement perturbation: rotation about the out-of-plane axis through
// the body centroid, then translation.
struct Pose {
    double rotation_deg = 0.0;
    Eigen::Vector2d translation{0.0, 0.0};
};

struct ContactEvent {
    int finger = 0;  // 0 = left, 1 = right
    int node = -1;   // finger mesh node index
    Eigen::Vector2d point{0.0, 0.0};  // world
    Eigen::Vector2d force{0.0, 0.0};  // on the object, world frame, N
    double normal_mag = 0.0;
    double tangent_mag = 0.0;
    double depth = 0.0;  // penetration depth, mm
};

struct SimStep {
    double time = 0.0;
    std::vector<ContactEvent> contacts;  // gripper-object only
    bool object_grounded = false;
    double object_peak_vm = 0.0;  // MPa
    std::vector<Eigen::Vector2d> pos_left, pos_right, pos_object;
};

struct SimTrace {
    SimConfig config;
    double dt = 0.0;
    double mirror_x = 0.0;  // vertical mid-axis of the gripper
    std::vector<Eigen::Vector2d> left_reference;  // design-frame coords per left mesh node
    std::vector<double> object_node_mass;         // tonnes
    std::vector<SimStep> steps;
};

// Runs the two-finger squeeze-and-lift protocol: the right finger is the
// mirror of the left across the vertical mid-axis; input-port nodes advance
// 2 d_c / N_t per step toward the object during the first half, then every
// port node rises 2 d_l / N_t per step. Deformable bodies use corotational
// triangles under backward Euler; contacts are penalty forces with
// tanh-regularized Coulomb friction.
SimTrace simulate(const BodyMesh& left_finger, const BodyMesh& object, const Pose& pose_g,
                  const Pose& pose_o, const SimConfig& config);

struct GraspOutcome {
    bool success = false;
    double lift_time = 0.0;     // s
    double peak_stress = 0.0;   // Pa
};

// success = gripper contact and no ground contact at the final step;
// lift_time counts gripped-and-airborne steps.
GraspOutcome grasp_outcome(const SimTrace& trace);

}  // namespace simto
