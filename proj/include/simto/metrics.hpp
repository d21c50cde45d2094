#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "simto/loop.hpp"
#include "simto/sim.hpp"

namespace simto {

struct DesignMeta {
    std::string run_id;
    int iteration = 0;
    double v_f = 0.0, E_g = 0.0, E_o = 0.0;
    double lift_time = 0.0;
};

struct DesignPopulation {
    GridSpec grid;
    std::vector<DensityField> designs;
    std::vector<DesignMeta> meta;

    int size() const { return static_cast<int>(designs.size()); }
};

// D_i = || rho_i - mean(rho) || (Euclidean norm on raw density vectors).
Eigen::ArrayXd diversity(const DesignPopulation& population);

// Indices of non-dominated points when maximizing both coordinates; a point
// is dominated when another is >= in both and > in at least one.
std::vector<int> pareto_front(const std::vector<std::array<double, 2>>& points);

struct GraspTrial {
    int object = 0;
    int pose = 0;
    int seed = 0;
    bool success = false;
    bool error = false;  // simulation failure, counted as unsuccessful
    double lift_time = 0.0;
    double peak_stress = 0.0;  // Pa
};

struct EvalReport {
    struct PerObject {
        std::string name;
        int trials = 0;
        int successes = 0;
        double success_rate = 0.0;
        double stress_mean = 0.0;  // Pa, over trials that produced a stress
        double stress_std = 0.0;
        bool in_domain = false;
    };
    std::vector<GraspTrial> trials;  // ordered by (object, pose, seed)
    std::vector<PerObject> per_object;
    double in_domain_success = 0.0;
    double out_domain_success = 0.0;  // aggregate over all non-in-domain objects
    int out_domain_trials = 0;
};

// The seven evaluation poses: origin; 5 and 10 degree rotations; 6 and 12 mm
// x-translations; 8 and 16 mm y-translations.
std::vector<Pose> evaluation_poses();

// 7 poses x n_seeds grasps per object, run concurrently. objects[in_domain]
// is the object the design was optimized for; the remaining objects form the
// out-of-domain aggregate.
EvalReport evaluation_protocol(const DensityField& design, const DesignDomain& domain,
                               const std::vector<std::pair<std::string, BodyMesh>>& objects,
                               const SimConfig& sim_config, int in_domain = 0, int n_seeds = 5,
                               const std::vector<Pose>* poses_override = nullptr);

}  // namespace simto
