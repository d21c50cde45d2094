#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "simto/sim.hpp"
#include "simto/topopt.hpp"

namespace simto {

struct LoopConfig {
    double epsilon = 10.0;          // threshold on sum (delta rho)^4
    int max_simto_iterations = 20;  // also the maximum number of simulate calls
    bool feasibility_checks = true;

    void validate() const {
        if (!(epsilon > 0.0)) throw StructuralError("LoopConfig: epsilon must be > 0");
        if (max_simto_iterations < 1)
            throw StructuralError("LoopConfig: max_simto_iterations must be >= 1");
    }
};

// sum_e (rho_next - rho_prev)^4 < epsilon
bool converged(const DensityField& rho_prev, const DensityField& rho_next, double epsilon);

struct FeasibilityReport {
    bool ok = true;
    std::vector<std::string> reasons;
};

// Feasible iff the thresholded solid set (rho >= 0.5) is a single 4-connected
// component with at least one element touching the fixed port.
FeasibilityReport feasible(const DensityField& rho, const DesignDomain& domain);

struct RunRecord {
    int iteration = 0;
    DensityField design;
    ContactLoadSet loads;  // loads that produced this design; empty for the seed
    bool is_feasible = true;
    std::vector<std::string> infeasibility_reasons;

    // grasp metrics of this design, filled once it has been simulated
    bool simulated = false;
    bool grasp_success = false;
    double lift_time = std::numeric_limits<double>::quiet_NaN();
    double peak_stress = std::numeric_limits<double>::quiet_NaN();

    double objective = std::numeric_limits<double>::quiet_NaN();
    bool converged_with_previous = false;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

struct RunResult {
    std::vector<RunRecord> records;  // index == iteration
    std::string termination;  // converged | iteration-cap | infeasible | empty-loads | error: ...
};

// Called whenever a record is created or updated (a design's grasp metrics
// only become known when the next iteration simulates it).
using RecordSink = std::function<void(const RunRecord&)>;

// The SimTO iteration: simulate the current design (iteration 0 is the
// all-solid design domain), extract contact loads, topology-optimize from a
// uniform v_f field, check feasibility and convergence, repeat. Sub-module
// errors terminate the run gracefully with the partial record list.
RunResult run(const DesignDomain& domain, const BodyMesh& object, const SimConfig& sim_config,
              const TopOptConfig& topopt_config, const LoopConfig& loop_config,
              const Pose& pose_g = {}, const Pose& pose_o = {}, const RecordSink& sink = {},
              std::uint64_t config_hash = 0);

}  // namespace simto
