#pragma once

#include <string>
#include <vector>

#include "simto/loop.hpp"
#include "simto/sim.hpp"
#include "simto/topopt.hpp"

namespace simto {

// Evaluation-protocol overrides applied on top of the sim section: grasps
// last 8 s with the full 80 mm compression and a 40 mm lift.
struct EvalSettings {
    int seeds = 5;
    double t = 8.0;
    double d_c = 80.0;
    double d_l = 40.0;
};

struct SweepGrid {
    std::vector<double> moduli_g;  // Pa
    std::vector<double> moduli_o;  // Pa
    std::vector<double> volume_fractions;
    std::vector<std::string> objects;  // polygon files

    static SweepGrid defaults() {
        SweepGrid g;
        g.moduli_g = {0.46e6, 0.60e6, 1.39e6, 11.51e6};
        g.moduli_o = {0.46e6, 0.60e6, 1.39e6, 11.51e6};
        g.volume_fractions = {0.20, 0.25, 0.30, 0.35};
        return g;
    }

    void validate() const {
        if (moduli_g.empty() || moduli_o.empty() || volume_fractions.empty())
            throw StructuralError("SweepGrid: all parameter lists must be nonempty");
    }

    int cells_per_object() const {
        return static_cast<int>(moduli_g.size() * moduli_o.size() * volume_fractions.size());
    }
};

struct RunConfig {
    DesignDomain domain;
    TopOptConfig topopt;
    SimConfig sim;
    LoopConfig loop;
    SweepGrid sweep = SweepGrid::defaults();
    EvalSettings evaluate;
    Pose pose_g, pose_o;

    // sim settings with the evaluation-protocol overrides applied
    SimConfig eval_sim() const {
        SimConfig cfg = sim;
        cfg.t = evaluate.t;
        cfg.d_c = evaluate.d_c;
        cfg.d_l = evaluate.d_l;
        cfg.N_t = 0;
        return cfg;
    }
};

}  // namespace simto
