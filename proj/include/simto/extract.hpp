#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "simto/loads.hpp"
#include "simto/sim.hpp"

namespace simto {

// Proper rotation mapping the deformed frame onto the reference frame,
// dimension-general (2x2 or 3x3).
struct FrameAlignment {
    Eigen::MatrixXd rotation;
    double rmsd = 0.0;
};

FrameAlignment kabsch(const std::vector<Eigen::Vector2d>& deformed,
                      const std::vector<Eigen::Vector2d>& reference);
FrameAlignment kabsch(const std::vector<Eigen::Vector3d>& deformed,
                      const std::vector<Eigen::Vector3d>& reference);

// Keep a contact force iff it presses on the object (f.y < 0 in the reference
// frame) and resists slip (f.x > 0). Works on 2D or 3D vectors through the
// first two components.
bool keep_rule(const Eigen::Vector2d& force_in_R);
bool keep_rule(const Eigen::Vector3d& force_in_R);

// Strongest-force-per-gripper-node record. Entries are stored 3D so the
// reduction stays dimension-general; 2D data carries z = 0.
struct RawForceEntry {
    Eigen::Vector3d point{0.0, 0.0, 0.0};  // reference-frame contact point, mm
    Eigen::Vector3d force{0.0, 0.0, 0.0};
    double magnitude = 0.0;
};

struct RawForceSet {
    std::map<int, RawForceEntry> entries;  // keyed by gripper node id

    int size() const { return static_cast<int>(entries.size()); }
    bool empty() const { return entries.empty(); }
};

// Inserts the candidate, or replaces the stored entry only when the new
// magnitude is strictly larger. The candidate must already satisfy keep_rule.
void update_raw_set(RawForceSet& set, int node_id, const Eigen::Vector3d& point,
                    const Eigen::Vector3d& force);

// Round contact points to the nearest millimetre, group by rounded (x, y),
// average each group's force vectors, zero the out-of-plane component and emit
// one load per group. Groups averaging to zero are dropped with a warning.
ContactLoadSet reduce(const RawForceSet& raw, std::vector<std::string>* warnings = nullptr);

struct ExtractOptions {
    bool use_both_fingers = true;  // mirror the right finger's data into the design frame
    std::vector<std::string>* warnings = nullptr;
};

// Full extraction pipeline over a trace: per timestep, align the finger's
// deformed nodes to the reference with Kabsch, rotate the recorded forces
// into the reference frame, filter with keep_rule and update the raw set by
// magnitude; finally reduce. Contact points are taken at the gripper node's
// undeformed position. Throws EmptyLoadSet when nothing survives.
ContactLoadSet extract(const SimTrace& trace, const std::vector<Eigen::Vector2d>& reference_nodes,
                       const ExtractOptions& options = {});

}  // namespace simto
