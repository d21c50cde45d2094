#include "simto/extract.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "simto/errors.hpp"

namespace simto {

namespace {

FrameAlignment kabsch_impl(const Eigen::MatrixXd& deformed, const Eigen::MatrixXd& reference) {
    const int dim = static_cast<int>(deformed.rows());
    const int n = static_cast<int>(deformed.cols());
    if (n != reference.cols()) throw StructuralError("kabsch: point counts differ");
    if (n < dim) throw StructuralError("kabsch: not enough points");

    const Eigen::VectorXd cd = deformed.rowwise().mean();
    const Eigen::VectorXd cr = reference.rowwise().mean();
    const Eigen::MatrixXd D = deformed.colwise() - cd;
    const Eigen::MatrixXd R = reference.colwise() - cr;

    const Eigen::MatrixXd H = D * R.transpose();  // covariance, deformed -> reference
    if (H.norm() < 1e-15) throw StructuralError("kabsch: degenerate configuration");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd U = svd.matrixU();
    Eigen::MatrixXd V = svd.matrixV();
    Eigen::MatrixXd rot = V * U.transpose();
    if (rot.determinant() < 0.0) {
        V.col(dim - 1) *= -1.0;  // reflection correction
        rot = V * U.transpose();
    }

    FrameAlignment out;
    out.rotation = rot;
    out.rmsd = std::sqrt((rot * D - R).squaredNorm() / n);
    return out;
}

}  // namespace

FrameAlignment kabsch(const std::vector<Eigen::Vector2d>& deformed,
                      const std::vector<Eigen::Vector2d>& reference) {
    Eigen::MatrixXd d(2, deformed.size()), r(2, reference.size());
    for (size_t i = 0; i < deformed.size(); ++i) d.col(i) = deformed[i];
    for (size_t i = 0; i < reference.size(); ++i) r.col(i) = reference[i];
    return kabsch_impl(d, r);
}

FrameAlignment kabsch(const std::vector<Eigen::Vector3d>& deformed,
                      const std::vector<Eigen::Vector3d>& reference) {
    Eigen::MatrixXd d(3, deformed.size()), r(3, reference.size());
    for (size_t i = 0; i < deformed.size(); ++i) d.col(i) = deformed[i];
    for (size_t i = 0; i < reference.size(); ++i) r.col(i) = reference[i];
    return kabsch_impl(d, r);
}

bool keep_rule(const Eigen::Vector2d& f) { return f.y() < 0.0 && f.x() > 0.0; }
bool keep_rule(const Eigen::Vector3d& f) { return f.y() < 0.0 && f.x() > 0.0; }

void update_raw_set(RawForceSet& set, int node_id, const Eigen::Vector3d& point,
                    const Eigen::Vector3d& force) {
    const double mag = force.norm();
    auto it = set.entries.find(node_id);
    if (it == set.entries.end()) {
        set.entries.emplace(node_id, RawForceEntry{point, force, mag});
        return;
    }
    if (mag > it->second.magnitude) it->second = RawForceEntry{point, force, mag};
}

ContactLoadSet reduce(const RawForceSet& raw, std::vector<std::string>* warnings) {
    if (raw.empty()) throw StructuralError("reduce: empty raw force set");
    struct Group {
        Eigen::Vector3d force_sum{0.0, 0.0, 0.0};
        int count = 0;
    };
    std::map<std::pair<long, long>, Group> groups;
    for (const auto& [node, entry] : raw.entries) {
        const long gx = std::lround(entry.point.x());
        const long gy = std::lround(entry.point.y());
        auto& g = groups[{gx, gy}];
        g.force_sum += entry.force;
        g.count += 1;
    }
    ContactLoadSet out;
    for (const auto& [key, g] : groups) {
        Eigen::Vector3d avg = g.force_sum / g.count;
        avg.z() = 0.0;
        const double w = avg.head<2>().norm();
        if (!(w > 0.0)) {
            if (warnings)
                warnings->push_back("reduce: load group at (" + std::to_string(key.first) + "," +
                                    std::to_string(key.second) + ") averaged to zero, dropped");
            continue;
        }
        LoadCase lc;
        lc.position = Eigen::Vector2d(static_cast<double>(key.first),
                                      static_cast<double>(key.second));
        lc.force = avg.head<2>();
        lc.weight = w;
        out.loads.push_back(lc);
    }
    return out;
}

ContactLoadSet extract(const SimTrace& trace, const std::vector<Eigen::Vector2d>& reference_nodes,
                       const ExtractOptions& options) {
    if (trace.steps.empty()) throw StructuralError("extract: empty trace");
    if (reference_nodes.size() != trace.left_reference.size() && !trace.left_reference.empty())
        throw StructuralError("extract: reference node count mismatch");

    RawForceSet raw;
    for (const auto& step : trace.steps) {
        if (step.contacts.empty()) continue;
        bool has_left = false, has_right = false;
        for (const auto& ev : step.contacts) {
            if (ev.finger == 0) has_left = true;
            if (ev.finger == 1) has_right = true;
        }
        FrameAlignment align_left, align_right;
        if (has_left) {
            if (step.pos_left.empty())
                throw StructuralError("extract: trace lacks finger positions");
            align_left = kabsch(step.pos_left, reference_nodes);
        }
        if (has_right && options.use_both_fingers) {
            std::vector<Eigen::Vector2d> mirrored(step.pos_right.size());
            for (size_t i = 0; i < step.pos_right.size(); ++i)
                mirrored[i] = Eigen::Vector2d(2.0 * trace.mirror_x - step.pos_right[i].x(),
                                              step.pos_right[i].y());
            align_right = kabsch(mirrored, reference_nodes);
        }
        for (const auto& ev : step.contacts) {
            Eigen::Vector2d f_world = ev.force;
            const FrameAlignment* align = nullptr;
            if (ev.finger == 0) {
                align = &align_left;
            } else {
                if (!options.use_both_fingers) continue;
                f_world.x() = -f_world.x();  // mirror into the left finger's frame
                align = &align_right;
            }
            const Eigen::Vector2d f_ref = align->rotation * f_world;
            if (!keep_rule(f_ref)) continue;
            // contact point at the node's undeformed design-frame position
            const Eigen::Vector2d p_ref = reference_nodes[ev.node];
            update_raw_set(raw, ev.node, Eigen::Vector3d(p_ref.x(), p_ref.y(), 0.0),
                           Eigen::Vector3d(f_ref.x(), f_ref.y(), 0.0));
        }
    }
    if (raw.empty()) throw EmptyLoadSet("extract: no contact force survived filtering");
    return reduce(raw, options.warnings);
}

}  // namespace simto
