#include "simto/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "simto/mesh.hpp"
#include "simto/parallel.hpp"

namespace simto {

Eigen::ArrayXd diversity(const DesignPopulation& population) {
    if (population.designs.empty()) throw StructuralError("diversity: empty population");
    const int k = population.size();
    const int n = population.designs[0].size();
    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(n);
    for (const auto& d : population.designs) {
        if (d.size() != n) throw StructuralError("diversity: design sizes differ");
        mean += d.values;
    }
    mean /= k;
    Eigen::ArrayXd out(k);
    for (int i = 0; i < k; ++i)
        out[i] = std::sqrt((population.designs[i].values - mean).square().sum());
    return out;
}

std::vector<int> pareto_front(const std::vector<std::array<double, 2>>& points) {
    if (points.empty()) throw StructuralError("pareto_front: empty point set");
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[a][0] != points[b][0]) return points[a][0] > points[b][0];
        return points[a][1] > points[b][1];
    });

    std::vector<int> front;
    double best_y = -std::numeric_limits<double>::infinity();
    size_t i = 0;
    while (i < order.size()) {
        // process all points sharing this x together
        size_t j = i;
        double group_max_y = -std::numeric_limits<double>::infinity();
        while (j < order.size() && points[order[j]][0] == points[order[i]][0]) {
            group_max_y = std::max(group_max_y, points[order[j]][1]);
            ++j;
        }
        if (group_max_y > best_y) {
            for (size_t q = i; q < j; ++q)
                if (points[order[q]][1] == group_max_y) front.push_back(order[q]);
            best_y = group_max_y;
        }
        i = j;
    }
    std::sort(front.begin(), front.end());
    return front;
}

std::vector<Pose> evaluation_poses() {
    return {Pose{0.0, {0.0, 0.0}},  Pose{5.0, {0.0, 0.0}},  Pose{10.0, {0.0, 0.0}},
            Pose{0.0, {6.0, 0.0}},  Pose{0.0, {12.0, 0.0}}, Pose{0.0, {0.0, 8.0}},
            Pose{0.0, {0.0, 16.0}}};
}

EvalReport evaluation_protocol(const DensityField& design, const DesignDomain& domain,
                               const std::vector<std::pair<std::string, BodyMesh>>& objects,
                               const SimConfig& sim_config, int in_domain, int n_seeds,
                               const std::vector<Pose>* poses_override) {
    if (objects.empty()) throw StructuralError("evaluation_protocol: no objects");
    if (in_domain < 0 || in_domain >= static_cast<int>(objects.size()))
        throw StructuralError("evaluation_protocol: bad in-domain index");
    if (n_seeds < 1) throw StructuralError("evaluation_protocol: need >= 1 seed");

    PortLayout ports{domain.fixed_port_nodes(), domain.input_port_nodes()};
    const BodyMesh finger = mesh_from_density(design, 0.5, &ports);
    const std::vector<Pose> poses = poses_override ? *poses_override : evaluation_poses();

    struct Task {
        int object, pose, seed;
    };
    std::vector<Task> tasks;
    for (int o = 0; o < static_cast<int>(objects.size()); ++o)
        for (int p = 0; p < static_cast<int>(poses.size()); ++p)
            for (int s = 0; s < n_seeds; ++s) tasks.push_back({o, p, s});

    std::vector<GraspTrial> trials(tasks.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const size_t idx = cursor.fetch_add(1);
            if (idx >= tasks.size()) break;
            const Task& tk = tasks[idx];
            GraspTrial trial;
            trial.object = tk.object;
            trial.pose = tk.pose;
            trial.seed = tk.seed;
            SimConfig cfg = sim_config;
            cfg.seed = sim_config.seed + static_cast<std::uint64_t>(tk.seed) + 1;
            try {
                const SimTrace trace =
                    simulate(finger, objects[tk.object].second, Pose{}, poses[tk.pose], cfg);
                const GraspOutcome outcome = grasp_outcome(trace);
                trial.success = outcome.success;
                trial.lift_time = outcome.lift_time;
                trial.peak_stress = outcome.peak_stress;
            } catch (const SimtoError&) {
                trial.error = true;
                trial.success = false;
            }
            trials[idx] = trial;
        }
    };
    const int n_workers = std::max(1, std::min<int>(thread_cap(), static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    report.trials = trials;
    int out_successes = 0, out_trials = 0;
    for (int o = 0; o < static_cast<int>(objects.size()); ++o) {
        EvalReport::PerObject po;
        po.name = objects[o].first;
        po.in_domain = o == in_domain;
        double sum = 0.0, sum2 = 0.0;
        int n_stress = 0;
        for (const auto& t : trials) {
            if (t.object != o) continue;
            ++po.trials;
            if (t.success) ++po.successes;
            if (!t.error) {
                sum += t.peak_stress;
                sum2 += t.peak_stress * t.peak_stress;
                ++n_stress;
            }
        }
        po.success_rate = po.trials > 0 ? static_cast<double>(po.successes) / po.trials : 0.0;
        if (n_stress > 0) {
            po.stress_mean = sum / n_stress;
            const double var = std::max(0.0, sum2 / n_stress - po.stress_mean * po.stress_mean);
            po.stress_std = std::sqrt(var);
        }
        if (po.in_domain) {
            report.in_domain_success = po.success_rate;
        } else {
            out_successes += po.successes;
            out_trials += po.trials;
        }
        report.per_object.push_back(po);
    }
    report.out_domain_trials = out_trials;
    report.out_domain_success =
        out_trials > 0 ? static_cast<double>(out_successes) / out_trials : 0.0;
    return report;
}

}  // namespace simto
