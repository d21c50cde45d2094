#include "simto/loop.hpp"

#include <chrono>
#include <cmath>

#include "simto/extract.hpp"
#include "simto/mesh.hpp"

namespace simto {

bool converged(const DensityField& rho_prev, const DensityField& rho_next, double epsilon) {
    if (rho_prev.size() != rho_next.size())
        throw StructuralError("converged: design sizes differ");
    const Eigen::ArrayXd d = rho_next.values - rho_prev.values;
    return (d * d * d * d).sum() < epsilon;
}

FeasibilityReport feasible(const DensityField& rho, const DesignDomain& domain) {
    FeasibilityReport report;
    const GridSpec& grid = rho.grid;
    const auto solid = solid_mask(rho, 0.5);
    const int n_solid = static_cast<int>(std::count(solid.begin(), solid.end(), uint8_t{1}));
    if (n_solid == 0) {
        report.ok = false;
        report.reasons.push_back("no material");
        return report;
    }
    const auto main_component = largest_component(solid, grid);
    const int n_main = static_cast<int>(
        std::count(main_component.begin(), main_component.end(), uint8_t{1}));
    if (n_main != n_solid) {
        report.ok = false;
        report.reasons.push_back("disconnected");
    }

    std::vector<uint8_t> is_port_node(grid.node_count(), 0);
    for (int n : domain.fixed_port_nodes()) is_port_node[n] = 1;
    bool touches = false;
    for (int ex = 0; ex < grid.nelx && !touches; ++ex)
        for (int ey = 0; ey < grid.nely && !touches; ++ey) {
            if (!main_component[grid.elem_index(ex, ey)]) continue;
            for (int n : grid.elem_nodes(ex, ey))
                if (is_port_node[n]) {
                    touches = true;
                    break;
                }
        }
    if (!touches) {
        report.ok = false;
        report.reasons.push_back("no material at fixed port");
    }
    return report;
}

RunResult run(const DesignDomain& domain, const BodyMesh& object, const SimConfig& sim_config,
              const TopOptConfig& topopt_config, const LoopConfig& loop_config,
              const Pose& pose_g, const Pose& pose_o, const RecordSink& sink,
              std::uint64_t config_hash) {
    domain.validate();
    sim_config.validate();
    topopt_config.validate(domain.grid);
    loop_config.validate();

    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - t_start).count();
    };

    PortLayout ports{domain.fixed_port_nodes(), domain.input_port_nodes()};

    RunResult result;
    auto emit = [&](RunRecord& rec) {
        rec.config_hash = config_hash;
        rec.seed = sim_config.seed;
        rec.wall_time_s = elapsed();
        if (sink) sink(rec);
    };

    // iteration 0: the full design domain is the initial simulated design
    {
        RunRecord seed;
        seed.iteration = 0;
        seed.design = DensityField::uniform(domain.grid, 1.0);
        seed.is_feasible = true;
        result.records.push_back(seed);
        emit(result.records.back());
    }

    for (int k = 1; k <= loop_config.max_simto_iterations; ++k) {
        RunRecord& prev = result.records.back();
        SimTrace trace;
        BodyMesh finger;
        try {
            finger = mesh_from_density(prev.design, 0.5, &ports);
            trace = simulate(finger, object, pose_g, pose_o, sim_config);
            const GraspOutcome outcome = grasp_outcome(trace);
            prev.simulated = true;
            prev.grasp_success = outcome.success;
            prev.lift_time = outcome.lift_time;
            prev.peak_stress = outcome.peak_stress;
            emit(prev);
        } catch (const InfeasibleDesign& e) {
            result.termination = std::string("error: ") + e.what();
            return result;
        } catch (const NumericalError& e) {
            result.termination = std::string("error: ") + e.what();
            return result;
        }

        ContactLoadSet loads;
        try {
            loads = extract(trace, finger.nodes);
        } catch (const EmptyLoadSet&) {
            result.termination = "empty-loads";
            return result;
        }

        RunRecord rec;
        rec.iteration = k;
        try {
            const DensityField rho0 =
                DensityField::uniform(domain.grid, domain.volume_fraction);
            const OptimizeResult opt = optimize(domain, loads, topopt_config, rho0);
            rec.design = opt.design;
            rec.loads = loads;
            if (!opt.log.empty()) rec.objective = opt.log.back().objective;
        } catch (const SimtoError& e) {
            result.termination = std::string("error: ") + e.what();
            return result;
        }

        if (loop_config.feasibility_checks) {
            const FeasibilityReport rep = feasible(rec.design, domain);
            rec.is_feasible = rep.ok;
            rec.infeasibility_reasons = rep.reasons;
        }
        rec.converged_with_previous = converged(prev.design, rec.design, loop_config.epsilon);
        result.records.push_back(rec);
        emit(result.records.back());

        if (!rec.is_feasible) {
            result.termination = "infeasible";
            return result;
        }
        if (rec.converged_with_previous) {
            result.termination = "converged";
            return result;
        }
    }
    result.termination = "iteration-cap";
    return result;
}

}  // namespace simto
