// SimTO command-line interface: optimize, simulate, run, sweep, evaluate,
// pareto, render. Exit codes: 0 success, 1 usage error, 2 infeasible design,
// 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "simto/extract.hpp"
#include "simto/io.hpp"
#include "simto/loop.hpp"
#include "simto/metrics.hpp"
#include "simto/sweep.hpp"

namespace fs = std::filesystem;
using namespace simto;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--set", opts.overrides, "override config values, e.g. --set sim.d_c=32");
    cmd->add_option("--seed", opts.seed, "random seed (overrides sim.seed)");
}

RunConfig make_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? config_from_overrides(opts.overrides)
                                             : load_config(opts.config_path, opts.overrides);
    if (opts.seed >= 0) cfg.sim.seed = static_cast<std::uint64_t>(opts.seed);
    return cfg;
}

int run_optimize(const CommonOpts& opts, const std::string& loads_path, bool dummy_load,
                 const std::string& out_dir, int max_iters) {
    RunConfig cfg = make_config(opts);
    if (max_iters >= 0) cfg.topopt.max_iterations = max_iters;
    ContactLoadSet loads;
    if (dummy_load) {
        // baseline gripper benchmark: one unit load at the free corner of the
        // domain pointing along -y
        LoadCase lc;
        lc.position = {cfg.domain.grid.width(), 0.0};
        lc.force = {0.0, -1.0};
        lc.weight = 1.0;
        loads.loads.push_back(lc);
    } else {
        loads = read_loads_csv(loads_path);
    }
    const DensityField rho0 =
        DensityField::uniform(cfg.domain.grid, cfg.domain.volume_fraction);
    const OptimizeResult result = optimize(cfg.domain, loads, cfg.topopt, rho0);

    fs::create_directories(out_dir);
    write_design_csv(fs::path(out_dir) / "design.csv", result.design);
    write_design_pgm(fs::path(out_dir) / "design.pgm", result.design);
    write_iteration_log_csv(fs::path(out_dir) / "log.csv", result.log);
    std::cout << "optimize: " << result.log.size() << " iterations, objective "
              << (result.log.empty() ? 0.0 : result.log.back().objective) << ", volume "
              << result.design.mean() << "\n";
    return 0;
}

int run_simulate(const CommonOpts& opts, const std::string& design_path,
                 const std::string& object_path, const std::string& trace_path,
                 bool trace_positions) {
    RunConfig cfg = make_config(opts);
    const DensityField design =
        read_design_csv(design_path, cfg.domain.grid.element_size);
    PortLayout ports;
    {
        DesignDomain dom = cfg.domain;
        dom.grid = design.grid;
        ports.fixed_port_grid_nodes = dom.fixed_port_nodes();
        ports.input_port_grid_nodes = dom.input_port_nodes();
    }
    const BodyMesh finger = mesh_from_density(design, 0.5, &ports);
    const BodyMesh object =
        mesh_from_polygon(read_polygon(object_path), cfg.sim.object_cell_mm);
    const SimTrace trace = simulate(finger, object, cfg.pose_g, cfg.pose_o, cfg.sim);
    const GraspOutcome outcome = grasp_outcome(trace);
    if (!trace_path.empty()) write_trace_jsonl(trace_path, trace, trace_positions);
    nlohmann::json j{{"success", outcome.success},
                     {"lift_time", outcome.lift_time},
                     {"peak_stress", outcome.peak_stress}};
    std::cout << j.dump() << "\n";
    return 0;
}

int run_run(const CommonOpts& opts, const std::string& object_path, const std::string& out_dir) {
    RunConfig cfg = make_config(opts);
    const BodyMesh object =
        mesh_from_polygon(read_polygon(object_path), cfg.sim.object_cell_mm);
    RunWriter writer(out_dir, cfg);
    const RunResult result = run(cfg.domain, object, cfg.sim, cfg.topopt, cfg.loop, cfg.pose_g,
                                 cfg.pose_o, std::ref(writer), config_hash(cfg));
    int feas = 0, infeas = 0;
    for (const auto& rec : result.records) {
        if (rec.iteration == 0) continue;
        rec.is_feasible ? ++feas : ++infeas;
    }
    const bool aborted = result.termination.rfind("error", 0) == 0 ||
                         result.termination == "empty-loads";
    write_status_json(out_dir, "done", result.termination, feas, infeas, aborted ? 1 : 0,
                      feas + infeas + (aborted ? 1 : 0));
    std::cout << "run: " << result.records.size() << " records, termination "
              << result.termination << "\n";
    return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& out_dir, int workers, bool dry_run) {
    const RunConfig cfg = make_config(opts);
    const SweepSummary s = execute_sweep(cfg, out_dir, workers, dry_run, &std::cout);
    std::cout << "sweep: planned " << s.planned << ", executed " << s.executed << ", skipped "
              << s.skipped << ", failed " << s.failed << "; designs feasible "
              << s.designs_feasible << ", infeasible " << s.designs_infeasible << ", errored "
              << s.designs_errored << "\n";
    return 0;
}

int run_evaluate(const CommonOpts& opts, const std::string& design_path,
                 const std::vector<std::string>& object_paths, const std::string& out_dir,
                 int opt_iters) {
    RunConfig cfg = make_config(opts);
    const DensityField design =
        read_design_csv(design_path, cfg.domain.grid.element_size);
    DesignDomain dom = cfg.domain;
    dom.grid = design.grid;

    std::vector<std::pair<std::string, BodyMesh>> objects;
    for (const auto& path : object_paths)
        objects.emplace_back(fs::path(path).stem().string(),
                             mesh_from_polygon(read_polygon(path), cfg.sim.object_cell_mm));

    const EvalReport report = evaluation_protocol(design, dom, objects, cfg.eval_sim(), 0,
                                                  cfg.evaluate.seeds);

    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "results.csv");
        out << "object,design,E_g_opt,E_o_opt,v_f_opt,iters,stress_mean,stress_std,"
               "in_domain_success,out_domain_success\n";
        const auto& in_obj = report.per_object.front();
        char buf[512];
        std::snprintf(buf, sizeof(buf), "%s,%s,%.0f,%.0f,%.4f,%d,%.6g,%.6g,%.6f,%.6f",
                      in_obj.name.c_str(), fs::path(design_path).stem().string().c_str(),
                      cfg.sim.E_g, cfg.sim.E_o, cfg.domain.volume_fraction, opt_iters,
                      in_obj.stress_mean, in_obj.stress_std, report.in_domain_success,
                      report.out_domain_success);
        out << buf << '\n';
    }
    {
        std::ofstream out(fs::path(out_dir) / "trials.csv");
        out << "object,pose,seed,success,error,lift_time,peak_stress\n";
        for (const auto& t : report.trials)
            out << objects[t.object].first << ',' << t.pose << ',' << t.seed << ','
                << (t.success ? 1 : 0) << ',' << (t.error ? 1 : 0) << ',' << t.lift_time << ','
                << t.peak_stress << '\n';
    }
    nlohmann::json j{{"in_domain_success", report.in_domain_success},
                     {"out_domain_success", report.out_domain_success},
                     {"in_domain_trials", report.per_object.front().trials},
                     {"out_domain_trials", report.out_domain_trials}};
    std::cout << j.dump() << "\n";
    return 0;
}

int run_pareto(const std::string& points_path, const std::string& out_path) {
    std::ifstream in(points_path);
    if (!in) throw StructuralError("cannot open " + points_path);
    std::vector<std::array<double, 2>> points;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!points.empty() || (std::isdigit(line[0]) || line[0] == '-' || line[0] == '+')) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            points.push_back({std::stod(line.substr(0, comma)),
                              std::stod(line.substr(comma + 1))});
        }
    }
    const std::vector<int> front = pareto_front(points);
    for (int idx : front)
        std::cout << idx << ',' << points[idx][0] << ',' << points[idx][1] << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << "index,x,y\n";
        for (int idx : front) out << idx << ',' << points[idx][0] << ',' << points[idx][1] << '\n';
    }
    return 0;
}

int run_render(const CommonOpts& opts, const std::string& design_path, const std::string& pgm,
               const std::string& png, const std::string& sweep_dir, const std::string& scatter,
               const std::string& pareto_out) {
    RunConfig cfg = make_config(opts);
    if (!design_path.empty()) {
        const DensityField design =
            read_design_csv(design_path, cfg.domain.grid.element_size);
        if (!pgm.empty()) write_design_pgm(pgm, design);
        if (!png.empty()) write_design_png(png, design);
        if (pgm.empty() && png.empty())
            throw StructuralError("render: give --pgm and/or --png with --design");
    }
    if (!sweep_dir.empty()) {
        const AggregateResult agg = aggregate(sweep_dir);
        for (const auto& w : agg.warnings) std::cerr << "warning: " << w << "\n";
        if (!scatter.empty()) write_population_csv(scatter, agg);
        if (!pareto_out.empty()) write_pareto_csv(pareto_out, agg);
        std::cout << "render: " << agg.rows.size() << " designs aggregated (feasible "
                  << agg.feasible << ", infeasible " << agg.infeasible << ", errored "
                  << agg.errored << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SimTO: simulation-driven topology optimization of soft gripper fingers"};
    app.require_subcommand(1);

    CommonOpts opt_opts, sim_opts, run_opts, sweep_opts, eval_opts, render_opts;

    auto* c_opt = app.add_subcommand("optimize", "topology-optimize a design for a load set");
    add_common(c_opt, opt_opts);
    std::string loads_path, opt_out = "out";
    bool dummy_load = false;
    int max_iters = -1;
    c_opt->add_option("--loads", loads_path, "contact load CSV");
    c_opt->add_flag("--dummy-load", dummy_load, "use the single baseline corner load");
    c_opt->add_option("--out", opt_out, "output directory");
    c_opt->add_option("--max-iters", max_iters, "override topopt.max_iterations");

    auto* c_sim = app.add_subcommand("simulate", "run one grasp simulation on a design");
    add_common(c_sim, sim_opts);
    std::string sim_design, sim_object, sim_trace;
    bool sim_trace_positions = false;
    c_sim->add_option("--design", sim_design, "design CSV")->required();
    c_sim->add_option("--object", sim_object, "object polygon file")->required();
    c_sim->add_option("--trace", sim_trace, "write a JSON-lines trace");
    c_sim->add_flag("--trace-positions", sim_trace_positions, "include node positions");

    auto* c_run = app.add_subcommand("run", "run the full SimTO loop for one object");
    add_common(c_run, run_opts);
    std::string run_object, run_out = "run_out";
    c_run->add_option("--object", run_object, "object polygon file")->required();
    c_run->add_option("--out", run_out, "run directory");

    auto* c_sweep = app.add_subcommand("sweep", "parameter sweep over (E_g, E_o, v_f)");
    add_common(c_sweep, sweep_opts);
    std::string sweep_out = "sweep_out";
    int workers = 0;
    bool dry_run = false;
    c_sweep->add_option("--out", sweep_out, "sweep directory");
    c_sweep->add_option("--workers", workers, "worker count (default: hardware)");
    c_sweep->add_flag("--dry-run", dry_run, "print planned cells without running");

    auto* c_eval = app.add_subcommand("evaluate", "35-grasp evaluation protocol per object");
    add_common(c_eval, eval_opts);
    std::string eval_design, eval_out = "eval_out";
    std::vector<std::string> eval_objects;
    int opt_iters = 0;
    c_eval->add_option("--design", eval_design, "design CSV")->required();
    c_eval->add_option("--objects", eval_objects, "object polygons; first is in-domain")
        ->required()
        ->expected(-1);
    c_eval->add_option("--out", eval_out, "output directory");
    c_eval->add_option("--opt-iters", opt_iters, "SimTO iterations used to produce the design");

    auto* c_pareto = app.add_subcommand("pareto", "non-dominated front of a 2D point set");
    std::string pareto_points, pareto_out;
    c_pareto->add_option("--points", pareto_points, "CSV with x,y per line")->required();
    c_pareto->add_option("--out", pareto_out, "write the front as CSV");

    auto* c_render = app.add_subcommand("render", "density images and scatter data");
    add_common(c_render, render_opts);
    std::string render_design, render_pgm, render_png, render_sweep, render_scatter,
        render_pareto;
    c_render->add_option("--design", render_design, "design CSV");
    c_render->add_option("--pgm", render_pgm, "PGM output path");
    c_render->add_option("--png", render_png, "PNG output path");
    c_render->add_option("--sweep", render_sweep, "aggregate a sweep directory");
    c_render->add_option("--scatter", render_scatter, "diversity/lift-time scatter CSV");
    c_render->add_option("--pareto-out", render_pareto, "Pareto front CSV");

    try {
        app.parse(argc, argv);
        if (c_opt->parsed()) {
            if (!dummy_load && loads_path.empty())
                throw CLI::ValidationError("optimize", "either --loads or --dummy-load required");
            return run_optimize(opt_opts, loads_path, dummy_load, opt_out, max_iters);
        }
        if (c_sim->parsed())
            return run_simulate(sim_opts, sim_design, sim_object, sim_trace, sim_trace_positions);
        if (c_run->parsed()) return run_run(run_opts, run_object, run_out);
        if (c_sweep->parsed()) return run_sweep(sweep_opts, sweep_out, workers, dry_run);
        if (c_eval->parsed())
            return run_evaluate(eval_opts, eval_design, eval_objects, eval_out, opt_iters);
        if (c_pareto->parsed()) return run_pareto(pareto_points, pareto_out);
        if (c_render->parsed())
            return run_render(render_opts, render_design, render_pgm, render_png, render_sweep,
                              render_scatter, render_pareto);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const InfeasibleDesign& e) {
        std::cerr << "infeasible design: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
