#include "simto/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <thread>

#include "simto/io.hpp"
#include "simto/parallel.hpp"

namespace simto {

using nlohmann::json;

namespace {

std::string fmt_mpa(double pa) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", pa * 1e-6);
    return buf;
}

std::string fmt_vf(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string object_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

}  // namespace

std::vector<SweepCell> plan_sweep(const RunConfig& config) {
    config.sweep.validate();
    if (config.sweep.objects.empty())
        throw StructuralError("sweep: no objects configured");
    std::vector<SweepCell> cells;
    for (const auto& obj : config.sweep.objects)
        for (double eg : config.sweep.moduli_g)
            for (double eo : config.sweep.moduli_o)
                for (double vf : config.sweep.volume_fractions) {
                    SweepCell c{obj, eg, eo, vf, {}};
                    c.run_id = object_stem(obj) + "_Eg" + fmt_mpa(eg) + "_Eo" + fmt_mpa(eo) +
                               "_vf" + fmt_vf(vf);
                    cells.push_back(std::move(c));
                }
    return cells;
}

SweepSummary execute_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
                           int workers, bool dry_run, std::ostream* log) {
    const std::vector<SweepCell> cells = plan_sweep(config);
    SweepSummary summary;
    summary.planned = static_cast<int>(cells.size());

    if (dry_run) {
        if (log) {
            for (const auto& c : cells) *log << "planned " << c.run_id << '\n';
            *log << "total " << cells.size() << " cells ("
                 << config.sweep.cells_per_object() << " per object)\n";
        }
        return summary;
    }
    std::filesystem::create_directories(out_dir);

    // object meshes are shared across cells
    std::map<std::string, BodyMesh> meshes;
    for (const auto& obj : config.sweep.objects)
        if (!meshes.count(obj))
            meshes.emplace(obj,
                           mesh_from_polygon(read_polygon(obj), config.sim.object_cell_mm));

    std::mutex log_mutex;
    std::atomic<size_t> cursor{0};
    auto run_cell = [&](const SweepCell& cell) {
        const auto run_dir = out_dir / ("run_" + cell.run_id);
        if (run_is_complete(run_dir)) {
            std::lock_guard<std::mutex> lk(log_mutex);
            ++summary.skipped;
            if (log) *log << "skip " << cell.run_id << " (complete)\n";
            return;
        }
        RunConfig cell_cfg = config;
        cell_cfg.sim.E_g = cell.E_g;
        cell_cfg.sim.E_o = cell.E_o;
        cell_cfg.domain.volume_fraction = cell.v_f;
        try {
            RunWriter writer(run_dir, cell_cfg);
            const RunResult result =
                run(cell_cfg.domain, meshes.at(cell.object), cell_cfg.sim, cell_cfg.topopt,
                    cell_cfg.loop, cell_cfg.pose_g, cell_cfg.pose_o, std::ref(writer),
                    config_hash(cell_cfg));
            int feas = 0, infeas = 0;
            for (const auto& rec : result.records) {
                if (rec.iteration == 0) continue;
                rec.is_feasible ? ++feas : ++infeas;
            }
            const bool aborted = result.termination.rfind("error", 0) == 0 ||
                                 result.termination == "empty-loads";
            const int errored = aborted ? 1 : 0;
            write_status_json(run_dir, "done", result.termination, feas, infeas, errored,
                              feas + infeas + errored);
            std::lock_guard<std::mutex> lk(log_mutex);
            ++summary.executed;
            summary.designs_feasible += feas;
            summary.designs_infeasible += infeas;
            summary.designs_errored += errored;
            summary.attempted_iterations += feas + infeas + errored;
            if (log) *log << "done " << cell.run_id << " (" << result.termination << ")\n";
        } catch (const std::exception& e) {
            std::error_code ec;
            std::filesystem::create_directories(run_dir, ec);
            try {
                write_status_json(run_dir, "error", e.what(), 0, 0, 1, 1);
            } catch (...) {
            }
            std::lock_guard<std::mutex> lk(log_mutex);
            ++summary.failed;
            if (log) *log << "fail " << cell.run_id << ": " << e.what() << '\n';
        }
    };

    int n_workers = workers > 0 ? workers : thread_cap();
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(cells.size())));
    if (n_workers == 1) {
        for (const auto& c : cells) run_cell(c);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const size_t i = cursor.fetch_add(1);
                    if (i >= cells.size()) break;
                    run_cell(cells[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    // deterministic manifest: grid, objects and per-cell status
    json manifest;
    manifest["moduli_g"] = config.sweep.moduli_g;
    manifest["moduli_o"] = config.sweep.moduli_o;
    manifest["volume_fractions"] = config.sweep.volume_fractions;
    manifest["objects"] = config.sweep.objects;
    manifest["seed"] = config.sim.seed;
    json cells_json = json::array();
    for (const auto& c : cells) {
        std::string state = "missing";
        const auto status_path = out_dir / ("run_" + c.run_id) / "status.json";
        if (std::filesystem::exists(status_path)) {
            try {
                std::ifstream in(status_path);
                state = json::parse(in).value("state", "unknown");
            } catch (...) {
                state = "corrupt";
            }
        }
        cells_json.push_back({{"run_id", c.run_id},
                              {"object", c.object},
                              {"E_g", c.E_g},
                              {"E_o", c.E_o},
                              {"v_f", c.v_f},
                              {"state", state}});
    }
    manifest["cells"] = std::move(cells_json);
    std::ofstream out(out_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    return summary;
}

AggregateResult aggregate(const std::filesystem::path& sweep_dir) {
    AggregateResult agg;
    std::vector<std::filesystem::path> run_dirs;
    if (!std::filesystem::is_directory(sweep_dir))
        throw StructuralError("aggregate: not a directory: " + sweep_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(sweep_dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("run_", 0) == 0)
            run_dirs.push_back(entry.path());
    std::sort(run_dirs.begin(), run_dirs.end());
    if (run_dirs.empty()) throw StructuralError("aggregate: no run directories found");

    struct Loaded {
        std::string object, run_id;
        int iteration;
        double v_f, E_g, E_o, lift_time;
        DensityField design;
    };
    std::vector<Loaded> designs;

    for (const auto& run_dir : run_dirs) {
        const std::string run_id = run_dir.filename().string().substr(4);
        double eg = 0.0, eo = 0.0, vf = 0.0;
        std::string object = "unknown";
        try {
            const RunConfig cfg = load_config(run_dir / "config.json");
            eg = cfg.sim.E_g;
            eo = cfg.sim.E_o;
            vf = cfg.domain.volume_fraction;
        } catch (const std::exception& e) {
            agg.warnings.push_back("skipping " + run_id + ": " + e.what());
            continue;
        }
        object = run_id.substr(0, run_id.find("_Eg"));

        if (std::filesystem::exists(run_dir / "status.json")) {
            try {
                std::ifstream in(run_dir / "status.json");
                const json st = json::parse(in);
                agg.errored += st.value("errored", 0);
            } catch (...) {
                agg.warnings.push_back("corrupt status.json in " + run_id);
            }
        }

        std::vector<std::filesystem::path> iter_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(run_dir))
            if (entry.is_directory() && entry.path().filename().string().rfind("iter_", 0) == 0)
                iter_dirs.push_back(entry.path());
        std::sort(iter_dirs.begin(), iter_dirs.end(), [](const auto& a, const auto& b) {
            return std::stoi(a.filename().string().substr(5)) <
                   std::stoi(b.filename().string().substr(5));
        });
        for (const auto& iter_dir : iter_dirs) {
            const int iteration = std::stoi(iter_dir.filename().string().substr(5));
            if (iteration == 0) continue;  // the seed design is the raw domain
            RunRecord rec;
            try {
                rec = read_record_json(iter_dir / "record.json");
            } catch (const std::exception& e) {
                agg.warnings.push_back("corrupt record in " + run_id + "/" +
                                       iter_dir.filename().string() + ": " + e.what());
                continue;
            }
            rec.is_feasible ? ++agg.feasible : ++agg.infeasible;
            if (!rec.is_feasible || !rec.simulated) continue;
            try {
                Loaded l{object, run_id,  iteration, vf, eg, eo, rec.lift_time,
                         read_design_csv(iter_dir / "design.csv")};
                designs.push_back(std::move(l));
            } catch (const std::exception& e) {
                agg.warnings.push_back("unreadable design in " + run_id + ": " + e.what());
            }
        }
    }
    agg.attempted = agg.feasible + agg.infeasible + agg.errored;

    // group by object, compute diversity and the Pareto front per group
    std::map<std::string, std::vector<int>> by_object;
    for (int i = 0; i < static_cast<int>(designs.size()); ++i)
        by_object[designs[i].object].push_back(i);
    for (const auto& [object, idxs] : by_object) {
        DesignPopulation pop;
        pop.grid = designs[idxs.front()].design.grid;
        for (int i : idxs) {
            pop.designs.push_back(designs[i].design);
            pop.meta.push_back({designs[i].run_id, designs[i].iteration, designs[i].v_f,
                                designs[i].E_g, designs[i].E_o, designs[i].lift_time});
        }
        const Eigen::ArrayXd div = diversity(pop);
        std::vector<std::array<double, 2>> points(idxs.size());
        for (size_t k = 0; k < idxs.size(); ++k)
            points[k] = {div[static_cast<int>(k)], designs[idxs[k]].lift_time};
        const std::vector<int> front = pareto_front(points);
        std::vector<uint8_t> on_front(idxs.size(), 0);
        for (int f : front) on_front[f] = 1;
        for (size_t k = 0; k < idxs.size(); ++k) {
            const Loaded& l = designs[idxs[k]];
            agg.rows.push_back({l.object, l.run_id, l.iteration, l.v_f, l.E_g, l.E_o,
                                div[static_cast<int>(k)], l.lift_time, on_front[k] != 0});
        }
        agg.populations.emplace(object, std::move(pop));
    }
    return agg;
}

namespace {

void write_rows(const std::filesystem::path& path, const AggregateResult& agg, bool front_only) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot open for writing: " + path.string());
    out << "object,run_id,iteration,v_f,E_g,E_o,diversity,lift_time,on_front\n";
    for (const auto& r : agg.rows) {
        if (front_only && !r.on_front) continue;
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.4f,%.0f,%.0f,%.6f,%.6f,%d", r.object.c_str(),
                      r.run_id.c_str(), r.iteration, r.v_f, r.E_g, r.E_o, r.diversity,
                      r.lift_time, r.on_front ? 1 : 0);
        out << buf << '\n';
    }
}

}  // namespace

void write_population_csv(const std::filesystem::path& path, const AggregateResult& agg) {
    write_rows(path, agg, false);
}

void write_pareto_csv(const std::filesystem::path& path, const AggregateResult& agg) {
    write_rows(path, agg, true);
}

}  // namespace simto
