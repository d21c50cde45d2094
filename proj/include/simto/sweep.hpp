#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "simto/config.hpp"
#include "simto/metrics.hpp"

namespace simto {

struct SweepCell {
    std::string object;  // polygon file
    double E_g = 0.0, E_o = 0.0;  // Pa
    double v_f = 0.0;
    std::string run_id;
};

std::vector<SweepCell> plan_sweep(const RunConfig& config);

struct SweepSummary {
    int planned = 0;
    int executed = 0;
    int skipped = 0;  // resumed runs
    int failed = 0;
    int designs_feasible = 0;
    int designs_infeasible = 0;
    int designs_errored = 0;
    int attempted_iterations = 0;
};

// One simto_loop run per grid cell per object, each isolated in its own
// run_<id> directory under out_dir. Completed runs (status.json state done)
// are skipped so a sweep can resume. Individual failures are recorded in the
// run's status and never abort the sweep.
SweepSummary execute_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
                           int workers = 0, bool dry_run = false, std::ostream* log = nullptr);

struct AggregateRow {
    std::string object;
    std::string run_id;
    int iteration = 0;
    double v_f = 0.0, E_g = 0.0, E_o = 0.0;
    double diversity = 0.0;
    double lift_time = 0.0;
    bool on_front = false;
};

struct AggregateResult {
    std::map<std::string, DesignPopulation> populations;  // keyed by object name
    std::vector<AggregateRow> rows;
    int feasible = 0;
    int infeasible = 0;
    int errored = 0;
    int attempted = 0;
    std::vector<std::string> warnings;
};

// Loads every persisted feasible, simulated design, computes per-object
// diversity and the (diversity, lift_time) Pareto front, and returns the
// scatter rows. Corrupt records are skipped with a warning.
AggregateResult aggregate(const std::filesystem::path& sweep_dir);

void write_population_csv(const std::filesystem::path& path, const AggregateResult& agg);
void write_pareto_csv(const std::filesystem::path& path, const AggregateResult& agg);

}  // namespace simto
