#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "simto/config.hpp"
#include "simto/loads.hpp"
#include "simto/loop.hpp"
#include "simto/sim.hpp"

namespace simto {

// Design grids are written row-major, one row per grid row starting at the
// top (iy = nely-1), comma-separated with 6 decimal places.
void write_design_csv(const std::filesystem::path& path, const DensityField& rho);
DensityField read_design_csv(const std::filesystem::path& path, double element_size = 1.0);

// 8-bit binary PGM / grayscale PNG, 255 = solid, top row first.
void write_design_pgm(const std::filesystem::path& path, const DensityField& rho);
void write_design_png(const std::filesystem::path& path, const DensityField& rho);

// Load set dump: node_id,x,y,fx,fy,magnitude.
void write_loads_csv(const std::filesystem::path& path, const ContactLoadSet& loads,
                     const GridSpec& grid);
ContactLoadSet read_loads_csv(const std::filesystem::path& path);

// Object outlines: one "x,y" vertex per line, counter-clockwise, mm.
std::vector<Eigen::Vector2d> read_polygon(const std::filesystem::path& path);
void write_polygon(const std::filesystem::path& path, const std::vector<Eigen::Vector2d>& poly);

// Iteration log CSV: iter,objective,max_change,volume.
void write_iteration_log_csv(const std::filesystem::path& path,
                             const std::vector<IterationLog>& log);

// One JSON record per timestep; node positions included on request only.
void write_trace_jsonl(const std::filesystem::path& path, const SimTrace& trace,
                       bool include_positions = false);

// Config files are strict JSON: unknown keys are rejected with the list of
// valid keys. Overrides take "section.key=value" form and win over the file.
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});
RunConfig config_from_overrides(const std::vector<std::string>& overrides);
void save_config(const std::filesystem::path& path, const RunConfig& config);
std::string config_dump(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

// Run directory persistence: run_<id>/config.json plus per-iteration
// design.csv / design.pgm / loads.csv / record.json.
class RunWriter {
  public:
    RunWriter(std::filesystem::path run_dir, const RunConfig& config);
    void operator()(const RunRecord& record);
    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

void write_record_json(const std::filesystem::path& path, const RunRecord& record);
// Reads everything except the density field (stored next to it as design.csv).
RunRecord read_record_json(const std::filesystem::path& path);

void write_status_json(const std::filesystem::path& run_dir, const std::string& state,
                       const std::string& termination, int feasible, int infeasible, int errored,
                       int attempted);
bool run_is_complete(const std::filesystem::path& run_dir);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace simto
