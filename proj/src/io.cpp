#include "simto/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace simto {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios_base::openmode mode = {}) {
    std::ofstream out(path, mode | std::ios_base::out);
    if (!out) throw StructuralError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios_base::openmode mode = {}) {
    std::ifstream in(path, mode | std::ios_base::in);
    if (!in) throw StructuralError("cannot open for reading: " + path.string());
    return in;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void write_design_csv(const std::filesystem::path& path, const DensityField& rho) {
    auto out = open_out(path);
    const GridSpec& g = rho.grid;
    for (int iy = g.nely - 1; iy >= 0; --iy) {
        for (int ex = 0; ex < g.nelx; ++ex) {
            if (ex) out << ',';
            out << fmt6(rho.at(ex, iy));
        }
        out << '\n';
    }
}

DensityField read_design_csv(const std::filesystem::path& path, double element_size) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw StructuralError("design csv: ragged rows in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw StructuralError("design csv: empty file " + path.string());
    GridSpec grid{static_cast<int>(rows.front().size()), static_cast<int>(rows.size()),
                  element_size};
    Eigen::ArrayXd vals(grid.elem_count());
    for (int iy = 0; iy < grid.nely; ++iy) {
        const auto& row = rows[grid.nely - 1 - iy];  // file starts at the top row
        for (int ex = 0; ex < grid.nelx; ++ex) vals[grid.elem_index(ex, iy)] = row[ex];
    }
    return DensityField(grid, vals);
}

namespace {

std::vector<uint8_t> density_bytes(const DensityField& rho) {
    const GridSpec& g = rho.grid;
    std::vector<uint8_t> bytes;
    bytes.reserve(static_cast<size_t>(g.elem_count()));
    for (int iy = g.nely - 1; iy >= 0; --iy)
        for (int ex = 0; ex < g.nelx; ++ex)
            bytes.push_back(static_cast<uint8_t>(std::lround(rho.at(ex, iy) * 255.0)));
    return bytes;
}

}  // namespace

void write_design_pgm(const std::filesystem::path& path, const DensityField& rho) {
    auto out = open_out(path, std::ios_base::binary);
    out << "P5\n" << rho.grid.nelx << ' ' << rho.grid.nely << "\n255\n";
    const auto bytes = density_bytes(rho);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_design_png(const std::filesystem::path& path, const DensityField& rho) {
    const int w = rho.grid.nelx, h = rho.grid.nely;
    const auto pixels = density_bytes(rho);
    // raw scanlines with filter byte 0
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(h) * (w + 1));
    for (int row = 0; row < h; ++row) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<size_t>(row) * w,
                   pixels.begin() + static_cast<size_t>(row + 1) * w);
    }
    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(comp_cap);
    if (compress2(comp.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw StructuralError("png: deflate failed");
    comp.resize(comp_cap);

    auto out = open_out(path, std::ios_base::binary);
    auto be32 = [](uint32_t v) {
        return std::array<uint8_t, 4>{static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                                      static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    };
    auto chunk = [&](const char type[4], const std::vector<uint8_t>& data) {
        const auto len = be32(static_cast<uint32_t>(data.size()));
        out.write(reinterpret_cast<const char*>(len.data()), 4);
        uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
        if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
        out.write(type, 4);
        if (!data.empty())
            out.write(reinterpret_cast<const char*>(data.data()),
                      static_cast<std::streamsize>(data.size()));
        const auto c = be32(crc);
        out.write(reinterpret_cast<const char*>(c.data()), 4);
    };
    const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<uint8_t> ihdr;
    for (uint8_t b : be32(static_cast<uint32_t>(w))) ihdr.push_back(b);
    for (uint8_t b : be32(static_cast<uint32_t>(h))) ihdr.push_back(b);
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", comp);
    chunk("IEND", {});
}

void write_loads_csv(const std::filesystem::path& path, const ContactLoadSet& loads,
                     const GridSpec& grid) {
    auto out = open_out(path);
    out << "node_id,x,y,fx,fy,magnitude\n";
    for (const auto& lc : loads.loads) {
        out << ContactLoadSet::snap_node(grid, lc.position) << ',' << fmt6(lc.position.x()) << ','
            << fmt6(lc.position.y()) << ',' << fmt6(lc.force.x()) << ',' << fmt6(lc.force.y())
            << ',' << fmt6(lc.weight) << '\n';
    }
}

ContactLoadSet read_loads_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    ContactLoadSet loads;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("node_id", 0) == 0) continue;  // header
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 6) throw StructuralError("loads csv: expected 6 columns");
        LoadCase lc;
        lc.position = {vals[1], vals[2]};
        lc.force = {vals[3], vals[4]};
        lc.weight = vals[5];
        loads.loads.push_back(lc);
    }
    if (loads.empty()) throw StructuralError("loads csv: no loads in " + path.string());
    return loads;
}

std::vector<Eigen::Vector2d> read_polygon(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<Eigen::Vector2d> poly;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw StructuralError("polygon: expected 'x,y' lines");
        poly.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    if (poly.size() < 3) throw StructuralError("polygon: need at least 3 vertices");
    return poly;
}

void write_polygon(const std::filesystem::path& path, const std::vector<Eigen::Vector2d>& poly) {
    auto out = open_out(path);
    for (const auto& p : poly) out << fmt6(p.x()) << ',' << fmt6(p.y()) << '\n';
}

void write_iteration_log_csv(const std::filesystem::path& path,
                             const std::vector<IterationLog>& log) {
    auto out = open_out(path);
    out << "iter,objective,max_change,volume\n";
    for (const auto& row : log)
        out << row.iteration << ',' << fmt6(row.objective) << ',' << fmt6(row.max_change) << ','
            << fmt6(row.volume) << '\n';
}

void write_trace_jsonl(const std::filesystem::path& path, const SimTrace& trace,
                       bool include_positions) {
    auto out = open_out(path);
    int step_idx = 0;
    for (const auto& s : trace.steps) {
        json rec;
        rec["step"] = ++step_idx;
        rec["t"] = s.time;
        rec["grounded"] = s.object_grounded;
        rec["peak_vm_mpa"] = s.object_peak_vm;
        json contacts = json::array();
        for (const auto& c : s.contacts) {
            contacts.push_back({{"finger", c.finger},
                                {"node", c.node},
                                {"p", {c.point.x(), c.point.y()}},
                                {"f", {c.force.x(), c.force.y()}},
                                {"fn", c.normal_mag},
                                {"ft", c.tangent_mag}});
        }
        rec["contacts"] = std::move(contacts);
        if (include_positions) {
            auto dump = [](const std::vector<Eigen::Vector2d>& ps) {
                json a = json::array();
                for (const auto& p : ps) a.push_back({p.x(), p.y()});
                return a;
            };
            rec["pos_left"] = dump(s.pos_left);
            rec["pos_right"] = dump(s.pos_right);
            rec["pos_object"] = dump(s.pos_object);
        }
        out << rec.dump() << '\n';
    }
}

// --- configuration ------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> valid) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* v : valid)
            if (key == v) {
                ok = true;
                break;
            }
        if (!ok) {
            std::string msg = "config: unknown key '" + section + "." + key + "'; valid keys:";
            for (const char* v : valid) msg += std::string(" ") + v;
            throw StructuralError(msg);
        }
    }
}

template <class T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

json domain_to_json(const DesignDomain& d) {
    return json{{"nelx", d.grid.nelx},
                {"nely", d.grid.nely},
                {"element_size", d.grid.element_size},
                {"volume_fraction", d.volume_fraction},
                {"fixed_port_mm", {d.fixed_port_lo, d.fixed_port_hi}},
                {"input_port_mm", {d.input_port_lo, d.input_port_hi}},
                {"input_force_angle_deg", d.input_force_angle_deg},
                {"material",
                 {{"e0", d.material.e0},
                  {"e_min", d.material.e_min},
                  {"p", d.material.p},
                  {"nu", d.material.nu},
                  {"plane_strain", d.material.plane_strain}}}};
}

void domain_from_json(const json& j, DesignDomain& d) {
    check_keys(j, "domain",
               {"nelx", "nely", "element_size", "volume_fraction", "fixed_port_mm",
                "input_port_mm", "input_force_angle_deg", "material"});
    get_to(j, "nelx", d.grid.nelx);
    get_to(j, "nely", d.grid.nely);
    get_to(j, "element_size", d.grid.element_size);
    get_to(j, "volume_fraction", d.volume_fraction);
    if (j.contains("fixed_port_mm")) {
        d.fixed_port_lo = j["fixed_port_mm"].at(0).get<double>();
        d.fixed_port_hi = j["fixed_port_mm"].at(1).get<double>();
    }
    if (j.contains("input_port_mm")) {
        d.input_port_lo = j["input_port_mm"].at(0).get<double>();
        d.input_port_hi = j["input_port_mm"].at(1).get<double>();
    }
    get_to(j, "input_force_angle_deg", d.input_force_angle_deg);
    if (j.contains("material")) {
        const json& m = j["material"];
        check_keys(m, "domain.material", {"e0", "e_min", "p", "nu", "plane_strain"});
        get_to(m, "e0", d.material.e0);
        get_to(m, "e_min", d.material.e_min);
        get_to(m, "p", d.material.p);
        get_to(m, "nu", d.material.nu);
        get_to(m, "plane_strain", d.material.plane_strain);
    }
}

json topopt_to_json(const TopOptConfig& t) {
    return json{{"filter_radius", t.filter_radius},
                {"max_iterations", t.max_iterations},
                {"change_tolerance", t.change_tolerance},
                {"oc_move_limit", t.oc_move_limit},
                {"oc_damping", t.oc_damping},
                {"oc_bisection_tolerance", t.oc_bisection_tolerance}};
}

void topopt_from_json(const json& j, TopOptConfig& t) {
    check_keys(j, "topopt",
               {"filter_radius", "max_iterations", "change_tolerance", "oc_move_limit",
                "oc_damping", "oc_bisection_tolerance"});
    get_to(j, "filter_radius", t.filter_radius);
    get_to(j, "max_iterations", t.max_iterations);
    get_to(j, "change_tolerance", t.change_tolerance);
    get_to(j, "oc_move_limit", t.oc_move_limit);
    get_to(j, "oc_damping", t.oc_damping);
    get_to(j, "oc_bisection_tolerance", t.oc_bisection_tolerance);
}

json sim_to_json(const SimConfig& s) {
    return json{{"E_g", s.E_g},
                {"E_o", s.E_o},
                {"nu_g", s.nu_g},
                {"nu_o", s.nu_o},
                {"d_c", s.d_c},
                {"d_l", s.d_l},
                {"t", s.t},
                {"N_t", s.N_t},
                {"friction_mu", s.friction_mu},
                {"gravity", s.gravity},
                {"material_density", s.material_density},
                {"contact_stiffness", s.contact_stiffness},
                {"seed", s.seed},
                {"standoff", s.standoff},
                {"base_height", s.base_height},
                {"ground_y", s.ground_y},
                {"rayleigh_beta", s.rayleigh_beta},
                {"friction_smooth_v", s.friction_smooth_v},
                {"newton_max_iters", s.newton_max_iters},
                {"newton_rel_tol", s.newton_rel_tol},
                {"jitter_mm", s.jitter_mm},
                {"object_cell_mm", s.object_cell_mm},
                {"record_positions", s.record_positions},
                {"constitutive", s.constitutive}};
}

void sim_from_json(const json& j, SimConfig& s) {
    check_keys(j, "sim",
               {"E_g", "E_o", "nu_g", "nu_o", "d_c", "d_l", "t", "N_t", "friction_mu", "gravity",
                "material_density", "contact_stiffness", "seed", "standoff", "base_height",
                "ground_y", "rayleigh_beta", "friction_smooth_v", "newton_max_iters",
                "newton_rel_tol", "jitter_mm", "object_cell_mm", "record_positions",
                "constitutive"});
    get_to(j, "E_g", s.E_g);
    get_to(j, "E_o", s.E_o);
    get_to(j, "nu_g", s.nu_g);
    get_to(j, "nu_o", s.nu_o);
    get_to(j, "d_c", s.d_c);
    get_to(j, "d_l", s.d_l);
    get_to(j, "t", s.t);
    get_to(j, "N_t", s.N_t);
    get_to(j, "friction_mu", s.friction_mu);
    get_to(j, "gravity", s.gravity);
    get_to(j, "material_density", s.material_density);
    get_to(j, "contact_stiffness", s.contact_stiffness);
    get_to(j, "seed", s.seed);
    get_to(j, "standoff", s.standoff);
    get_to(j, "base_height", s.base_height);
    get_to(j, "ground_y", s.ground_y);
    get_to(j, "rayleigh_beta", s.rayleigh_beta);
    get_to(j, "friction_smooth_v", s.friction_smooth_v);
    get_to(j, "newton_max_iters", s.newton_max_iters);
    get_to(j, "newton_rel_tol", s.newton_rel_tol);
    get_to(j, "jitter_mm", s.jitter_mm);
    get_to(j, "object_cell_mm", s.object_cell_mm);
    get_to(j, "record_positions", s.record_positions);
    get_to(j, "constitutive", s.constitutive);
}

json loop_to_json(const LoopConfig& l) {
    return json{{"epsilon", l.epsilon},
                {"max_simto_iterations", l.max_simto_iterations},
                {"feasibility_checks", l.feasibility_checks}};
}

void loop_from_json(const json& j, LoopConfig& l) {
    check_keys(j, "loop", {"epsilon", "max_simto_iterations", "feasibility_checks"});
    get_to(j, "epsilon", l.epsilon);
    get_to(j, "max_simto_iterations", l.max_simto_iterations);
    get_to(j, "feasibility_checks", l.feasibility_checks);
}

json sweep_to_json(const SweepGrid& s) {
    return json{{"moduli_g", s.moduli_g},
                {"moduli_o", s.moduli_o},
                {"volume_fractions", s.volume_fractions},
                {"objects", s.objects}};
}

void sweep_from_json(const json& j, SweepGrid& s) {
    check_keys(j, "sweep", {"moduli_g", "moduli_o", "volume_fractions", "objects"});
    get_to(j, "moduli_g", s.moduli_g);
    get_to(j, "moduli_o", s.moduli_o);
    get_to(j, "volume_fractions", s.volume_fractions);
    get_to(j, "objects", s.objects);
}

json eval_to_json(const EvalSettings& e) {
    return json{{"seeds", e.seeds}, {"t", e.t}, {"d_c", e.d_c}, {"d_l", e.d_l}};
}

void eval_from_json(const json& j, EvalSettings& e) {
    check_keys(j, "evaluate", {"seeds", "t", "d_c", "d_l"});
    get_to(j, "seeds", e.seeds);
    get_to(j, "t", e.t);
    get_to(j, "d_c", e.d_c);
    get_to(j, "d_l", e.d_l);
}

json pose_to_json(const Pose& p) {
    return json{{"rotation_deg", p.rotation_deg},
                {"translation", {p.translation.x(), p.translation.y()}}};
}

void pose_from_json(const json& j, const std::string& section, Pose& p) {
    check_keys(j, section, {"rotation_deg", "translation"});
    get_to(j, "rotation_deg", p.rotation_deg);
    if (j.contains("translation")) {
        p.translation.x() = j["translation"].at(0).get<double>();
        p.translation.y() = j["translation"].at(1).get<double>();
    }
}

json config_to_json(const RunConfig& c) {
    return json{{"domain", domain_to_json(c.domain)},   {"topopt", topopt_to_json(c.topopt)},
                {"sim", sim_to_json(c.sim)},            {"loop", loop_to_json(c.loop)},
                {"sweep", sweep_to_json(c.sweep)},      {"evaluate", eval_to_json(c.evaluate)},
                {"pose_g", pose_to_json(c.pose_g)},     {"pose_o", pose_to_json(c.pose_o)}};
}

RunConfig config_from_json(const json& j) {
    check_keys(j, "<root>",
               {"domain", "topopt", "sim", "loop", "sweep", "evaluate", "pose_g", "pose_o"});
    RunConfig c;
    if (j.contains("domain")) domain_from_json(j["domain"], c.domain);
    if (j.contains("topopt")) topopt_from_json(j["topopt"], c.topopt);
    if (j.contains("sim")) sim_from_json(j["sim"], c.sim);
    if (j.contains("loop")) loop_from_json(j["loop"], c.loop);
    if (j.contains("sweep")) sweep_from_json(j["sweep"], c.sweep);
    if (j.contains("evaluate")) eval_from_json(j["evaluate"], c.evaluate);
    if (j.contains("pose_g")) pose_from_json(j["pose_g"], "pose_g", c.pose_g);
    if (j.contains("pose_o")) pose_from_json(j["pose_o"], "pose_o", c.pose_o);
    return c;
}

void apply_override(json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw StructuralError("override must be key=value: " + spec);
    const std::string key = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    json* node = &j;
    size_t pos = 0;
    for (;;) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw StructuralError("override has empty key segment: " + spec);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
            break;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
    auto in = open_in(path);
    json j = json::parse(in, nullptr, true, true);  // allow comments
    for (const auto& ov : overrides) apply_override(j, ov);
    return config_from_json(j);
}

RunConfig config_from_overrides(const std::vector<std::string>& overrides) {
    json j = config_to_json(RunConfig{});
    for (const auto& ov : overrides) apply_override(j, ov);
    return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
    auto out = open_out(path);
    out << config_to_json(config).dump(2) << '\n';
}

std::string config_dump(const RunConfig& config) { return config_to_json(config).dump(); }

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(config_dump(config)); }

// --- run records ----------------------------------------------------------

void write_record_json(const std::filesystem::path& path, const RunRecord& record) {
    json j{{"iteration", record.iteration},
           {"feasible", record.is_feasible},
           {"infeasibility_reasons", record.infeasibility_reasons},
           {"simulated", record.simulated},
           {"grasp_success", record.grasp_success},
           {"lift_time", record.simulated ? json(record.lift_time) : json()},
           {"peak_stress", record.simulated ? json(record.peak_stress) : json()},
           {"objective", std::isnan(record.objective) ? json() : json(record.objective)},
           {"diversity", json()},  // population-level metric, filled by aggregate
           {"converged_with_previous", record.converged_with_previous},
           {"n_loads", record.loads.size()},
           {"config_hash", record.config_hash},
           {"seed", record.seed},
           {"wall_time_s", record.wall_time_s}};
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

RunRecord read_record_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    json j = json::parse(in);
    RunRecord r;
    j.at("iteration").get_to(r.iteration);
    j.at("feasible").get_to(r.is_feasible);
    if (j.contains("infeasibility_reasons"))
        j["infeasibility_reasons"].get_to(r.infeasibility_reasons);
    j.at("simulated").get_to(r.simulated);
    if (j.contains("grasp_success")) j["grasp_success"].get_to(r.grasp_success);
    if (r.simulated) {
        r.lift_time = j.value("lift_time", json()).is_null() ? 0.0 : j["lift_time"].get<double>();
        r.peak_stress =
            j.value("peak_stress", json()).is_null() ? 0.0 : j["peak_stress"].get<double>();
    }
    if (j.contains("objective") && !j["objective"].is_null())
        r.objective = j["objective"].get<double>();
    if (j.contains("converged_with_previous"))
        j["converged_with_previous"].get_to(r.converged_with_previous);
    if (j.contains("config_hash")) j["config_hash"].get_to(r.config_hash);
    if (j.contains("seed")) j["seed"].get_to(r.seed);
    if (j.contains("wall_time_s")) j["wall_time_s"].get_to(r.wall_time_s);
    return r;
}

RunWriter::RunWriter(std::filesystem::path run_dir, const RunConfig& config)
    : dir_(std::move(run_dir)) {
    std::filesystem::create_directories(dir_);
    save_config(dir_ / "config.json", config);
}

void RunWriter::operator()(const RunRecord& record) {
    const auto iter_dir = dir_ / ("iter_" + std::to_string(record.iteration));
    std::filesystem::create_directories(iter_dir);
    write_design_csv(iter_dir / "design.csv", record.design);
    write_design_pgm(iter_dir / "design.pgm", record.design);
    if (!record.loads.empty())
        write_loads_csv(iter_dir / "loads.csv", record.loads, record.design.grid);
    write_record_json(iter_dir / "record.json", record);
}

void write_status_json(const std::filesystem::path& run_dir, const std::string& state,
                       const std::string& termination, int feasible, int infeasible, int errored,
                       int attempted) {
    json j{{"state", state},       {"termination", termination}, {"feasible", feasible},
           {"infeasible", infeasible}, {"errored", errored},     {"attempted", attempted}};
    auto out = open_out(run_dir / "status.json");
    out << j.dump(2) << '\n';
}

bool run_is_complete(const std::filesystem::path& run_dir) {
    const auto status = run_dir / "status.json";
    if (!std::filesystem::exists(status)) return false;
    try {
        auto in = open_in(status);
        const json j = json::parse(in);
        return j.value("state", "") == "done";
    } catch (...) {
        return false;
    }
}

}  // namespace simto
