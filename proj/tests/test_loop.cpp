#include <doctest.h>

#include "simto/loop.hpp"
#include "simto/shapes.hpp"

using namespace simto;

namespace {

DesignDomain desk_domain(int nelx = 24, int nely = 12) {
    DesignDomain d;
    d.grid = GridSpec{nelx, nely, 1.0};
    d.fixed_port_lo = 0.75 * nely;
    d.fixed_port_hi = nely;
    d.input_port_lo = 0.0;
    d.input_port_hi = 0.25 * nely;
    d.volume_fraction = 0.35;
    return d;
}

SimConfig fast_sim() {
    SimConfig cfg;
    cfg.d_c = 5.0;
    cfg.d_l = 4.0;
    cfg.t = 0.5;
    cfg.N_t = 100;
    cfg.standoff = 1.0;
    cfg.base_height = 0.0;
    cfg.jitter_mm = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("converged implements the quartic change criterion") {
    GridSpec grid{20, 10, 1.0};
    const DensityField a = DensityField::uniform(grid, 0.5);
    CHECK(converged(a, a, 10.0));  // identical designs: 0 < 10

    // 200 elements changed by 0.5: sum = 200 * 0.0625 = 12.5, not converged
    Eigen::ArrayXd v = a.values;
    for (int e = 0; e < 200; ++e) v[e] = 1.0;
    CHECK(!converged(a, DensityField(grid, v), 10.0));

    // 100 elements changed by 0.5: sum = 6.25, converged
    v = a.values;
    for (int e = 0; e < 100; ++e) v[e] = 1.0;
    CHECK(converged(a, DensityField(grid, v), 10.0));
}

TEST_CASE("converged is symmetric and validates lengths") {
    GridSpec grid{6, 4, 1.0};
    const DensityField a = DensityField::uniform(grid, 0.2);
    const DensityField b = DensityField::uniform(grid, 0.9);
    CHECK(converged(a, b, 100.0) == converged(b, a, 100.0));
    CHECK(converged(a, b, 1e-6) == converged(b, a, 1e-6));
    const DensityField c = DensityField::uniform(GridSpec{5, 4, 1.0}, 0.5);
    CHECK_THROWS_AS(converged(a, c, 10.0), StructuralError);
}

TEST_CASE("feasible: all-solid field passes") {
    DesignDomain dom = desk_domain();
    const FeasibilityReport rep = feasible(DensityField::uniform(dom.grid, 1.0), dom);
    CHECK(rep.ok);
    CHECK(rep.reasons.empty());
}

TEST_CASE("feasible: two separated blobs are disconnected") {
    DesignDomain dom = desk_domain();
    Eigen::ArrayXd vals = Eigen::ArrayXd::Zero(dom.grid.elem_count());
    // one blob at the fixed port, one far away
    for (int ey = 9; ey < 12; ++ey) vals[dom.grid.elem_index(0, ey)] = 1.0;
    for (int ey = 0; ey < 3; ++ey) vals[dom.grid.elem_index(20, ey)] = 1.0;
    const FeasibilityReport rep = feasible(DensityField(dom.grid, vals), dom);
    CHECK(!rep.ok);
    CHECK(std::find(rep.reasons.begin(), rep.reasons.end(), "disconnected") !=
          rep.reasons.end());
}

TEST_CASE("feasible: a blob away from the fixed port is rejected") {
    DesignDomain dom = desk_domain();
    Eigen::ArrayXd vals = Eigen::ArrayXd::Zero(dom.grid.elem_count());
    for (int ex = 10; ex < 14; ++ex)
        for (int ey = 0; ey < 4; ++ey) vals[dom.grid.elem_index(ex, ey)] = 1.0;
    const FeasibilityReport rep = feasible(DensityField(dom.grid, vals), dom);
    CHECK(!rep.ok);
    CHECK(std::find(rep.reasons.begin(), rep.reasons.end(), "no material at fixed port") !=
          rep.reasons.end());
}

TEST_CASE("run with a one-iteration budget does one simulate/extract/optimize cycle") {
    DesignDomain dom = desk_domain();
    const BodyMesh object = mesh_from_polygon(shapes::circle(5.0), 1.0);
    TopOptConfig to_cfg;
    to_cfg.max_iterations = 8;  // keep the inner loop cheap
    LoopConfig loop_cfg;
    loop_cfg.max_simto_iterations = 1;

    int sink_calls = 0;
    const RunResult result = run(dom, object, fast_sim(), to_cfg, loop_cfg, {}, {},
                                 [&](const RunRecord&) { ++sink_calls; });
    REQUIRE(result.records.size() == 2);  // seed record plus one optimized design
    CHECK(result.records[0].iteration == 0);
    CHECK(result.records[0].simulated);  // the seed design was simulated once
    CHECK(result.records[1].iteration == 1);
    CHECK(!result.records[1].loads.empty());
    CHECK(result.termination == "iteration-cap");
    CHECK(sink_calls >= 3);  // seed create, seed metrics update, iteration 1
}

TEST_CASE("an out-of-reach object terminates with the empty-load signal") {
    DesignDomain dom = desk_domain();
    const BodyMesh object = mesh_from_polygon(shapes::circle(5.0), 1.0);
    SimConfig cfg = fast_sim();
    cfg.standoff = 500.0;  // the fingers never reach the object
    cfg.d_c = 1.0;
    TopOptConfig to_cfg;
    LoopConfig loop_cfg;
    loop_cfg.max_simto_iterations = 3;
    const RunResult result = run(dom, object, cfg, to_cfg, loop_cfg);
    CHECK(result.termination == "empty-loads");
    CHECK(result.records.size() == 1);  // only the seed record exists
    CHECK(result.records[0].simulated);
}

TEST_CASE("the loop never exceeds the simulate budget and persists every design") {
    DesignDomain dom = desk_domain();
    const BodyMesh object = mesh_from_polygon(shapes::circle(5.0), 1.0);
    TopOptConfig to_cfg;
    to_cfg.max_iterations = 6;
    LoopConfig loop_cfg;
    loop_cfg.max_simto_iterations = 3;
    const RunResult result = run(dom, object, fast_sim(), to_cfg, loop_cfg);
    int simulated = 0;
    for (const auto& rec : result.records) simulated += rec.simulated ? 1 : 0;
    CHECK(simulated <= loop_cfg.max_simto_iterations);
    // every persisted design is either feasible or carries a reason
    for (const auto& rec : result.records)
        CHECK((rec.is_feasible || !rec.infeasibility_reasons.empty()));
    CHECK((result.termination == "converged" || result.termination == "iteration-cap" ||
           result.termination == "infeasible" || result.termination == "empty-loads"));
}

TEST_CASE("two seeded runs produce bit-identical designs") {
    DesignDomain dom = desk_domain();
    const BodyMesh object = mesh_from_polygon(shapes::circle(5.0), 1.0);
    SimConfig cfg = fast_sim();
    cfg.seed = 11;
    cfg.jitter_mm = 0.1;
    TopOptConfig to_cfg;
    to_cfg.max_iterations = 5;
    LoopConfig loop_cfg;
    loop_cfg.max_simto_iterations = 2;
    const RunResult a = run(dom, object, cfg, to_cfg, loop_cfg);
    const RunResult b = run(dom, object, cfg, to_cfg, loop_cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t k = 0; k < a.records.size(); ++k)
        CHECK((a.records[k].design.values - b.records[k].design.values).abs().maxCoeff() == 0.0);
}
