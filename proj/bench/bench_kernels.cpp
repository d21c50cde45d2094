// Serial vs OpenMP timings of the hot kernels on full-scale problem sizes.

#include <chrono>
#include <cstdio>
#include <random>

#include "simto/fem.hpp"
#include "simto/filter.hpp"
#include "simto/mesh.hpp"
#include "simto/parallel.hpp"
#include "simto/shapes.hpp"
#include "simto/sim.hpp"
#include "simto/topopt.hpp"

using namespace simto;

namespace {

template <class Fn>
double time_ms(Fn&& fn, int reps) {
    using clock = std::chrono::steady_clock;
    fn();  // warm-up
    const auto t0 = clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
    std::printf("simto kernel benchmark (%d worker threads)\n", thread_cap());

    const GridSpec grid{150, 70, 1.0};
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::ArrayXd vals(grid.elem_count());
    for (auto& v : vals) v = u(rng);
    const DensityField rho(grid, vals);

    DesignDomain domain;
    domain.grid = grid;
    ContactLoadSet loads;
    for (int i = 0; i < 8; ++i) {
        LoadCase lc;
        lc.position = {30.0 + 15.0 * i, 0.0};
        lc.force = {0.4, -1.0};
        lc.weight = 1.0;
        loads.loads.push_back(lc);
    }
    const FemModel model = build_fem_model(domain, loads);

    {
        const DensityFilter filter(grid, 2.4);
        report("density_filter.apply",
               time_ms([&] { filter.apply(rho.values, ExecPolicy::Serial); }, 20),
               time_ms([&] { filter.apply(rho.values, ExecPolicy::Parallel); }, 20));
    }
    {
        FemSolver solver(model);
        report("fem.factorize(+simp scale)",
               time_ms([&] { solver.factorize(rho, ExecPolicy::Serial); }, 5),
               time_ms([&] { solver.factorize(rho, ExecPolicy::Parallel); }, 5));
    }
    {
        Eigen::VectorXd U(grid.dof_count());
        for (auto& v : U) v = u(rng) - 0.5;
        report("fem.von_mises",
               time_ms([&] { von_mises(model, rho, U, ExecPolicy::Serial); }, 20),
               time_ms([&] { von_mises(model, rho, U, ExecPolicy::Parallel); }, 20));
    }
    {
        FemSolver solver(model);
        report("objective+sensitivities",
               time_ms([&] {
                   objective_and_sensitivities(model, solver, rho, loads, ExecPolicy::Serial);
               }, 3),
               time_ms([&] {
                   objective_and_sensitivities(model, solver, rho, loads, ExecPolicy::Parallel);
               }, 3));
    }
    {
        // one squeeze step of the simulator at desk scale, serial vs parallel
        DesignDomain desk;
        desk.grid = GridSpec{60, 28, 1.0};
        desk.fixed_port_lo = 18.0;
        desk.fixed_port_hi = 28.0;
        PortLayout ports{desk.fixed_port_nodes(), desk.input_port_nodes()};
        const BodyMesh finger =
            mesh_from_density(DensityField::uniform(desk.grid, 1.0), 0.5, &ports);
        const BodyMesh object = mesh_from_polygon(shapes::circle(11.0), 1.0);
        SimConfig cfg;
        cfg.d_c = 10.0;
        cfg.d_l = 4.0;
        cfg.t = 0.05;
        cfg.N_t = 16;
        const double serial = time_ms(
            [&] {
                set_default_policy(ExecPolicy::Serial);
                simulate(finger, object, {}, {}, cfg);
            },
            1);
        const double parallel = time_ms(
            [&] {
                set_default_policy(ExecPolicy::Parallel);
                simulate(finger, object, {}, {}, cfg);
            },
            1);
        set_default_policy(ExecPolicy::Parallel);
        report("simulate (16 steps, desk)", serial, parallel);
    }
    return 0;
}
