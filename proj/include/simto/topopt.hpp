#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "simto/fem.hpp"
#include "simto/filter.hpp"
#include "simto/loads.hpp"

namespace simto {

// Design domain for one soft finger. The fixed and input ports are segments
// of the left edge, given in mm along y. The default geometry fixes the top
// 10 mm and actuates the bottom 10 mm; no material retention is enforced
// anywhere else.
struct DesignDomain {
    GridSpec grid{150, 70, 1.0};
    double fixed_port_lo = 60.0, fixed_port_hi = 70.0;  // mm on the left edge
    double input_port_lo = 0.0, input_port_hi = 10.0;
    double input_force_angle_deg = 10.0;  // f_in = (-cos a, -sin a)
    double volume_fraction = 0.3;
    MaterialLaw material;  // normalized SIMP constants for the TO solves

    void validate() const;
    std::vector<int> fixed_port_nodes() const;   // node indices on the left edge
    std::vector<int> input_port_nodes() const;
    int input_node() const;                      // center of the input port
    Eigen::Vector2d input_direction() const;
};

struct TopOptConfig {
    double filter_radius = 2.4;        // mm
    int max_iterations = 100;
    double change_tolerance = 0.01;    // on max |delta rho|
    double oc_move_limit = 0.2;
    double oc_damping = 0.5;
    double oc_bisection_tolerance = 1e-4;  // on the volume residual

    void validate(const GridSpec& grid) const;
};

// f(rho) = sum_i ||f_i|| MPE_i / SE_i and its derivative with respect to the
// physical (already filtered) densities.
struct ObjectiveResult {
    double value = 0.0;
    Eigen::ArrayXd d_rho;  // df / d rho_phys, one entry per element
};

// Builds the FE model for a load set: fixed-port constraints, unit input
// force with k_in spring at the input node, one unit contact load plus k_out
// springs per LoadCase. loads[0] is F_in.
FemModel build_fem_model(const DesignDomain& domain, const ContactLoadSet& loads,
                         double spring_k = 0.1);

ObjectiveResult objective_and_sensitivities(const FemModel& model, FemSolver& solver,
                                            const DensityField& rho_phys,
                                            const ContactLoadSet& loads,
                                            ExecPolicy policy = default_policy());

// Convenience overload that assembles and factorizes internally.
ObjectiveResult objective_and_sensitivities(const FemModel& model, const DensityField& rho_phys,
                                            const ContactLoadSet& loads,
                                            ExecPolicy policy = default_policy());

// Same objective evaluated on filter(x): the returned gradient is chain-ruled
// through the density filter, i.e. taken with respect to the raw design
// variables x. This is the quantity the OC update consumes.
ObjectiveResult objective_with_filter(const FemModel& model, const DensityFilter& filter,
                                      const DensityField& x_design, const ContactLoadSet& loads,
                                      ExecPolicy policy = default_policy());

// Optimality-criteria update (maximization form). The returned field moves at
// most oc_move_limit per element, stays in [0,1] and satisfies
// volume_of(result) = v_f within oc_bisection_tolerance, with the Lagrange
// multiplier found by bisection. volume_of defaults to the plain mean.
DensityField oc_update(const DensityField& rho, const Eigen::ArrayXd& df_drho,
                       const Eigen::ArrayXd& dv_drho, double volume_fraction,
                       const TopOptConfig& config,
                       const std::function<double(const Eigen::ArrayXd&)>& volume_of = {});

struct IterationLog {
    int iteration = 0;
    double objective = 0.0;
    double max_change = 0.0;
    double volume = 0.0;
};

struct OptimizeResult {
    DensityField design;            // physical (filtered) densities
    std::vector<IterationLog> log;
    bool hit_iteration_cap = false;
};

// Full OC loop: filter -> assemble/factorize -> 1 + N_f solves -> adjoint
// sensitivities -> OC update, until max |delta x| < change_tolerance or the
// iteration cap. rho0 holds the initial design variables (uniform v_f unless
// stated otherwise).
OptimizeResult optimize(const DesignDomain& domain, const ContactLoadSet& loads,
                        const TopOptConfig& config, const DensityField& rho0,
                        ExecPolicy policy = default_policy());

}  // namespace simto
