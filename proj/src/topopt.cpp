#include "simto/topopt.hpp"

#include <algorithm>
#include <cmath>

namespace simto {

namespace {

std::vector<int> left_edge_nodes(const GridSpec& grid, double lo_mm, double hi_mm) {
    std::vector<int> nodes;
    const double h = grid.element_size;
    for (int iy = 0; iy <= grid.nely; ++iy) {
        const double y = iy * h;
        if (y >= lo_mm - 1e-9 && y <= hi_mm + 1e-9) nodes.push_back(grid.node_index(0, iy));
    }
    return nodes;
}

}  // namespace

void DesignDomain::validate() const {
    grid.validate();
    material.validate();
    if (!(volume_fraction >= 0.05 && volume_fraction <= 0.95))
        throw StructuralError("DesignDomain: volume_fraction outside [0.05, 0.95]");
    if (fixed_port_lo > fixed_port_hi || input_port_lo > input_port_hi)
        throw StructuralError("DesignDomain: malformed port segment");
    // disjoint port segments
    const bool overlap = fixed_port_lo <= input_port_hi && input_port_lo <= fixed_port_hi;
    if (overlap) throw StructuralError("DesignDomain: fixed and input ports must be disjoint");
    if (fixed_port_nodes().empty()) throw StructuralError("DesignDomain: empty fixed port");
    if (input_port_nodes().empty()) throw StructuralError("DesignDomain: empty input port");
}

std::vector<int> DesignDomain::fixed_port_nodes() const {
    return left_edge_nodes(grid, fixed_port_lo, fixed_port_hi);
}

std::vector<int> DesignDomain::input_port_nodes() const {
    return left_edge_nodes(grid, input_port_lo, input_port_hi);
}

int DesignDomain::input_node() const {
    const double mid = 0.5 * (input_port_lo + input_port_hi);
    int iy = static_cast<int>(std::lround(mid / grid.element_size));
    iy = std::clamp(iy, 0, grid.nely);
    return grid.node_index(0, iy);
}

Eigen::Vector2d DesignDomain::input_direction() const {
    const double a = input_force_angle_deg * M_PI / 180.0;
    return {-std::cos(a), -std::sin(a)};
}

void TopOptConfig::validate(const GridSpec& grid) const {
    if (!(filter_radius >= grid.element_size))
        throw StructuralError("TopOptConfig: filter_radius must be >= one element");
    if (max_iterations < 0) throw StructuralError("TopOptConfig: max_iterations must be >= 0");
    if (!(oc_move_limit > 0.0 && oc_move_limit < 1.0))
        throw StructuralError("TopOptConfig: oc_move_limit outside (0,1)");
    if (!(oc_damping > 0.0 && oc_damping <= 1.0))
        throw StructuralError("TopOptConfig: oc_damping outside (0,1]");
    if (!(change_tolerance >= 0.0)) throw StructuralError("TopOptConfig: bad change_tolerance");
    if (!(oc_bisection_tolerance > 0.0))
        throw StructuralError("TopOptConfig: bad oc_bisection_tolerance");
}

FemModel build_fem_model(const DesignDomain& domain, const ContactLoadSet& loads,
                         double spring_k) {
    domain.validate();
    loads.validate(domain.grid);
    const GridSpec& grid = domain.grid;

    FemModel model;
    model.grid = grid;
    model.material = domain.material;
    for (int n : domain.fixed_port_nodes()) {
        model.fixed_dofs.push_back(2 * n);
        model.fixed_dofs.push_back(2 * n + 1);
    }
    std::sort(model.fixed_dofs.begin(), model.fixed_dofs.end());

    const int in = domain.input_node();
    model.springs.push_back({2 * in, spring_k});
    model.springs.push_back({2 * in + 1, spring_k});

    Eigen::VectorXd F_in = Eigen::VectorXd::Zero(grid.dof_count());
    const Eigen::Vector2d din = domain.input_direction();
    F_in[2 * in] = din.x();
    F_in[2 * in + 1] = din.y();
    model.loads.push_back(std::move(F_in));

    for (const auto& lc : loads.loads) {
        const int node = ContactLoadSet::snap_node(grid, lc.position);
        model.springs.push_back({2 * node, spring_k});
        model.springs.push_back({2 * node + 1, spring_k});
        Eigen::VectorXd F = Eigen::VectorXd::Zero(grid.dof_count());
        const Eigen::Vector2d dir = lc.direction();
        F[2 * node] = dir.x();
        F[2 * node + 1] = dir.y();
        model.loads.push_back(std::move(F));
    }
    model.validate();
    return model;
}

ObjectiveResult objective_and_sensitivities(const FemModel& model, FemSolver& solver,
                                            const DensityField& rho_phys,
                                            const ContactLoadSet& loads, ExecPolicy policy) {
    if (model.loads.size() != loads.loads.size() + 1)
        throw StructuralError("objective: model loads and contact loads out of sync");
    const GridSpec& grid = model.grid;
    const int nf = loads.size();

    solver.factorize(rho_phys, policy);
    const Eigen::VectorXd U_in = solver.solve(model.loads[0]);
    std::vector<Eigen::VectorXd> U(nf);
    for (int i = 0; i < nf; ++i) U[i] = solver.solve(model.loads[i + 1]);

    // MPE_i = U_i^T K U_in = U_i^T F_in, SE_i = U_i^T F_i.
    Eigen::ArrayXd mpe(nf), se(nf), w(nf);
    for (int i = 0; i < nf; ++i) {
        mpe[i] = U[i].dot(model.loads[0]);
        se[i] = U[i].dot(model.loads[i + 1]);
        w[i] = loads.loads[i].weight;
        if (!(se[i] > 0.0)) throw NumericalError("objective: nonpositive strain energy");
    }

    ObjectiveResult res;
    res.value = (w * mpe / se).sum();
    res.d_rho.resize(grid.elem_count());

    const auto ke = element_stiffness(model.material);
    const MaterialLaw& mat = model.material;
    parallel_for(grid.elem_count(), [&](std::ptrdiff_t ei) {
        const int e = static_cast<int>(ei);
        const auto dofs = grid.elem_dofs(grid.elem_x(e), grid.elem_y(e));
        double uin[8];
        for (int a = 0; a < 8; ++a) uin[a] = U_in[dofs[a]];
        const double dE = simp_modulus_deriv(rho_phys[e], mat);
        double acc = 0.0;
        for (int i = 0; i < nf; ++i) {
            double ui[8], keui[8];
            for (int a = 0; a < 8; ++a) ui[a] = U[i][dofs[a]];
            for (int a = 0; a < 8; ++a) {
                double s = 0.0;
                for (int b = 0; b < 8; ++b) s += ke(a, b) * ui[b];
                keui[a] = s;
            }
            double a_ie = 0.0, b_ie = 0.0;  // u_i K u_in and u_i K u_i on this element
            for (int a = 0; a < 8; ++a) {
                a_ie += keui[a] * uin[a];
                b_ie += keui[a] * ui[a];
            }
            // d(MPE_i)/drho_e = -dE a_ie, d(SE_i)/drho_e = -dE b_ie; quotient rule.
            acc += w[i] * (-a_ie * se[i] + mpe[i] * b_ie) / (se[i] * se[i]);
        }
        res.d_rho[e] = dE * acc;
    }, policy);
    return res;
}

ObjectiveResult objective_and_sensitivities(const FemModel& model, const DensityField& rho_phys,
                                            const ContactLoadSet& loads, ExecPolicy policy) {
    FemSolver solver(model);
    return objective_and_sensitivities(model, solver, rho_phys, loads, policy);
}

ObjectiveResult objective_with_filter(const FemModel& model, const DensityFilter& filter,
                                      const DensityField& x_design, const ContactLoadSet& loads,
                                      ExecPolicy policy) {
    const DensityField phys = filter.apply(x_design, policy);
    ObjectiveResult res = objective_and_sensitivities(model, phys, loads, policy);
    res.d_rho = filter.apply_adjoint(res.d_rho, policy);
    return res;
}

DensityField oc_update(const DensityField& rho, const Eigen::ArrayXd& df_drho,
                       const Eigen::ArrayXd& dv_drho, double volume_fraction,
                       const TopOptConfig& config,
                       const std::function<double(const Eigen::ArrayXd&)>& volume_of) {
    const int ne = rho.size();
    if (df_drho.size() != ne || dv_drho.size() != ne)
        throw StructuralError("oc_update: sensitivity size mismatch");
    if ((dv_drho <= 0.0).any()) throw StructuralError("oc_update: dv/drho must be positive");
    config.validate(rho.grid);

    const double move = config.oc_move_limit;
    const double eta = config.oc_damping;
    // Ascent on positive sensitivities; the tiny floor keeps the multiplicative
    // update responsive to the volume multiplier when sensitivities vanish or
    // turn negative (those elements then slide to their lower move bound).
    const Eigen::ArrayXd num = df_drho.max(1e-10);

    auto candidate = [&](double lambda, Eigen::ArrayXd& out) {
        for (int e = 0; e < ne; ++e) {
            const double be = num[e] / (lambda * dv_drho[e]);
            double x = rho[e] * std::pow(be, eta);
            x = std::min(x, rho[e] + move);
            x = std::max(x, rho[e] - move);
            out[e] = std::clamp(x, 0.0, 1.0);
        }
    };
    auto measure = [&](const Eigen::ArrayXd& x) {
        return volume_of ? volume_of(x) : x.mean();
    };

    Eigen::ArrayXd work(ne);
    int used = 0;
    const int max_iters = 200;

    double lo = 1e-30, hi = 1e30;
    candidate(lo, work);
    const double vol_lo = measure(work);
    candidate(hi, work);
    const double vol_hi = measure(work);
    used += 2;
    if (vol_lo < volume_fraction - config.oc_bisection_tolerance ||
        vol_hi > volume_fraction + config.oc_bisection_tolerance)
        throw NumericalError("oc_update: volume target not bracketed by the move limits");

    double vol = vol_lo;
    while (used < max_iters) {
        const double mid = std::sqrt(lo * hi);
        candidate(mid, work);
        vol = measure(work);
        ++used;
        if (std::abs(vol - volume_fraction) <= config.oc_bisection_tolerance) {
            return DensityField(rho.grid, work);
        }
        if (vol > volume_fraction)
            lo = mid;
        else
            hi = mid;
    }
    throw NumericalError("oc_update: bisection did not converge within 200 iterations");
}

OptimizeResult optimize(const DesignDomain& domain, const ContactLoadSet& loads,
                        const TopOptConfig& config, const DensityField& rho0,
                        ExecPolicy policy) {
    domain.validate();
    config.validate(domain.grid);
    if (!(rho0.grid == domain.grid)) throw StructuralError("optimize: rho0 grid mismatch");

    OptimizeResult result;
    if (config.max_iterations == 0) {
        result.design = rho0;  // zero-iteration budget echoes the initial field
        return result;
    }

    const FemModel model = build_fem_model(domain, loads);
    FemSolver solver(model);
    DensityFilter filter(domain.grid, config.filter_radius);
    const int ne = domain.grid.elem_count();

    Eigen::ArrayXd x = rho0.values;
    DensityField phys(domain.grid, filter.apply(x, policy));
    const Eigen::ArrayXd dv_phys = Eigen::ArrayXd::Constant(ne, 1.0 / ne);
    const Eigen::ArrayXd dv_x = filter.apply_adjoint(dv_phys, policy);

    for (int it = 1; it <= config.max_iterations; ++it) {
        const ObjectiveResult obj =
            objective_and_sensitivities(model, solver, phys, loads, policy);
        const Eigen::ArrayXd df_x = filter.apply_adjoint(obj.d_rho, policy);

        // The volume constraint is enforced on the physical densities.
        auto vol_phys = [&](const Eigen::ArrayXd& xc) { return filter.apply(xc, policy).mean(); };
        const DensityField x_new = oc_update(DensityField(domain.grid, x), df_x, dv_x,
                                             domain.volume_fraction, config, vol_phys);

        const double change = (x_new.values - x).abs().maxCoeff();
        x = x_new.values;
        phys = DensityField(domain.grid, filter.apply(x, policy));
        result.log.push_back({it, obj.value, change, phys.mean()});
        if (change < config.change_tolerance) break;
        if (it == config.max_iterations) result.hit_iteration_cap = true;
    }
    result.design = phys;
    return result;
}

}  // namespace simto
