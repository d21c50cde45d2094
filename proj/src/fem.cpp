#include "simto/fem.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>

namespace simto {

void FemModel::validate() const {
    grid.validate();
    material.validate();
    const int ndof = grid.dof_count();
    if (fixed_dofs.empty()) throw StructuralError("FemModel: fixed_dofs must be nonempty");
    if (!std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()))
        throw StructuralError("FemModel: fixed_dofs must be sorted");
    if (std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) != fixed_dofs.end())
        throw StructuralError("FemModel: fixed_dofs must be unique");
    if (fixed_dofs.front() < 0 || fixed_dofs.back() >= ndof)
        throw StructuralError("FemModel: fixed DOF index out of range");
    for (const auto& [dof, k] : springs) {
        if (dof < 0 || dof >= ndof) throw StructuralError("FemModel: spring DOF out of range");
        if (!(k > 0.0)) throw StructuralError("FemModel: spring stiffness must be > 0");
    }
    for (const auto& F : loads) {
        if (F.size() != ndof) throw StructuralError("FemModel: load vector size mismatch");
        for (int d : fixed_dofs)
            if (F[d] != 0.0) throw StructuralError("FemModel: load applied to a fixed DOF");
    }
}

Eigen::Matrix<double, 8, 8> element_stiffness(const MaterialLaw& material) {
    material.validate();
    double e = 1.0;
    double nu = material.nu;
    if (material.plane_strain) {
        // Plane strain via the standard constant substitution into the
        // plane-stress matrix: E* = E/(1-nu^2), nu* = nu/(1-nu).
        e = 1.0 / (1.0 - nu * nu);
        nu = nu / (1.0 - nu);
    }
    const double k[8] = {0.5 - nu / 6.0,    0.125 + nu / 8.0,  -0.25 - nu / 12.0,
                         -0.125 + 3.0 * nu / 8.0, -0.25 + nu / 12.0, -0.125 - nu / 8.0,
                         nu / 6.0,          0.125 - 3.0 * nu / 8.0};
    static const int idx[8][8] = {
        {0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
        {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
        {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
    const double scale = e / (1.0 - nu * nu);
    Eigen::Matrix<double, 8, 8> ke;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) ke(i, j) = scale * k[idx[i][j]];
    return ke;
}

Eigen::SparseMatrix<double> assemble(const FemModel& model, const DensityField& rho,
                                     ExecPolicy policy) {
    model.validate();
    if (!(rho.grid == model.grid)) throw StructuralError("assemble: density grid mismatch");
    const auto& grid = model.grid;
    const int ne = grid.elem_count();
    const auto ke = element_stiffness(model.material);

    Eigen::ArrayXd scale(ne);
    const MaterialLaw& m = model.material;
    parallel_for(ne, [&](std::ptrdiff_t e) { scale[e] = simp_modulus(rho[static_cast<int>(e)], m); },
                 policy);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(ne) * 64 + model.springs.size());
    for (int ex = 0; ex < grid.nelx; ++ex) {
        for (int ey = 0; ey < grid.nely; ++ey) {
            const int e = grid.elem_index(ex, ey);
            const auto dofs = grid.elem_dofs(ex, ey);
            for (int a = 0; a < 8; ++a)
                for (int b = 0; b < 8; ++b)
                    trips.emplace_back(dofs[a], dofs[b], scale[e] * ke(a, b));
        }
    }
    for (const auto& [dof, k] : model.springs) trips.emplace_back(dof, dof, k);

    Eigen::SparseMatrix<double> K(grid.dof_count(), grid.dof_count());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

namespace {

struct Reduction {
    std::vector<int> full2red;  // -1 for fixed DOFs
    std::vector<int> red2full;
};

Reduction make_reduction(int ndof, const std::vector<int>& fixed) {
    Reduction r;
    r.full2red.assign(ndof, 0);
    for (int d : fixed) r.full2red[d] = -1;
    r.red2full.reserve(ndof - static_cast<int>(fixed.size()));
    for (int d = 0; d < ndof; ++d) {
        if (r.full2red[d] == -1) continue;
        r.full2red[d] = static_cast<int>(r.red2full.size());
        r.red2full.push_back(d);
    }
    return r;
}

Eigen::SparseMatrix<double> reduce_matrix(const Eigen::SparseMatrix<double>& K,
                                          const Reduction& r) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(K.nonZeros()));
    for (int j = 0; j < K.outerSize(); ++j) {
        const int rj = r.full2red[j];
        if (rj < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, j); it; ++it) {
            const int ri = r.full2red[static_cast<int>(it.row())];
            if (ri < 0) continue;
            trips.emplace_back(ri, rj, it.value());
        }
    }
    Eigen::SparseMatrix<double> Kr(static_cast<int>(r.red2full.size()),
                                   static_cast<int>(r.red2full.size()));
    Kr.setFromTriplets(trips.begin(), trips.end());
    return Kr;
}

Eigen::VectorXd gather(const Eigen::VectorXd& F, const Reduction& r) {
    Eigen::VectorXd f(static_cast<Eigen::Index>(r.red2full.size()));
    for (size_t i = 0; i < r.red2full.size(); ++i) f[static_cast<Eigen::Index>(i)] = F[r.red2full[i]];
    return f;
}

Eigen::VectorXd scatter(const Eigen::VectorXd& u, const Reduction& r, int ndof) {
    Eigen::VectorXd U = Eigen::VectorXd::Zero(ndof);
    for (size_t i = 0; i < r.red2full.size(); ++i) U[r.red2full[i]] = u[static_cast<Eigen::Index>(i)];
    return U;
}

// Solve with one round of iterative refinement; throws if the relative
// residual of the reduced system stays above 1e-8.
Eigen::VectorXd refined_solve(const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& ldlt,
                              const Eigen::SparseMatrix<double>& Kr, const Eigen::VectorXd& f) {
    Eigen::VectorXd u = ldlt.solve(f);
    const double fnorm = f.norm();
    if (fnorm == 0.0) return Eigen::VectorXd::Zero(f.size());
    for (int round = 0; round < 2; ++round) {
        const Eigen::VectorXd res = f - Kr * u;
        if (res.norm() <= 1e-12 * fnorm) break;
        u += ldlt.solve(res);
    }
    const double rel = (f - Kr * u).norm() / fnorm;
    if (!std::isfinite(rel) || rel > 1e-8)
        throw NumericalError("solve: direct solver did not converge (relative residual " +
                             std::to_string(rel) + ")");
    return u;
}

}  // namespace

Eigen::VectorXd solve(const FemModel& model, const Eigen::SparseMatrix<double>& K,
                      const Eigen::VectorXd& F) {
    const int ndof = model.grid.dof_count();
    if (K.rows() != ndof || K.cols() != ndof || F.size() != ndof)
        throw StructuralError("solve: dimension mismatch");
    const Reduction r = make_reduction(ndof, model.fixed_dofs);
    const Eigen::SparseMatrix<double> Kr = reduce_matrix(K, r);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kr);
    if (ldlt.info() != Eigen::Success) throw NumericalError("solve: factorization failed");
    return scatter(refined_solve(ldlt, Kr, gather(F, r)), r, ndof);
}

Eigen::VectorXd solve_cg(const FemModel& model, const Eigen::SparseMatrix<double>& K,
                         const Eigen::VectorXd& F, double tol) {
    const int ndof = model.grid.dof_count();
    if (K.rows() != ndof || K.cols() != ndof || F.size() != ndof)
        throw StructuralError("solve_cg: dimension mismatch");
    const Reduction r = make_reduction(ndof, model.fixed_dofs);
    const Eigen::SparseMatrix<double> Kr = reduce_matrix(K, r);
    const Eigen::VectorXd f = gather(F, r);
    if (f.norm() == 0.0) return Eigen::VectorXd::Zero(ndof);

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(20 * Kr.rows());
    cg.compute(Kr);
    const Eigen::VectorXd u = cg.solve(f);
    if (cg.info() != Eigen::Success)
        throw NumericalError("solve_cg: conjugate gradient did not converge");
    return scatter(u, r, ndof);
}

Eigen::ArrayXd von_mises(const FemModel& model, const DensityField& rho,
                         const Eigen::VectorXd& U, ExecPolicy policy) {
    if (!(rho.grid == model.grid)) throw StructuralError("von_mises: density grid mismatch");
    if (U.size() != model.grid.dof_count()) throw StructuralError("von_mises: U size mismatch");
    const auto& grid = model.grid;
    const MaterialLaw& m = model.material;
    const double inv2h = 1.0 / (2.0 * grid.element_size);
    Eigen::ArrayXd vm(grid.elem_count());

    parallel_for(grid.elem_count(), [&](std::ptrdiff_t ei) {
        const int e = static_cast<int>(ei);
        const auto dofs = grid.elem_dofs(grid.elem_x(e), grid.elem_y(e));
        double u[8];
        for (int a = 0; a < 8; ++a) u[a] = U[dofs[a]];
        // Centroid B-matrix rows for nodes [LL, LR, UR, UL].
        const double ex = (-u[0] + u[2] + u[4] - u[6]) * inv2h;
        const double ey = (-u[1] - u[3] + u[5] + u[7]) * inv2h;
        const double gxy = (-u[1] + u[3] + u[5] - u[7]) * inv2h + (-u[0] - u[2] + u[4] + u[6]) * inv2h;
        const double E = simp_modulus(rho[e], m);
        double sx, sy, txy, sz = 0.0;
        if (m.plane_strain) {
            const double c = E / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
            sx = c * ((1.0 - m.nu) * ex + m.nu * ey);
            sy = c * (m.nu * ex + (1.0 - m.nu) * ey);
            txy = E / (2.0 * (1.0 + m.nu)) * gxy;
            sz = m.nu * (sx + sy);
        } else {
            const double c = E / (1.0 - m.nu * m.nu);
            sx = c * (ex + m.nu * ey);
            sy = c * (ey + m.nu * ex);
            txy = c * (1.0 - m.nu) / 2.0 * gxy;
        }
        const double a = sx - sy, b = sy - sz, d = sz - sx;
        vm[e] = std::sqrt(0.5 * (a * a + b * b + d * d) + 3.0 * txy * txy);
    }, policy);
    return vm;
}

struct FemSolver::Impl {
    const FemModel* model = nullptr;
    Eigen::Matrix<double, 8, 8> ke;
    Reduction red;
    Eigen::SparseMatrix<double> Kr;                  // pattern fixed after construction
    std::vector<std::array<int, 64>> elem_slots;     // -1 where a DOF is fixed
    std::vector<int> spring_slots;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;

    int slot_of(int row, int col) const {
        const int* outer = Kr.outerIndexPtr();
        const int* inner = Kr.innerIndexPtr();
        const int lo = outer[col], hi = outer[col + 1];
        const int* it = std::lower_bound(inner + lo, inner + hi, row);
        return static_cast<int>(it - inner);
    }
};

FemSolver::FemSolver(const FemModel& model) : impl_(std::make_unique<Impl>()) {
    model.validate();
    impl_->model = &model;
    impl_->ke = element_stiffness(model.material);
    const auto& grid = model.grid;
    impl_->red = make_reduction(grid.dof_count(), model.fixed_dofs);

    // Build the reduced pattern once with unit values, then map every element
    // and spring entry to its slot in the compressed value array.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(grid.elem_count()) * 64 + model.springs.size());
    for (int ex = 0; ex < grid.nelx; ++ex) {
        for (int ey = 0; ey < grid.nely; ++ey) {
            const auto dofs = grid.elem_dofs(ex, ey);
            for (int a = 0; a < 8; ++a) {
                const int ri = impl_->red.full2red[dofs[a]];
                if (ri < 0) continue;
                for (int b = 0; b < 8; ++b) {
                    const int rj = impl_->red.full2red[dofs[b]];
                    if (rj >= 0) trips.emplace_back(ri, rj, 1.0);
                }
            }
        }
    }
    for (const auto& [dof, k] : model.springs) {
        const int ri = impl_->red.full2red[dof];
        if (ri >= 0) trips.emplace_back(ri, ri, 1.0);
    }
    const int n = static_cast<int>(impl_->red.red2full.size());
    impl_->Kr.resize(n, n);
    impl_->Kr.setFromTriplets(trips.begin(), trips.end());
    impl_->Kr.makeCompressed();

    impl_->elem_slots.resize(grid.elem_count());
    for (int ex = 0; ex < grid.nelx; ++ex) {
        for (int ey = 0; ey < grid.nely; ++ey) {
            const int e = grid.elem_index(ex, ey);
            const auto dofs = grid.elem_dofs(ex, ey);
            auto& slots = impl_->elem_slots[e];
            for (int a = 0; a < 8; ++a) {
                for (int b = 0; b < 8; ++b) {
                    const int ri = impl_->red.full2red[dofs[a]];
                    const int rj = impl_->red.full2red[dofs[b]];
                    slots[a * 8 + b] = (ri >= 0 && rj >= 0) ? impl_->slot_of(ri, rj) : -1;
                }
            }
        }
    }
    impl_->spring_slots.reserve(model.springs.size());
    for (const auto& [dof, k] : model.springs) {
        const int ri = impl_->red.full2red[dof];
        impl_->spring_slots.push_back(ri >= 0 ? impl_->slot_of(ri, ri) : -1);
    }
}

FemSolver::~FemSolver() = default;
FemSolver::FemSolver(FemSolver&&) noexcept = default;
FemSolver& FemSolver::operator=(FemSolver&&) noexcept = default;

int FemSolver::reduced_size() const { return static_cast<int>(impl_->red.red2full.size()); }

void FemSolver::factorize(const DensityField& rho, ExecPolicy policy) {
    const FemModel& model = *impl_->model;
    if (!(rho.grid == model.grid)) throw StructuralError("FemSolver: density grid mismatch");
    const int ne = model.grid.elem_count();

    Eigen::ArrayXd scale(ne);
    const MaterialLaw& m = model.material;
    parallel_for(ne, [&](std::ptrdiff_t e) { scale[e] = simp_modulus(rho[static_cast<int>(e)], m); },
                 policy);

    double* vals = impl_->Kr.valuePtr();
    std::fill(vals, vals + impl_->Kr.nonZeros(), 0.0);
    const auto& ke = impl_->ke;
    for (int e = 0; e < ne; ++e) {
        const auto& slots = impl_->elem_slots[e];
        const double s = scale[e];
        for (int q = 0; q < 64; ++q) {
            const int slot = slots[q];
            if (slot >= 0) vals[slot] += s * ke(q / 8, q % 8);
        }
    }
    for (size_t i = 0; i < model.springs.size(); ++i) {
        const int slot = impl_->spring_slots[i];
        if (slot >= 0) vals[slot] += model.springs[i].second;
    }

    if (!impl_->analyzed) {
        impl_->ldlt.analyzePattern(impl_->Kr);
        impl_->analyzed = true;
    }
    impl_->ldlt.factorize(impl_->Kr);
    if (impl_->ldlt.info() != Eigen::Success)
        throw NumericalError("FemSolver: numeric factorization failed");
}

Eigen::VectorXd FemSolver::solve(const Eigen::VectorXd& F_full) const {
    const FemModel& model = *impl_->model;
    if (F_full.size() != model.grid.dof_count())
        throw StructuralError("FemSolver: force vector size mismatch");
    const Eigen::VectorXd f = gather(F_full, impl_->red);
    return scatter(refined_solve(impl_->ldlt, impl_->Kr, f), impl_->red, model.grid.dof_count());
}

}  // namespace simto
