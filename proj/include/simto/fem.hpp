#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <memory>
#include <utility>
#include <vector>

#include "simto/grid.hpp"
#include "simto/material.hpp"
#include "simto/parallel.hpp"

namespace simto {

// Linear-elastic model on a regular grid: SIMP-scaled Q4 elements, diagonal
// numerical springs and homogeneous Dirichlet constraints. loads[0] is the
// input load F_in by convention, followed by one global vector per contact
// load case.
struct FemModel {
    GridSpec grid;
    MaterialLaw material;
    std::vector<int> fixed_dofs;                   // sorted, unique
    std::vector<std::pair<int, double>> springs;   // (dof, stiffness)
    std::vector<Eigen::VectorXd> loads;

    void validate() const;
};

// Unit-modulus plane-stress (or plane-strain) stiffness of a square bilinear
// element, DOFs ordered [u0x u0y ... u3x u3y] with nodes counter-clockwise
// from the lower-left corner. Independent of element size.
Eigen::Matrix<double, 8, 8> element_stiffness(const MaterialLaw& material);

// K(rho) = K_s + sum_e E(rho_e) K_e^0, full size (fixed DOFs included).
Eigen::SparseMatrix<double> assemble(const FemModel& model, const DensityField& rho,
                                     ExecPolicy policy = default_policy());

// Direct sparse solve of the constrained system; fixed DOFs are eliminated by
// reduction and come back exactly zero. One step of iterative refinement keeps
// the reduced relative residual below 1e-8 despite the e_min conditioning.
Eigen::VectorXd solve(const FemModel& model, const Eigen::SparseMatrix<double>& K,
                      const Eigen::VectorXd& F);

// Jacobi-preconditioned conjugate-gradient fallback, same contract as solve().
Eigen::VectorXd solve_cg(const FemModel& model, const Eigen::SparseMatrix<double>& K,
                         const Eigen::VectorXd& F, double tol = 1e-8);

// Centroid von Mises stress per element using the element's SIMP-scaled
// modulus. U must be a full-size displacement vector.
Eigen::ArrayXd von_mises(const FemModel& model, const DensityField& rho,
                         const Eigen::VectorXd& U, ExecPolicy policy = default_policy());

// Reusable solver for the many solves of one optimization: the reduced
// sparsity pattern and its symbolic factorization are built once, only the
// numeric values change with the density field.
class FemSolver {
  public:
    explicit FemSolver(const FemModel& model);
    ~FemSolver();
    FemSolver(FemSolver&&) noexcept;
    FemSolver& operator=(FemSolver&&) noexcept;

    void factorize(const DensityField& rho, ExecPolicy policy = default_policy());
    Eigen::VectorXd solve(const Eigen::VectorXd& F_full) const;
    int reduced_size() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace simto
