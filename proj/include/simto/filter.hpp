#pragma once

#include <Eigen/Core>
#include <vector>

#include "simto/grid.hpp"
#include "simto/parallel.hpp"

namespace simto {

// Cone-weight density filter: filtered_e = sum_i w_ei x_i / sum_i w_ei with
// w_ei = max(0, radius - dist(center_e, center_i)). Row-normalized, so a
// uniform field is a fixed point. apply_adjoint implements the transpose map
// used by the sensitivity chain rule.
class DensityFilter {
  public:
    DensityFilter(const GridSpec& grid, double radius_mm);

    Eigen::ArrayXd apply(const Eigen::ArrayXd& x, ExecPolicy policy = default_policy()) const;
    Eigen::ArrayXd apply_adjoint(const Eigen::ArrayXd& g,
                                 ExecPolicy policy = default_policy()) const;

    DensityField apply(const DensityField& rho, ExecPolicy policy = default_policy()) const;

    double radius() const { return radius_; }

  private:
    GridSpec grid_;
    double radius_ = 0.0;
    // forward CSR: per output element, its neighbors and cone weights
    std::vector<int> offsets_;
    std::vector<int> neighbors_;
    std::vector<double> weights_;
    std::vector<double> row_sum_;
    // transposed CSR for the adjoint (weights pre-divided by the row sums)
    std::vector<int> t_offsets_;
    std::vector<int> t_neighbors_;
    std::vector<double> t_weights_;
};

// Convenience wrapper matching the per-operation surface.
DensityField density_filter(const DensityField& rho, double radius_mm,
                            ExecPolicy policy = default_policy());

}  // namespace simto
