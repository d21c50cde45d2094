#include <doctest.h>

#include <random>

#include "simto/filter.hpp"

using namespace simto;

TEST_CASE("uniform fields are fixed points of the density filter") {
    GridSpec grid{9, 6, 1.0};
    for (double c : {0.0, 0.3, 1.0}) {
        const DensityField rho = DensityField::uniform(grid, c);
        const DensityField out = density_filter(rho, 2.4);
        for (int e = 0; e < out.size(); ++e) CHECK(out[e] == doctest::Approx(c).epsilon(1e-13));
    }
}

TEST_CASE("radius below the center spacing reduces to the identity") {
    GridSpec grid{5, 5, 1.0};
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd vals(grid.elem_count());
    for (auto& v : vals) v = u(rng);
    const DensityField rho(grid, vals);
    const DensityField out = density_filter(rho, 1.0);  // weights vanish at dist >= radius
    CHECK((out.values - rho.values).abs().maxCoeff() == 0.0);
}

TEST_CASE("filter matches an exhaustive cone-weight oracle") {
    GridSpec grid{5, 5, 1.0};
    Eigen::ArrayXd vals = Eigen::ArrayXd::Zero(25);
    vals[grid.elem_index(2, 2)] = 1.0;
    const DensityField rho(grid, vals);
    const double radius = 2.4;
    const DensityField out = density_filter(rho, radius);

    for (int ex = 0; ex < 5; ++ex) {
        for (int ey = 0; ey < 5; ++ey) {
            double num = 0.0, den = 0.0;
            for (int ix = 0; ix < 5; ++ix) {
                for (int iy = 0; iy < 5; ++iy) {
                    const double dist =
                        std::sqrt(double(ix - ex) * (ix - ex) + double(iy - ey) * (iy - ey));
                    const double w = std::max(0.0, radius - dist);
                    num += w * rho.at(ix, iy);
                    den += w;
                }
            }
            CHECK(out.at(ex, ey) == doctest::Approx(num / den).epsilon(1e-13));
        }
    }
}

TEST_CASE("filter output stays within [0,1] for random fields") {
    GridSpec grid{12, 8, 1.0};
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd vals(grid.elem_count());
    for (auto& v : vals) v = u(rng);
    const DensityField out = density_filter(DensityField(grid, vals), 3.1);
    CHECK(out.values.minCoeff() >= 0.0);
    CHECK(out.values.maxCoeff() <= 1.0);
}

TEST_CASE("apply_adjoint is the exact transpose of apply") {
    GridSpec grid{10, 7, 1.0};
    const DensityFilter filter(grid, 2.4);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::ArrayXd a(grid.elem_count()), b(grid.elem_count());
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        const double lhs = (filter.apply(a) * b).sum();
        const double rhs = (a * filter.apply_adjoint(b)).sum();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("serial and parallel filter paths agree bit-for-bit") {
    GridSpec grid{20, 13, 1.0};
    const DensityFilter filter(grid, 2.4);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd x(grid.elem_count());
    for (auto& v : x) v = u(rng);
    const Eigen::ArrayXd s = filter.apply(x, ExecPolicy::Serial);
    const Eigen::ArrayXd p = filter.apply(x, ExecPolicy::Parallel);
    CHECK((s - p).abs().maxCoeff() == 0.0);
    const Eigen::ArrayXd sa = filter.apply_adjoint(x, ExecPolicy::Serial);
    const Eigen::ArrayXd pa = filter.apply_adjoint(x, ExecPolicy::Parallel);
    CHECK((sa - pa).abs().maxCoeff() == 0.0);
}
