#pragma once

#include <cmath>

#include "simto/errors.hpp"

namespace simto {

// SIMP interpolation constants. e0 is the normalized solid modulus; moduli in
// physical units live in the simulator, the optimization runs normalized.
struct MaterialLaw {
    double e0 = 1.0;
    double e_min = 1e-9;
    double p = 3.0;
    double nu = 0.4;
    bool plane_strain = false;  // plane stress by default

    void validate() const {
        if (!(e_min > 0.0) || !(e_min < e0)) throw StructuralError("MaterialLaw: need 0 < e_min < e0");
        if (!(p >= 1.0)) throw StructuralError("MaterialLaw: need p >= 1");
        if (!(nu >= 0.0) || !(nu < 0.5)) throw StructuralError("MaterialLaw: need 0 <= nu < 0.5");
    }
};

// E(rho) = e_min + rho^p (e0 - e_min)
inline double simp_modulus(double rho, const MaterialLaw& m) {
    if (!(rho >= 0.0) || !(rho <= 1.0)) throw DomainError("simp_modulus: density outside [0,1]");
    return m.e_min + std::pow(rho, m.p) * (m.e0 - m.e_min);
}

inline double simp_modulus_deriv(double rho, const MaterialLaw& m) {
    if (!(rho >= 0.0) || !(rho <= 1.0)) throw DomainError("simp_modulus_deriv: density outside [0,1]");
    return m.p * std::pow(rho, m.p - 1.0) * (m.e0 - m.e_min);
}

}  // namespace simto
