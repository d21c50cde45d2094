#pragma once

#include <stdexcept>
#include <string>

namespace simto {

// Base class for all library errors. The CLI maps subclasses onto its exit
// codes: InfeasibleDesign -> 2, NumericalError -> 3, everything else -> 1.
struct SimtoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent sizes, invalid meshes, malformed files.
struct StructuralError : SimtoError {
    using SimtoError::SimtoError;
};

// Argument outside its mathematical domain (e.g. a density outside [0,1]).
struct DomainError : SimtoError {
    using SimtoError::SimtoError;
};

// Linear solver or time integrator failed to converge.
struct NumericalError : SimtoError {
    using SimtoError::SimtoError;
};

// Design cannot be meshed/simulated: disconnected or missing port material.
struct InfeasibleDesign : SimtoError {
    using SimtoError::SimtoError;
};

// Contact extraction produced no usable loads.
struct EmptyLoadSet : SimtoError {
    using SimtoError::SimtoError;
};

}  // namespace simto
