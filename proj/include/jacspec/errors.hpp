#pragma once

#include <stdexcept>
#include <string>

#include "jacspec/common.hpp"

namespace jacspec {

// Typed failures. Library code throws these; the command line driver maps
// them to exit codes (validation 2, numerical failure 3, unstable truncation 4).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// branch-dependent scalar evaluated on or beyond its cut [n + 1/2, oo)
struct BranchCutError : Error {
    using Error::Error;
};

// argument outside the mathematical domain (mu <= 0, negative index, ...)
struct DomainError : Error {
    using Error::Error;
};

// real-symmetric algorithm (Sturm counts, bisection) fed a complex operator
struct NotSymmetricError : Error {
    using Error::Error;
};

// exact zero pivot in the tridiagonal elimination
struct SingularMatrixError : Error {
    SingularMatrixError(const std::string& what, Index pivot)
        : Error(what), pivot_index(pivot) {}
    Index pivot_index;
};

// iteration cap reached without meeting the requested tolerance
struct ConvergenceError : Error {
    using Error::Error;
};

// resolvent boundary value with the wrong half-plane orientation
struct HerglotzViolation : Error {
    using Error::Error;
};

// result does not survive doubling of the truncation size
struct TruncationUnstable : Error {
    using Error::Error;
};

// growth-model fit on degenerate data (empty window, zeros, non-finite)
struct DegenerateFitError : Error {
    using Error::Error;
};

// quadrature asked for on an invalid or inconsistent grid
struct QuadratureError : Error {
    using Error::Error;
};

// value underflowed (or would overflow) beyond what rescaling can represent
struct OverflowGuard : Error {
    using Error::Error;
};

// output file could not be created or written
struct IoError : Error {
    using Error::Error;
};

}  // namespace jacspec
