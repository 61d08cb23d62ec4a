#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nlsrecon {

using cplx = std::complex<double>;

/// Complex field on the interior nodes of a grid, indexed by SpatialGrid::interior_index.
using InteriorField = Eigen::VectorXcd;
/// Complex values on the boundary node list of a grid.
using BoundaryField = Eigen::VectorXcd;
/// Real field on interior nodes (weights, nonlinearity coefficient q).
using RealField = Eigen::VectorXd;

/// A precondition or argument domain was violated.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical kernel failed (non-convergence, non-finite values).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed input file or configuration.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace nlsrecon
