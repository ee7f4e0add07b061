#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qbsde {

using StateMap = std::function<void(std::span<const double> x, std::span<double> out)>;
using ScalarField = std::function<double(std::span<const double> x)>;
using DriverScalar =
    std::function<double(double t, std::span<const double> x, double y, std::span<const double> z)>;
using DriverGradZ = std::function<void(double t, std::span<const double> x, double y,
                                       std::span<const double> z, std::span<double> out)>;

/// Nonlinearity f(t, x, y, z) of the backward equation dY = -f dt + Z.dW,
/// together with the partial derivatives the solver needs for reverse-mode
/// differentiation of the rollout.
struct Driver {
    DriverScalar value;
    DriverScalar d_dy;
    DriverGradZ grad_z;
};

/// A semilinear parabolic problem in forward-backward form:
///
///   dX = b(X) dt + sigma(X) dW,      X_0 = xi
///   dY = -f(t, X, Y, Z) dt + Z.dW,   Y_T = g(X_T)
///
/// sigma is diagonal; `diffusion` writes its diagonal. When `log_space` is set
/// the forward recursion runs on log X (Ito-corrected) and every state stays
/// strictly positive.
struct ProblemSpec {
    std::size_t dim = 0;
    StateMap drift;
    StateMap diffusion;
    Driver driver;
    ScalarField terminal;
    std::vector<double> initial;
    double horizon = 1.0;
    bool log_space = false;
    std::string label;

    /// Throws std::invalid_argument when the fields are inconsistent.
    void validate() const;
};

}  // namespace qbsde
