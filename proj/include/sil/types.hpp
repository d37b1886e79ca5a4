#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Standard symplectic structure J = (0 -I; I 0) on R^{2n}.
inline Matrix standard_form(int n) {
    Matrix J = Matrix::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Matrix::Identity(n, n);
    J.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
    return J;
}

/// Tolerance knobs shared across the library. All values are positive;
/// rank_tol is relative to the matrix scale.
struct Tolerances {
    double sym_tol = 1e-9;        // symmetry / symplecticity of single matrices
    double path_tol = 1e-7;       // symplecticity drift along a path
    double rank_tol = 1e-7;       // relative singular-value threshold for kernels
    double mean_tol = 1e-2;       // quadrature vs iterate-limit agreement
    double angle_tol = 1e-8;      // matching of unit-circle angles
    double grad_tol = 1e-9;       // critical-point gradient norm (coefficient space)
    double surface_tol = 1e-6;    // |gauge(x)-1| on the hypersurface
    double orbit_tol = 1e-6;      // residual of the characteristic equation
    double sym_orbit_tol = 1e-6;  // half-period antisymmetry of orbits
};

struct IndexPair {
    long index = 0;
    int nullity = 0;

    bool operator==(const IndexPair&) const = default;
};

// Error taxonomy. Input/shape problems derive from std::invalid_argument,
// numerical failures from std::runtime_error; the CLI maps the two families
// to distinct exit codes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotASolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wrap an angle into [0, 2pi).
inline double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

}  // namespace sil
