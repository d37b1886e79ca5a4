#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "sil/symplectic_path.hpp"
#include "sil/types.hpp"

// Shared fixtures: canonical systems with analytically known behaviour.
namespace testsup {

using namespace sil;

/// B == rate * I on [0, tau]: gamma(t) = exp(rate t J), a block of rotations.
inline std::shared_ptr<const LinearSystem> rotor(int n, double tau, double rate = 1.0) {
    return std::make_shared<LinearSystem>(n, tau, [n, rate](double) -> Matrix {
        return rate * Matrix::Identity(2 * n, 2 * n);
    });
}

/// Decoupled rotations with per-plane rates (B = diag(rates, rates)).
inline std::shared_ptr<const LinearSystem> block_rotor(std::vector<double> rates, double tau) {
    int n = static_cast<int>(rates.size());
    Matrix B = Matrix::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) B(k, k) = B(n + k, n + k) = rates[k];
    return std::make_shared<LinearSystem>(n, tau, [B](double) { return B; });
}

/// exp(tJ) for n = 1 is the plane rotation by angle t.
inline Matrix rotation2(double angle) {
    Matrix R(2, 2);
    R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return R;
}

/// Analytic crossing-count oracle for pure rotation systems.
///
/// The path exp(t J B) with B = diag(rates, rates) has, in plane k, the
/// eigenvalue pair e^{+- i rate_k t}. Its omega-index on [0, tau] at
/// omega = e^{i theta} counts interior times where either angle equals theta
/// mod 2pi (multiplicity = kernel dimension there), plus the base term n at
/// omega = 1. Both angles of a plane pass omega = +-1 simultaneously with
/// kernel dimension 2; at generic omega the passages are simple.
inline long rotation_index_oracle(const std::vector<double>& rates, double tau, double theta) {
    const double eps_t = 1e-12;
    theta = wrap_angle(theta);
    const bool at_one = theta < 1e-14;
    long count = 0;
    for (double rate : rates) {
        if (at_one) {
            for (long j = 1;; ++j) {
                double t = kTwoPi * j / rate;
                if (t >= tau - eps_t) break;
                count += 2;  // both angles cross together: kernel dimension 2
            }
        } else {
            for (long j = 0;; ++j) {  // the e^{+i rate t} branch
                double t = (theta + kTwoPi * j) / rate;
                if (t >= tau - eps_t) break;
                if (t > eps_t) ++count;
            }
            for (long j = 0;; ++j) {  // the e^{-i rate t} branch
                double t = (kTwoPi - theta + kTwoPi * j) / rate;
                if (t >= tau - eps_t) break;
                if (t > eps_t) ++count;
            }
        }
    }
    if (at_one) count += static_cast<long>(rates.size());
    return count;
}

}  // namespace testsup
