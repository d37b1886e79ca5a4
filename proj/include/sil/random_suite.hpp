#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "sil/symplectic_path.hpp"

namespace sil {

/// Random tau-periodic positive definite system
///   B(t) = C0 + C1 sin(2 pi t / tau) + C2 cos(2 pi t / tau)
/// with C0 shifted to keep B(t) >= margin I for all t.
std::shared_ptr<const LinearSystem> random_convex_system(int n, std::mt19937_64& rng,
                                                         double margin = 0.2);

/// Fixed parametric-resonance system (Hill-type) whose end matrix is
/// hyperbolic: all Floquet multipliers off the unit circle. Positive definite.
std::shared_ptr<const LinearSystem> hyperbolic_demo_system();

/// Integration step count satisfying the pi/8 eigen-angle rule with headroom.
int recommended_steps(const LinearSystem& sys, int minimum = 256);

}  // namespace sil
