#pragma once

#include <vector>

#include "sil/omega_index.hpp"
#include "sil/symplectic_path.hpp"
#include "sil/types.hpp"

namespace sil {

/// One-sided jumps of the omega-index across an eigenvalue angle of the end
/// matrix: s_plus/minus = i at e^{i(theta +- eps)} minus i at e^{i theta}.
struct SplittingPair {
    long s_plus = 0;
    long s_minus = 0;
    double omega_angle = 0.0;
    double epsilon = 0.0;  // the one-sided offset actually used
};

struct SplittingProfileEntry {
    double angle = 0.0;
    SplittingPair pair;
    int nullity = 0;
    long s_minus_complement = 0;  // nu - s_minus (nonnegative by theory)
};

struct SplittingProfile {
    std::vector<SplittingProfileEntry> entries;  // one per unit-circle angle of M
};

/// Splitting numbers of gamma(tau) at omega, from one-sided omega-index
/// limits along gamma. epsilon = 0 selects min(1e-3, gap/8) automatically;
/// the result must be stable under halving epsilon or a ResolutionError is
/// raised.
SplittingPair splitting_numbers(const SymplecticPath& gamma, Complex omega, double epsilon = 0.0,
                                const Tolerances& tol = {});

/// Splitting pairs at every unit-circle eigenvalue angle of the end matrix.
SplittingProfile splitting_profile(const SymplecticPath& gamma, const Tolerances& tol = {});

struct BottSplittingResult {
    bool equal = false;
    long lhs_plus = 0, lhs_minus = 0;
    long rhs_plus = 0, rhs_minus = 0;
};

/// Checks S±_{M^m}(z) = sum over the m-th roots omega of z of S±_M(omega),
/// with both sides computed independently (left on the iterate path, right on
/// the base path).
BottSplittingResult bott_splitting_check(const SymplecticPath& gamma, int m, Complex z,
                                         const Tolerances& tol = {});

struct KreinSumResult {
    long sum = 0;
    bool within_bound = false;  // sum <= n
    SplittingProfile profile;
    long complement_at_one = 0;        // nu(1) - S^-(1)
    long complement_at_minus_one = 0;  // nu(-1) - S^-(-1)
};

/// Aggregate bound: sum over angles in (0, pi) of S^-(e^{i theta}) plus the
/// complements at +-1 must not exceed n.
KreinSumResult krein_sum_bound(const SymplecticPath& gamma, const Tolerances& tol = {});

struct DoubleIterateBoundResult {
    bool applicable = false;  // premise i_tau >= n
    bool holds = false;       // vacuously false when not applicable
    long premise_index = 0;
    long i_double = 0;
    int nu_double = 0;
    long s_plus_square_at_one = 0;
    long lhs = 0;  // i_double + 2 s_plus - nu_double
};

/// For paths with i_tau >= n, the doubled iterate satisfies
/// i_{2tau} + 2 S^+_{M^2}(1) - nu_{2tau} >= n.
DoubleIterateBoundResult double_iterate_bound_check(const SymplecticPath& gamma,
                                                    const Tolerances& tol = {});

}  // namespace sil
