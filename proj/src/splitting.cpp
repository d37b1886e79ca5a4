#include "sil/splitting.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sil {

namespace {

double auto_epsilon(const std::vector<double>& angles, double theta, double angle_tol) {
    double eps = 1e-3;
    // pairwise gap between distinct angles
    if (angles.size() >= 2) {
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < angles.size(); ++j)
            gap = std::min(gap, angles[j + 1] - angles[j]);
        gap = std::min(gap, kTwoPi - angles.back() + angles.front());
        eps = std::min(eps, gap / 8.0);
    }
    // distance from theta to the nearest angle it does not coincide with
    for (double a : angles) {
        double d = std::abs(theta - a);
        d = std::min(d, kTwoPi - d);
        if (d > angle_tol) eps = std::min(eps, d / 8.0);
    }
    return eps;
}

long index_at(const SymplecticPath& gamma, double theta, const Tolerances& tol) {
    Complex w = (std::abs(theta) <= 1e-14 || std::abs(theta - kTwoPi) <= 1e-14)
                    ? Complex(1.0, 0.0)
                    : std::polar(1.0, theta);
    return omega_index(gamma, w, tol).index;
}

SplittingPair one_sided_jumps(const SymplecticPath& gamma, double theta, double eps,
                              const Tolerances& tol) {
    long i0 = index_at(gamma, theta, tol);
    long ip = index_at(gamma, theta + eps, tol);
    long im = index_at(gamma, theta - eps, tol);
    SplittingPair out;
    out.s_plus = ip - i0;
    out.s_minus = im - i0;
    out.omega_angle = wrap_angle(theta);
    out.epsilon = eps;
    return out;
}

}  // namespace

SplittingPair splitting_numbers(const SymplecticPath& gamma, Complex omega, double epsilon,
                                const Tolerances& tol) {
    if (std::abs(std::abs(omega) - 1.0) > 1e-12)
        throw DomainError("splitting_numbers: omega must lie on the unit circle");
    const double theta = wrap_angle(std::arg(omega));
    auto angles = unit_circle_spectrum_angles(gamma.end_matrix(), tol);
    double eps = (epsilon > 0.0) ? epsilon : auto_epsilon(angles, theta, tol.angle_tol);

    SplittingPair full = one_sided_jumps(gamma, theta, eps, tol);
    SplittingPair half = one_sided_jumps(gamma, theta, eps / 2.0, tol);
    if (full.s_plus != half.s_plus || full.s_minus != half.s_minus) {
        std::ostringstream os;
        os << "splitting_numbers: unstable under epsilon halving at angle " << theta
           << " (eps=" << eps << ": " << full.s_plus << "/" << full.s_minus
           << ", eps/2: " << half.s_plus << "/" << half.s_minus << ")";
        throw ResolutionError(os.str());
    }
    return full;
}

SplittingProfile splitting_profile(const SymplecticPath& gamma, const Tolerances& tol) {
    SplittingProfile profile;
    auto angles = unit_circle_spectrum_angles(gamma.end_matrix(), tol);
    for (double a : angles) {
        SplittingProfileEntry e;
        e.angle = a;
        e.pair = splitting_numbers(gamma, std::polar(1.0, a), 0.0, tol);
        e.nullity = kernel_dimension(gamma.end_matrix(), std::polar(1.0, a), tol.rank_tol);
        e.s_minus_complement = e.nullity - e.pair.s_minus;
        profile.entries.push_back(e);
    }
    return profile;
}

BottSplittingResult bott_splitting_check(const SymplecticPath& gamma, int m, Complex z,
                                         const Tolerances& tol) {
    if (m <= 0) throw DomainError("bott_splitting_check: m must be positive");
    BottSplittingResult out;
    SymplecticPath iter = iterate_path(gamma, m);
    SplittingPair lhs = splitting_numbers(iter, z, 0.0, tol);
    out.lhs_plus = lhs.s_plus;
    out.lhs_minus = lhs.s_minus;

    const double theta = wrap_angle(std::arg(z));
    for (int k = 0; k < m; ++k) {
        double root_angle = (theta + kTwoPi * k) / m;
        SplittingPair s = splitting_numbers(gamma, std::polar(1.0, root_angle), 0.0, tol);
        out.rhs_plus += s.s_plus;
        out.rhs_minus += s.s_minus;
    }
    out.equal = (out.lhs_plus == out.rhs_plus) && (out.lhs_minus == out.rhs_minus);
    return out;
}

KreinSumResult krein_sum_bound(const SymplecticPath& gamma, const Tolerances& tol) {
    if (!gamma.convex_generated())
        throw UnsupportedInputError("krein_sum_bound: needs a positive definite generator");
    KreinSumResult out;
    out.profile = splitting_profile(gamma, tol);

    long upper_half = 0;
    long nu_one = 0, s_minus_one = 0;
    long nu_minus_one = 0, s_minus_minus_one = 0;
    for (const auto& e : out.profile.entries) {
        bool at_one = e.angle <= tol.angle_tol || kTwoPi - e.angle <= tol.angle_tol;
        bool at_minus_one = std::abs(e.angle - M_PI) <= tol.angle_tol;
        if (at_one) {
            nu_one = e.nullity;
            s_minus_one = e.pair.s_minus;
        } else if (at_minus_one) {
            nu_minus_one = e.nullity;
            s_minus_minus_one = e.pair.s_minus;
        } else if (e.angle > 0.0 && e.angle < M_PI) {
            upper_half += e.pair.s_minus;
        }
    }
    out.complement_at_one = nu_one - s_minus_one;
    out.complement_at_minus_one = nu_minus_one - s_minus_minus_one;
    out.sum = upper_half + out.complement_at_one + out.complement_at_minus_one;
    out.within_bound = out.sum <= gamma.n();
    return out;
}

DoubleIterateBoundResult double_iterate_bound_check(const SymplecticPath& gamma,
                                                    const Tolerances& tol) {
    DoubleIterateBoundResult out;
    IndexPair base = maslov_index(gamma, tol);
    out.premise_index = base.index;
    if (base.index < gamma.n()) {
        out.applicable = false;
        return out;  // reported as not-applicable, never as a failure
    }
    out.applicable = true;
    SymplecticPath doubled = iterate_path(gamma, 2);
    IndexPair d = maslov_index(doubled, tol);
    out.i_double = d.index;
    out.nu_double = d.nullity;
    out.s_plus_square_at_one = splitting_numbers(doubled, Complex(1.0, 0.0), 0.0, tol).s_plus;
    out.lhs = out.i_double + 2 * out.s_plus_square_at_one - out.nu_double;
    out.holds = out.lhs >= gamma.n();
    return out;
}

}  // namespace sil
