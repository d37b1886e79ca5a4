#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sil/symplectic_path.hpp"
#include "sil/types.hpp"

namespace sil {

/// Finite set of unit-circle sample points, stored as sorted angles in
/// [0, 2pi). Always contains 1 and -1.
struct OmegaGrid {
    std::vector<double> angles;
    int resolution = 0;

    static OmegaGrid uniform(int resolution);
};

/// Evidence record for one interior crossing found by the index engine.
struct CrossingRecord {
    double t = 0.0;           // crossing time in (0, tau)
    double omega_angle = 0.0; // angle of the omega it was computed at
    int multiplicity = 0;     // dim ker(gamma(t) - omega I)
    bool refined = false;
    bool low_confidence = false;  // singular values near the rank threshold
    double sigma_min = 0.0;
};

/// Complex kernel dimension of M - omega I by singular-value thresholding.
int kernel_dimension(const Matrix& M, Complex omega, double rank_tol_rel = 1e-7);

/// Distinct unit-circle eigenvalue angles of M, sorted in [0, 2pi). Candidate
/// angles come from eigenvalues with modulus near 1; each is confirmed by a
/// positive kernel dimension, which keeps defective unit eigenvalues whose
/// numerical spectrum splits off the circle.
std::vector<double> unit_circle_spectrum_angles(const Matrix& M, const Tolerances& tol = {});

/// nu_{tau,omega}(gamma): kernel dimension of gamma(tau) - omega I.
int nullity(const SymplecticPath& gamma, Complex omega, double rank_tol_rel = 1e-7);

/// All interior crossings of omega in (0, tau), with multiplicities.
std::vector<CrossingRecord> interior_crossings(const SymplecticPath& gamma, Complex omega,
                                               const Tolerances& tol = {});

/// omega-index of a convex-generated path:
///   i = n [omega = 1] + sum over interior crossings of their multiplicity,
///   nu = kernel dimension at the endpoint.
/// Requires a positive definite generator; other paths are rejected.
IndexPair omega_index(const SymplecticPath& gamma, Complex omega, const Tolerances& tol = {},
                      std::vector<CrossingRecord>* records = nullptr);

/// Index and nullity at omega = 1.
IndexPair maslov_index(const SymplecticPath& gamma, const Tolerances& tol = {});

/// Dual-variational index: (i - n, nu) of the Maslov pair.
IndexPair ekeland_index(const SymplecticPath& gamma, const Tolerances& tol = {});

/// Index pair of the m-th iterate, computed by BOTH routes — the root-of-unity
/// sum over the base path and the direct sweep of the iterate path — which
/// must agree exactly. Disagreement raises ConsistencyError.
IndexPair iterated_index(const SymplecticPath& gamma, int m, const Tolerances& tol = {});

struct MeanIndexResult {
    double quadrature = 0.0;      // circle average of the omega-index
    double limit_estimate = 0.0;  // i_{k tau}/k at the last k
    std::vector<double> ratios;   // i_{k tau}/k for k = 1..k_limit
};

/// Mean index per tau. The two estimates must agree within tol.mean_tol,
/// otherwise a ResolutionError suggests a finer grid.
MeanIndexResult mean_index_detail(const SymplecticPath& gamma, const OmegaGrid& grid,
                                  int k_limit = 400, const Tolerances& tol = {});
double mean_index(const SymplecticPath& gamma, const OmegaGrid& grid,
                  const Tolerances& tol = {});
double mean_index(const SymplecticPath& gamma, const Tolerances& tol = {});

/// i_tau(gamma) >= n for positive definite generators.
bool check_positive_lower_bound(const SymplecticPath& gamma, const Tolerances& tol = {});

/// Cached omega-index evaluator for one path.
///
/// The omega-index is locally constant between unit-circle eigenvalue angles
/// of the end matrix, so the table evaluates one omega per open arc (plus the
/// angles themselves on demand) and serves every other query from the cache.
/// This makes high iterates i_{m tau} and circle quadrature cheap.
class OmegaIndexTable {
public:
    explicit OmegaIndexTable(SymplecticPath gamma, Tolerances tol = {});

    const SymplecticPath& path() const { return gamma_; }
    /// Distinct unit-circle eigenvalue angles of the end matrix, sorted.
    const std::vector<double>& spectrum_angles() const { return angles_; }
    double min_angle_gap() const;

    long index_at_angle(double theta) const;
    int nullity_at_angle(double theta) const;
    IndexPair pair_at_angle(double theta) const;

    /// Bott-route iterate data: sums of the omega-pairs over m-th roots of 1.
    IndexPair iterate_pair(long m) const;

    /// Exact circle average of the omega-index (the integrand is constant on
    /// each arc between spectrum angles).
    double circle_average() const;

private:
    long arc_value(std::size_t arc) const;
    std::optional<std::size_t> matching_angle(double theta) const;

    SymplecticPath gamma_;
    Tolerances tol_;
    std::vector<double> angles_;
    std::vector<int> angle_nullity_;
    mutable std::mutex mutex_;
    mutable std::vector<std::optional<long>> arc_cache_;
    mutable std::vector<std::optional<long>> angle_cache_;
};

}  // namespace sil
