#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sil/characteristics.hpp"
#include "sil/omega_index.hpp"
#include "sil/splitting.hpp"
#include "sil/symplectic_path.hpp"

#include <json.hpp>

namespace sil {

/// One orbit with its linearized path and cached index machinery.
struct OrbitData {
    ClosedCharacteristic orbit;
    std::shared_ptr<const LinearSystem> system;
    SymplecticPath path;
    std::shared_ptr<OmegaIndexTable> table;
    double tau_alpha = 0.0;
    double mean_index = 0.0;
    long s_plus_at_one = 0;         // splitting S+ of the end matrix at 1
    long s_plus_square_at_one = 0;  // splitting S+ of the squared end matrix at 1
    IndexPair first;                // (i, nu) at m = 1
};

OrbitData prepare_orbit_data(const ConvexBody& body, double alpha,
                             const ClosedCharacteristic& orbit, int steps = 0,
                             const Tolerances& tol = {});

/// [i_{m tau}, i_{m tau} + nu_{m tau}] for one iterate.
struct IndexInterval {
    int orbit = 0;
    long m = 0;
    long lo = 0;
    long hi = 0;         // lo + nullity
    int nullity = 0;
};

/// Intervals for m = 1..m_max. The iteration inequalities (index gaps >= 2,
/// next index above the previous interval interior) are theorems for convex
/// bodies; violations raise ConsistencyError.
std::vector<IndexInterval> index_intervals(const OrbitData& data, int m_max, int orbit_id = 0);

struct CoverageRow {
    long k = 0;
    long target = 0;  // 2k - 2 + n
    std::vector<std::pair<int, long>> candidates;  // (orbit, m) with target inside
};

struct CoverageResult {
    std::vector<CoverageRow> rows;
    bool all_covered = false;
    bool matching_exists = false;  // system of distinct representatives
    std::vector<std::pair<int, long>> assignment;  // aligned with rows; (-1,0) if none
};

/// For each k <= k_max: which (orbit, m) covers 2k-2+n, and does a system of
/// distinct representatives exist.
CoverageResult covering_injection_check(const std::vector<OrbitData>& orbits, int k_max);

struct CertificateEntry {
    long m = 0;
    long i_2m = 0;
    int nu_2m = 0;
    bool conditions[6] = {false, false, false, false, false, false};
    bool equality_case = false;  // equality in one of the two-sided bounds
    bool elliptic_ok = true;     // end matrix elliptic whenever equality holds
};

struct JumpCertificate {
    long N = 0;
    std::vector<CertificateEntry> entries;
    bool all_hold = false;
    bool symmetric_pairing_ok = true;  // m_k = 2 m_{k+q2} for doubled entries
};

struct JumpSearchConfig {
    long N_max = 10000;
    int max_certificates = 64;
    int window = 8;  // m window around N / mean_index
};

/// Brute-force scan over N: entry k must admit an iterate count m_k making
/// the six index identities/bounds hold simultaneously. The orbit list is the
/// base list extended by the doubled asymmetric representatives (q2 of them).
std::vector<JumpCertificate> index_jump_search(const std::vector<OrbitData>& orbits, int q1,
                                               int q2, const JumpSearchConfig& cfg = {});

/// Re-derives every condition of the certificate from freshly built tables.
bool recheck_certificate(const std::vector<OrbitData>& orbits, int q1, int q2,
                         const JumpCertificate& cert, const Tolerances& tol = {});

struct HalfPathCheck {
    bool applicable = false;      // orbit classified symmetric
    bool identity_holds = false;  // gamma(t + tau/2) = gamma(t) gamma(tau/2)
    double identity_error = 0.0;
    bool index_route_agrees = false;  // full-path pair == doubled half path
};

HalfPathCheck symmetric_halfpath_check(const ConvexBody& body, double alpha,
                                       const ClosedCharacteristic& orbit,
                                       const Tolerances& tol = {});

struct CountConfig {
    FinderConfig finder;
    int k_max = 20;
    int m_max = 20;
    JumpSearchConfig jump;
    int steps = 0;  // linearized-path integration steps (0 = auto)
};

struct InjectionRow {
    int s = 0;
    long target = 0;  // 2(N - s + 1) - 2 + n
    int orbit = -1;
    long m = 0;
};

struct CountReport {
    int n = 0;
    int q1 = 0;  // symmetric classes
    int q2 = 0;  // asymmetric pairs
    int total = 0;
    bool verdict = false;       // total >= n, backed by certificate + injection
    bool inconclusive = false;  // incomplete orbit set / no certificate found
    std::string diagnosis;
    std::vector<OrbitData> orbits;  // entry list (symmetric + one per pair)
    std::vector<std::vector<IndexInterval>> intervals;
    CoverageResult coverage;
    std::vector<JumpCertificate> certificates;
    std::vector<InjectionRow> injection;
    std::vector<ResonantPair> resonances;
    std::vector<SeedOutcome> seed_outcomes;
};

/// End-to-end count verification: orbit sweep, symmetry classes, iteration
/// inequalities, coverage, common index jump, injection table, and the final
/// q1 + 2 q2 >= n verdict. A convex symmetric body can never violate the
/// count theorem, so any shortfall is reported as inconclusive, never as a
/// violation.
CountReport count_lower_bound_check(const ConvexBody& body, double alpha,
                                    const CountConfig& cfg = {}, const Tolerances& tol = {});

/// Machine-readable report (schema_version inside).
nlohmann::json count_report_json(const CountReport& report, const ConvexBody& body, double alpha);

}  // namespace sil
