#include "sil/omega_index.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace sil {

namespace {

constexpr double kGolden = 0.6180339887498949;  // 1/phi

double matrix_scale(const Matrix& M) { return std::max(1.0, M.norm()); }

double min_eig_distance(const ComplexVector& eigs, Complex omega) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < eigs.size(); ++j) d = std::min(d, std::abs(eigs[j] - omega));
    return d;
}

double abs_det_at(const SymplecticPath& gamma, double t, Complex omega) {
    ComplexMatrix A = gamma.at(t).cast<Complex>();
    A.diagonal().array() -= omega;
    return std::abs(A.partialPivLu().determinant());
}

Eigen::VectorXd singular_values_at(const SymplecticPath& gamma, double t, Complex omega) {
    ComplexMatrix A = gamma.at(t).cast<Complex>();
    A.diagonal().array() -= omega;
    Eigen::JacobiSVD<ComplexMatrix> svd(A);
    return svd.singularValues();
}

/// Golden-section minimization of f on [a, b] down to a window of width w.
template <typename F>
double golden_min(F&& f, double a, double b, double w) {
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > w) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

struct RefinedCrossing {
    double t;
    int mult;
    double sigma_min;
    bool low_confidence;
};

/// Refine one unimodal dip of |det| inside [a, b] and classify the kernel.
std::optional<RefinedCrossing> refine_dip(const SymplecticPath& gamma, Complex omega, double a,
                                          double b, const Tolerances& tol) {
    const double T = gamma.tau();
    const double window = std::max(1e-12 * T, 8.0 * std::numeric_limits<double>::epsilon() * T);
    double t_hat =
        golden_min([&](double t) { return abs_det_at(gamma, t, omega); }, a, b, window);

    Eigen::VectorXd sv = singular_values_at(gamma, t_hat, omega);
    const double scale = matrix_scale(gamma.at(t_hat));
    const double tight = tol.rank_tol * scale;
    const double loose = 3e-3 * scale;

    int tight_count = static_cast<int>((sv.array() < tight).count());
    int loose_count = static_cast<int>((sv.array() < loose).count());
    if (loose_count > tight_count) {
        // Ambiguous: |det| has a flat noise floor at higher-order zeros, so the
        // located time can be off by more than the kernel threshold tolerates.
        // The smallest singular value has no such floor; re-refine on it,
        // never leaving the current dip's bracket (a nearby crossing outside
        // it must not capture the search).
        double lo = std::max(a, t_hat - 5e-3 * T);
        double hi = std::min(b, t_hat + 5e-3 * T);
        if (hi > lo) {
            t_hat = golden_min(
                [&](double t) { return singular_values_at(gamma, t, omega).minCoeff(); },
                lo, hi, window);
            sv = singular_values_at(gamma, t_hat, omega);
            tight_count = static_cast<int>((sv.array() < tight).count());
        }
    }
    if (tight_count == 0) return std::nullopt;

    bool low_conf = false;
    for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv[j] >= tight && sv[j] < 10.0 * tight) low_conf = true;

    return RefinedCrossing{t_hat, tight_count, sv.minCoeff(), low_conf};
}

void push_found(std::vector<RefinedCrossing>& found, const RefinedCrossing& r) {
    for (const auto& prev : found)
        if (std::abs(prev.t - r.t) <= 1e-12 + 1e-9 * std::abs(r.t)) return;
    found.push_back(r);
}

/// Scan [a, b] uniformly, refine every dip of |det|, and re-scan a small
/// window around each hit: one-sided index limits produce pairs of crossings
/// separated by ~2 epsilon that can share a single scan minimum.
void scan_chunk(const SymplecticPath& gamma, Complex omega, double a, double b, int points,
                const Tolerances& tol, std::vector<RefinedCrossing>& found) {
    const double span = b - a;
    if (span <= 0.0) return;
    std::vector<double> ts(points + 1), vs(points + 1);
    for (int k = 0; k <= points; ++k) {
        ts[k] = a + span * k / points;
        vs[k] = abs_det_at(gamma, ts[k], omega);
    }
    const double step = span / points;
    for (int k = 1; k < points; ++k) {
        if (!(vs[k] <= vs[k - 1] && vs[k] <= vs[k + 1])) continue;
        auto r = refine_dip(gamma, omega, ts[k - 1], ts[k + 1], tol);
        if (!r) continue;
        push_found(found, *r);
        // partner hunt at finer resolution around the hit
        double lo = std::max(a, r->t - 4.0 * step);
        double hi = std::min(b, r->t + 4.0 * step);
        const int fine = 64;
        std::vector<double> fts(fine + 1), fvs(fine + 1);
        for (int j = 0; j <= fine; ++j) {
            fts[j] = lo + (hi - lo) * j / fine;
            fvs[j] = abs_det_at(gamma, fts[j], omega);
        }
        for (int j = 1; j < fine; ++j) {
            if (!(fvs[j] <= fvs[j - 1] && fvs[j] <= fvs[j + 1])) continue;
            if (std::abs(fts[j] - r->t) <= 2.0 * (hi - lo) / fine) continue;  // the hit itself
            if (auto r2 = refine_dip(gamma, omega, fts[j - 1], fts[j + 1], tol))
                push_found(found, *r2);
        }
    }
    // Edge hunts when the scan runs downhill into an edge: geometric samples
    // catch crossings at any distance scale from the edge.
    for (int side = 0; side < 2; ++side) {
        bool toward_b = (side == 1);
        if (toward_b ? !(vs[points] < vs[points - 1]) : !(vs[0] < vs[1])) continue;
        std::vector<double> gts, gvs;
        for (int j = 0; j < 44; ++j) {
            double d = span * std::pow(0.5, j + 1);
            gts.push_back(toward_b ? b - d : a + d);
            gvs.push_back(abs_det_at(gamma, gts.back(), omega));
        }
        for (std::size_t j = 1; j + 1 < gts.size(); ++j) {
            if (gvs[j] <= gvs[j - 1] && gvs[j] <= gvs[j + 1]) {
                double lo = std::min(gts[j - 1], gts[j + 1]);
                double hi = std::max(gts[j - 1], gts[j + 1]);
                if (auto r = refine_dip(gamma, omega, lo, hi, tol)) push_found(found, *r);
            }
        }
    }
}

/// Hunt every |det| dip inside [a, b], chunked so that the scan resolution
/// stays at a fixed fraction of the sample grid spacing.
void hunt_span(const SymplecticPath& gamma, Complex omega, double a, double b, double grid_h,
               const Tolerances& tol, std::vector<RefinedCrossing>& found) {
    const double chunk_width = 64.0 * grid_h;
    double lo = a;
    while (lo < b) {
        double hi = std::min(b, lo + chunk_width);
        int points = static_cast<int>(std::ceil((hi - lo) / (grid_h / 16.0)));
        points = std::clamp(points, 64, 1024);
        scan_chunk(gamma, omega, lo, hi, points, tol, found);
        lo = hi;
    }
}

}  // namespace

OmegaGrid OmegaGrid::uniform(int resolution) {
    if (resolution < 2 || resolution % 2 != 0)
        throw DomainError("OmegaGrid: resolution must be even and >= 2");
    OmegaGrid g;
    g.resolution = resolution;
    g.angles.resize(resolution);
    for (int k = 0; k < resolution; ++k) g.angles[k] = kTwoPi * k / resolution;
    return g;
}

int kernel_dimension(const Matrix& M, Complex omega, double rank_tol_rel) {
    ComplexMatrix A = M.cast<Complex>();
    A.diagonal().array() -= omega;
    Eigen::JacobiSVD<ComplexMatrix> svd(A);
    const double thresh = rank_tol_rel * matrix_scale(M);
    return (svd.singularValues().array() < thresh).count();
}

std::vector<double> unit_circle_spectrum_angles(const Matrix& M, const Tolerances& tol) {
    // Numerical Floquet multipliers drift off the circle, and a perturbed
    // defective unit eigenvalue splits by the square root of the backward
    // error, so candidate angles use a loose modulus window and are confirmed
    // by the kernel dimension at the angle.
    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    const double circle_tol = 1e-5;
    std::vector<double> raw;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        Complex lam = es.eigenvalues()[j];
        if (std::abs(std::abs(lam) - 1.0) <= circle_tol) {
            double th = wrap_angle(std::arg(lam));
            // snap numerically smeared angles onto the special points 0 and pi
            if (th <= 1e-4 || kTwoPi - th <= 1e-4) th = 0.0;
            if (std::abs(th - M_PI) <= 1e-4) th = M_PI;
            raw.push_back(th);
        }
    }
    std::sort(raw.begin(), raw.end());
    std::vector<double> angles;
    for (double th : raw)
        if (angles.empty() || th - angles.back() > std::max(tol.angle_tol, 1e-6))
            angles.push_back(th);
    if (angles.size() > 1 && kTwoPi - angles.back() + angles.front() <= 1e-6)
        angles.pop_back();
    // keep only angles where the end matrix really is degenerate
    std::vector<double> confirmed;
    for (double th : angles)
        if (kernel_dimension(M, std::polar(1.0, th), tol.rank_tol) > 0) confirmed.push_back(th);
    return confirmed;
}

int nullity(const SymplecticPath& gamma, Complex omega, double rank_tol_rel) {
    return kernel_dimension(gamma.end_matrix(), omega, rank_tol_rel);
}

std::vector<CrossingRecord> interior_crossings(const SymplecticPath& gamma, Complex omega,
                                               const Tolerances& tol) {
    if (std::abs(std::abs(omega) - 1.0) > 1e-12)
        throw DomainError("interior_crossings: omega must lie on the unit circle");

    const auto& eigs = gamma.sample_eigenvalues();
    const std::size_t M = eigs.size() - 1;
    const double T = gamma.tau();
    const double endpoint_exclusion = 1e-9 * T;
    const double candidate_ceiling = 0.6;

    std::vector<double> dist(M + 1);
    for (std::size_t i = 0; i <= M; ++i) dist[i] = min_eig_distance(eigs[i], omega);

    // Candidate cells: samples near a local minimum of the eigenvalue
    // distance, plus the two endpoint-adjacent cells (a crossing may hide
    // between the last sample and the endpoint).
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i < M; ++i) {
        bool near_min = dist[i] <= dist[i - 1] || dist[i] <= dist[i + 1];
        if ((near_min || i == 1 || i == M - 1) && dist[i] < candidate_ceiling)
            candidates.push_back(i);
    }

    // Merge candidate brackets [t_{i-1}, t_{i+1}] into disjoint spans.
    std::vector<std::pair<double, double>> spans;
    for (std::size_t i : candidates) {
        double a = gamma.time_at(i - 1);
        double b = gamma.time_at(i + 1);
        if (!spans.empty() && a <= spans.back().second)
            spans.back().second = b;
        else
            spans.emplace_back(a, b);
    }

    const double grid_h = T / static_cast<double>(M);
    std::vector<RefinedCrossing> refined;
    for (const auto& [a, b] : spans) hunt_span(gamma, omega, a, b, grid_h, tol, refined);

    std::vector<CrossingRecord> records;
    const double dedup_radius = 1e-9 * T;
    for (const auto& r : refined) {
        if (r.t <= endpoint_exclusion || r.t >= T - endpoint_exclusion) continue;
        bool duplicate = false;
        for (const auto& prev : records)
            if (std::abs(prev.t - r.t) <= dedup_radius) duplicate = true;
        if (duplicate) continue;
        CrossingRecord rec;
        rec.t = r.t;
        rec.omega_angle = wrap_angle(std::arg(omega));
        rec.multiplicity = r.mult;
        rec.refined = true;
        rec.low_confidence = r.low_confidence;
        rec.sigma_min = r.sigma_min;
        records.push_back(rec);
        if (records.size() > 64)
            throw ResolutionError("interior_crossings: crossing count not plausible; "
                                  "refinement failed to isolate crossings");
    }
    std::sort(records.begin(), records.end(),
              [](const CrossingRecord& x, const CrossingRecord& y) { return x.t < y.t; });
    return records;
}

IndexPair omega_index(const SymplecticPath& gamma, Complex omega, const Tolerances& tol,
                      std::vector<CrossingRecord>* records) {
    if (!gamma.convex_generated())
        throw UnsupportedInputError(
            "omega_index: path must be generated by a positive definite system");
    auto recs = interior_crossings(gamma, omega, tol);
    long i = 0;
    if (std::abs(omega - Complex(1.0, 0.0)) <= 1e-12) i += gamma.n();
    for (const auto& r : recs) i += r.multiplicity;
    IndexPair out;
    out.index = i;
    out.nullity = kernel_dimension(gamma.end_matrix(), omega, tol.rank_tol);
    if (records) *records = std::move(recs);
    return out;
}

IndexPair maslov_index(const SymplecticPath& gamma, const Tolerances& tol) {
    return omega_index(gamma, Complex(1.0, 0.0), tol);
}

IndexPair ekeland_index(const SymplecticPath& gamma, const Tolerances& tol) {
    IndexPair p = maslov_index(gamma, tol);
    return IndexPair{p.index - gamma.n(), p.nullity};
}

IndexPair iterated_index(const SymplecticPath& gamma, int m, const Tolerances& tol) {
    if (m <= 0) throw DomainError("iterated_index: m must be positive");

    // Route 1: sum of omega-pairs over the m-th roots of unity.
    long i_sum = 0;
    long nu_sum = 0;
    for (int k = 0; k < m; ++k) {
        double theta = kTwoPi * k / m;
        Complex w = (k == 0) ? Complex(1.0, 0.0) : std::polar(1.0, theta);
        IndexPair p = omega_index(gamma, w, tol);
        i_sum += p.index;
        nu_sum += p.nullity;
    }

    // Route 2: direct sweep of the iterate path.
    IndexPair direct = maslov_index(iterate_path(gamma, m), tol);

    if (direct.index != i_sum || direct.nullity != nu_sum) {
        std::ostringstream os;
        os << "iterated_index: route disagreement at m=" << m << ": root-sum (" << i_sum << ","
           << nu_sum << ") vs direct (" << direct.index << "," << direct.nullity << ")";
        throw ConsistencyError(os.str());
    }
    return direct;
}

MeanIndexResult mean_index_detail(const SymplecticPath& gamma, const OmegaGrid& grid,
                                  int k_limit, const Tolerances& tol) {
    if (k_limit < 1) throw DomainError("mean_index: k_limit must be positive");
    OmegaIndexTable table(gamma, tol);

    MeanIndexResult out;
    // Quadrature of the piecewise-constant integrand over the grid.
    const auto& a = grid.angles;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double next = (j + 1 < a.size()) ? a[j + 1] : a[0] + kTwoPi;
        acc += static_cast<double>(table.index_at_angle(a[j])) * (next - a[j]);
    }
    out.quadrature = acc / kTwoPi;

    // Iterate-ratio sequence via the Bott-type root sums.
    out.ratios.resize(k_limit);
    for (int k = 1; k <= k_limit; ++k)
        out.ratios[k - 1] = static_cast<double>(table.iterate_pair(k).index) / k;
    out.limit_estimate = out.ratios.back();

    if (std::abs(out.quadrature - out.limit_estimate) > tol.mean_tol) {
        std::ostringstream os;
        os << "mean_index: quadrature " << out.quadrature << " and iterate limit "
           << out.limit_estimate << " disagree beyond " << tol.mean_tol
           << "; refine the omega grid or raise k_limit";
        throw ResolutionError(os.str());
    }
    return out;
}

double mean_index(const SymplecticPath& gamma, const OmegaGrid& grid, const Tolerances& tol) {
    return mean_index_detail(gamma, grid, 400, tol).quadrature;
}

double mean_index(const SymplecticPath& gamma, const Tolerances& tol) {
    return mean_index(gamma, OmegaGrid::uniform(1024), tol);
}

bool check_positive_lower_bound(const SymplecticPath& gamma, const Tolerances& tol) {
    return maslov_index(gamma, tol).index >= gamma.n();
}

// ---------------------------------------------------------------------------
// OmegaIndexTable

OmegaIndexTable::OmegaIndexTable(SymplecticPath gamma, Tolerances tol)
    : gamma_(std::move(gamma)), tol_(tol) {
    if (!gamma_.convex_generated())
        throw UnsupportedInputError(
            "OmegaIndexTable: path must be generated by a positive definite system");
    angles_ = unit_circle_spectrum_angles(gamma_.end_matrix(), tol_);
    angle_nullity_.resize(angles_.size());
    for (std::size_t j = 0; j < angles_.size(); ++j)
        angle_nullity_[j] =
            kernel_dimension(gamma_.end_matrix(), std::polar(1.0, angles_[j]), tol_.rank_tol);
    arc_cache_.assign(std::max<std::size_t>(angles_.size(), 1), std::nullopt);
    angle_cache_.assign(angles_.size(), std::nullopt);
}

double OmegaIndexTable::min_angle_gap() const {
    if (angles_.size() < 2) return kTwoPi;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < angles_.size(); ++j)
        gap = std::min(gap, angles_[j + 1] - angles_[j]);
    gap = std::min(gap, kTwoPi - angles_.back() + angles_.front());
    return gap;
}

std::optional<std::size_t> OmegaIndexTable::matching_angle(double theta) const {
    for (std::size_t j = 0; j < angles_.size(); ++j) {
        double d = std::abs(theta - angles_[j]);
        d = std::min(d, kTwoPi - d);
        if (d <= tol_.angle_tol) return j;
    }
    return std::nullopt;
}

long OmegaIndexTable::arc_value(std::size_t arc) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (arc_cache_[arc]) return *arc_cache_[arc];
    }
    double lo, len;
    if (angles_.empty()) {
        lo = 0.0;
        len = kTwoPi;
    } else {
        lo = angles_[arc];
        double hi = (arc + 1 < angles_.size()) ? angles_[arc + 1] : angles_.front() + kTwoPi;
        len = hi - lo;
    }
    // Sample the arc at an irrational fraction to dodge coincidences with
    // special points like -1.
    double theta = wrap_angle(lo + 0.3819660112501051 * len);
    long v = omega_index(gamma_, std::polar(1.0, theta), tol_).index;
    std::lock_guard<std::mutex> lock(mutex_);
    arc_cache_[arc] = v;
    return v;
}

long OmegaIndexTable::index_at_angle(double theta) const {
    theta = wrap_angle(theta);
    if (auto j = matching_angle(theta)) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (angle_cache_[*j]) return *angle_cache_[*j];
        }
        Complex w = (angles_[*j] <= 1e-12) ? Complex(1.0, 0.0) : std::polar(1.0, angles_[*j]);
        long v = omega_index(gamma_, w, tol_).index;
        std::lock_guard<std::mutex> lock(mutex_);
        angle_cache_[*j] = v;
        return v;
    }
    if (angles_.empty()) return arc_value(0);
    // Locate the arc containing theta.
    auto it = std::upper_bound(angles_.begin(), angles_.end(), theta);
    std::size_t arc = (it == angles_.begin()) ? angles_.size() - 1 : (it - angles_.begin() - 1);
    return arc_value(arc);
}

int OmegaIndexTable::nullity_at_angle(double theta) const {
    if (auto j = matching_angle(wrap_angle(theta))) return angle_nullity_[*j];
    return 0;
}

IndexPair OmegaIndexTable::pair_at_angle(double theta) const {
    return IndexPair{index_at_angle(theta), nullity_at_angle(theta)};
}

double OmegaIndexTable::circle_average() const {
    if (angles_.empty()) return static_cast<double>(arc_value(0));
    double acc = 0.0;
    for (std::size_t a = 0; a < angles_.size(); ++a) {
        double lo = angles_[a];
        double hi = (a + 1 < angles_.size()) ? angles_[a + 1] : angles_.front() + kTwoPi;
        acc += static_cast<double>(arc_value(a)) * (hi - lo);
    }
    return acc / kTwoPi;
}

IndexPair OmegaIndexTable::iterate_pair(long m) const {
    if (m <= 0) throw DomainError("iterate_pair: m must be positive");
    long i_sum = 0;
    long nu_sum = 0;
    for (long k = 0; k < m; ++k) {
        double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(m);
        i_sum += index_at_angle(theta);
        nu_sum += nullity_at_angle(theta);
    }
    return IndexPair{i_sum, static_cast<int>(nu_sum)};
}

}  // namespace sil
