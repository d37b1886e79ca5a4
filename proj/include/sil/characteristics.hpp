#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sil/convex_body.hpp"
#include "sil/symplectic_path.hpp"
#include "sil/types.hpp"

namespace sil {

// --------------------------------------------------------------------------
// Hamiltonian H(x) = gauge(x)^alpha and its Fenchel conjugate

double hamiltonian(const ConvexBody& body, double alpha, const Vector& x);
Vector hamiltonian_grad(const ConvexBody& body, double alpha, const Vector& x);
/// Requires x != 0.
Matrix hamiltonian_hess(const ConvexBody& body, double alpha, const Vector& x);

/// H*(y) = sup_x { <x,y> - H(x) }. For gauge Hamiltonians the sup reduces to
/// a 1-D problem along the polar contact ray and is solved in closed form.
double fenchel_conjugate(const ConvexBody& body, double alpha, const Vector& y);
/// Maximizer of <x,y> - H(x), i.e. the gradient of H*. `hint` warm starts the
/// perturbed-body contact solve.
Vector fenchel_gradient(const ConvexBody& body, double alpha, const Vector& y,
                        Vector* hint = nullptr);

// --------------------------------------------------------------------------
// Closed characteristics

enum class OrbitSymmetry { unknown, symmetric, asymmetric };

/// Periodic solution (tau, x) of xdot = J N(x) on the unit gauge surface,
/// stored in the unit-speed parametrization. `curve` and `velocity` evaluate
/// the orbit and its true time derivative anywhere (tau-periodic).
struct ClosedCharacteristic {
    double tau = 0.0;
    std::vector<Vector> samples;  // x(i tau / N), i = 0..N-1
    std::function<Vector(double)> curve;
    std::function<Vector(double)> velocity;
    double action = 0.0;
    bool minimal_period = false;
    OrbitSymmetry symmetry = OrbitSymmetry::unknown;
};

/// Validates the surface and flow-equation residuals, computes the action,
/// and records minimal-period evidence. Throws NotASolutionError when the
/// curve is not a characteristic within tolerances.
ClosedCharacteristic make_characteristic(const ConvexBody& body, double tau,
                                         std::function<Vector(double)> curve,
                                         std::function<Vector(double)> velocity,
                                         int sample_count = 1024, const Tolerances& tol = {});

/// A(tau, x) = 1/2 int_0^tau (-J xdot . x) dt, recomputed on `grid` points.
double orbit_action(const ClosedCharacteristic& orbit, int grid = 4096);

struct EllipsoidOrbits {
    std::vector<ClosedCharacteristic> orbits;  // one planar circle per plane
    std::vector<ResonantPair> resonances;      // rational frequency ratios
};

/// The n planar circular characteristics of the ellipsoid with the given
/// radii, in closed form.
EllipsoidOrbits ellipsoid_characteristics(const std::vector<double>& radii,
                                          const Tolerances& tol = {});

/// Symmetric: x(t + tau/2) = -x(t). Asymmetric: the images of x and -x stay
/// apart under every time shift. Anything in between raises
/// ClassificationError with both distances in the message.
OrbitSymmetry classify_symmetry(const ConvexBody& body, const ClosedCharacteristic& orbit,
                                const Tolerances& tol = {});

/// Linearized flow along the orbit: B(s) = H''(x(s)) in the alpha-flow
/// parametrization (period tau_alpha = integral of ds/(alpha |grad j|)).
/// Positive Gaussian curvature makes B positive definite; the certified
/// margin is recorded on the returned system.
std::shared_ptr<const LinearSystem> linearize_orbit(const ConvexBody& body, double alpha,
                                                    const ClosedCharacteristic& orbit,
                                                    const Tolerances& tol = {});

// --------------------------------------------------------------------------
// Dual variational problem on mean-zero loops

/// Truncated Fourier loop u(t) = sum_{j=1..K} 2 Re(c_j e^{2 pi i j t});
/// mean-zero by construction (no j = 0 mode).
struct DualLoop {
    int n = 0;
    int K = 0;
    double alpha = 1.5;
    std::vector<ComplexVector> coeff;  // coeff[j-1] = c_j in C^{2n}

    Vector value(double t) const;
    Vector primitive(double t) const;  // Pi u: mean-zero antiderivative
    double coeff_norm() const;

    static DualLoop zero(int n, int K, double alpha);
};

/// f(u) = int_0^1 { (Ju . Pi u)/2 + H*(-J u) } dt. The quadratic term is
/// evaluated exactly in Fourier space, the conjugate term by the rectangle
/// rule on quad_points >= 8K samples (0 = auto).
double dual_action(const ConvexBody& body, double alpha, const DualLoop& u, int quad_points = 0);

/// Gradient in coefficient space (same discretization as dual_action).
DualLoop dual_action_gradient(const ConvexBody& body, double alpha, const DualLoop& u,
                              int quad_points = 0);

struct FinderConfig {
    int K = 64;
    int quad_points = 0;  // auto: max(8K, 256)
    int random_seeds = 200;
    std::uint64_t rng_seed = 20240917;
    double grad_tol = 1e-9;
    int descent_iters = 400;
    int polish_iters = 1500;
    int newton_iters = 40;
    double near_critical_threshold = 5e-2;  // seeds below skip the descent phase
    double dedup_shift_tol = 1e-4;          // loop-space dedup (time shift / sign flip)
    double geom_dedup_tol = 1e-3;           // orbit-image dedup, relative
    int orbit_samples = 1024;
};

struct SeedOutcome {
    int seed = 0;
    bool converged = false;
    double grad_norm = 0.0;
    double value = 0.0;
    std::string note;
};

struct CriticalPointSet {
    std::vector<DualLoop> loops;
    std::vector<SeedOutcome> outcomes;
};

/// Analytic one-mode circle loops (one per plane of the underlying ellipsoid
/// radii) followed by `random_count` decaying random loops.
std::vector<DualLoop> default_seeds(const ConvexBody& body, double alpha, int K,
                                    int random_count, std::uint64_t rng_seed);

/// First-order descent with line search, then a quasi-Newton stage. Seeds
/// that start near-critical are polished with a damped Gauss-Newton solve of
/// grad f = 0 instead (descent would walk away from saddle-type critical
/// points). Converged loops are deduplicated under time shift and sign flip.
CriticalPointSet find_critical_points(const ConvexBody& body, double alpha, int K,
                                      const std::vector<DualLoop>& seeds,
                                      const FinderConfig& cfg = {});

struct ReconstructedOrbit {
    ClosedCharacteristic orbit;
    int multiplicity = 1;  // 1/m is the minimal period of the 1-periodic solution
    double energy = 0.0;   // H level of the reconstructed solution
    double tau_alpha = 0.0;
};

/// Reconstructs the closed characteristic from a critical loop: z = Pi u + xi
/// solves the alpha-flow problem, is rescaled onto the gauge surface, and is
/// reparametrized to unit speed. Throws NotASolutionError when u is not
/// critical enough or the reconstruction residual is out of tolerance.
ReconstructedOrbit u_to_characteristic(const ConvexBody& body, double alpha, const DualLoop& u,
                                       const FinderConfig& cfg = {}, const Tolerances& tol = {});

/// Critical loop of the m-th iterate of the orbit.
DualLoop characteristic_to_u(const ConvexBody& body, double alpha,
                             const ClosedCharacteristic& orbit, int m, int K = 64);

struct OrbitSearchResult {
    std::vector<ClosedCharacteristic> orbits;  // geometrically distinct, by action
    std::vector<SeedOutcome> outcomes;
    std::vector<ResonantPair> resonances;
};

/// Full pipeline: seed sweep, critical-point search, reconstruction,
/// geometric deduplication, symmetry classification.
OrbitSearchResult find_closed_characteristics(const ConvexBody& body, double alpha,
                                              const FinderConfig& cfg = {},
                                              const Tolerances& tol = {});

}  // namespace sil
