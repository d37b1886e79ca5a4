#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sil/types.hpp"

#include <json.hpp>

namespace sil {

/// One monomial of the even perturbation p(x/|x|).
struct PerturbationTerm {
    double coef = 0.0;
    std::vector<int> powers;  // length 2n, even total degree
};

struct SupportResult {
    double polar = 0.0;  // gauge of the polar body at y
    Vector point;        // contact point on the unit gauge sphere
};

/// Convex body with gauge j, its derivatives, and the polar gauge.
///
/// Two families: ellipsoids {x : 1/2 sum |x_k|^2 / r_k^2 <= 1} (|x_k|^2 is
/// the k-th symplectic coordinate pair) and small even perturbations
/// j(x) = j_E(x) (1 + eps p(x/|x|)) of them. Both are symmetric about the
/// origin. Perturbations are rejected when sampling shows the gauge Hessian
/// loses positive semidefiniteness.
class ConvexBody {
public:
    ConvexBody() = default;  // empty placeholder; use the factories

    static ConvexBody ellipsoid(std::vector<double> radii);
    static ConvexBody perturbed_ellipsoid(std::vector<double> radii, double epsilon,
                                          std::vector<PerturbationTerm> terms);

    int n() const { return n_; }
    int dim() const { return 2 * n_; }
    bool symmetric() const { return true; }
    const std::string& kind() const { return kind_; }
    const std::vector<double>& radii() const { return radii_; }
    double epsilon() const { return epsilon_; }
    const std::vector<PerturbationTerm>& terms() const { return terms_; }

    double gauge(const Vector& x) const;
    Vector gauge_grad(const Vector& x) const;
    Matrix gauge_hess(const Vector& x) const;

    double polar_gauge(const Vector& y) const;
    /// Polar gauge together with the maximizing contact point; `hint` warm
    /// starts the perturbed-body solve.
    SupportResult support(const Vector& y, const Vector* hint = nullptr) const;

    /// Smallest tangential eigenvalue of the gauge Hessian over a sample of
    /// directions (the radial eigenvalue is identically zero).
    double convexity_margin() const { return convexity_margin_; }

private:
    void finalize();

    double ellipsoid_gauge(const Vector& x) const;
    double perturbation(const Vector& u) const;           // p(u), |u| = 1
    Vector perturbation_grad(const Vector& u) const;      // dp/du
    Matrix perturbation_hess(const Vector& u) const;
    double angular(const Vector& x) const;                // p(x/|x|)
    Vector angular_grad(const Vector& x) const;
    Matrix angular_hess(const Vector& x) const;

    int n_ = 0;
    std::string kind_;
    std::vector<double> radii_;
    double epsilon_ = 0.0;
    std::vector<PerturbationTerm> terms_;
    Vector dinv_;  // diagonal of D^{-1} (ellipsoid metric inverse)
    Vector d_;     // diagonal of D
    double convexity_margin_ = 0.0;
};

/// Body specification file contents: the body plus the exponent alpha.
struct BodySpec {
    ConvexBody body;
    double alpha = 1.5;

    static BodySpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static BodySpec load(const std::string& path);
};

struct ResonantPair {
    int j = 0, k = 0;
    long p = 0, q = 0;  // r_j / r_k close to p/q
};

/// Pairs of radii whose ratio is rational with denominator <= max_den
/// (within 1e-9). Such ellipsoids carry orbit continua; the finder only
/// reports representatives.
std::vector<ResonantPair> resonant_pairs(const std::vector<double>& radii, long max_den = 50);

}  // namespace sil
