#include "sil/convex_body.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sil {

namespace {

/// Deterministic direction sample for convexity certification.
std::vector<Vector> direction_sample(int dim, int count) {
    std::vector<Vector> dirs;
    dirs.reserve(count);
    // Weyl-type low-discrepancy angles; no RNG so certification is stable.
    double state = 0.5;
    for (int i = 0; i < count; ++i) {
        Vector v(dim);
        for (int d = 0; d < dim; ++d) {
            state = std::fmod(state + 0.7548776662466927 * (d + 1) + 0.1327 * (i + 1), 1.0);
            v[d] = std::sin(kTwoPi * state + 0.3 * d + 1.7 * i);
        }
        double nv = v.norm();
        if (nv < 1e-12) v[0] = 1.0, nv = 1.0;
        dirs.push_back(v / nv);
    }
    return dirs;
}

}  // namespace

ConvexBody ConvexBody::ellipsoid(std::vector<double> radii) {
    if (radii.empty()) throw DimensionError("ellipsoid: need at least one radius");
    for (double r : radii)
        if (r <= 0.0) throw DomainError("ellipsoid: radii must be positive");
    ConvexBody b;
    b.n_ = static_cast<int>(radii.size());
    b.kind_ = "ellipsoid";
    b.radii_ = std::move(radii);
    b.finalize();
    return b;
}

ConvexBody ConvexBody::perturbed_ellipsoid(std::vector<double> radii, double epsilon,
                                           std::vector<PerturbationTerm> terms) {
    ConvexBody b = ellipsoid(std::move(radii));
    b.kind_ = "perturbed";
    b.epsilon_ = epsilon;
    for (const auto& t : terms) {
        if (static_cast<int>(t.powers.size()) != b.dim())
            throw DimensionError("perturbation term: powers must have length 2n");
        long total = 0;
        for (int p : t.powers) {
            if (p < 0) throw DomainError("perturbation term: negative power");
            total += p;
        }
        if (total % 2 != 0)
            throw DomainError("perturbation term: total degree must be even (symmetric body)");
    }
    b.terms_ = std::move(terms);
    b.finalize();
    return b;
}

void ConvexBody::finalize() {
    d_ = Vector(2 * n_);
    dinv_ = Vector(2 * n_);
    for (int k = 0; k < n_; ++k) {
        double v = 1.0 / (radii_[k] * radii_[k]);
        d_[k] = d_[n_ + k] = v;
        dinv_[k] = dinv_[n_ + k] = 1.0 / v;
    }
    // Certify convexity: tangential eigenvalues of the gauge Hessian must stay
    // positive. The radial eigenvalue is ~0 by homogeneity; deflate it upward
    // so the minimum eigenvalue seen is the smallest tangential one.
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& u : direction_sample(dim(), 128)) {
        Matrix H = gauge_hess(u);
        H += 2.0 * (H.norm() + 1.0) * u * u.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues()[0]);
    }
    convexity_margin_ = margin;
    if (kind_ == "perturbed" && margin <= 0.0) {
        std::ostringstream os;
        os << "perturbation too large: gauge Hessian margin " << margin;
        throw DomainError(os.str());
    }
}

double ConvexBody::ellipsoid_gauge(const Vector& x) const {
    return std::sqrt(0.5 * x.dot(d_.asDiagonal() * x));
}

double ConvexBody::perturbation(const Vector& u) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        double m = t.coef;
        for (int d = 0; d < dim(); ++d)
            for (int p = 0; p < t.powers[d]; ++p) m *= u[d];
        acc += m;
    }
    return acc;
}

Vector ConvexBody::perturbation_grad(const Vector& u) const {
    Vector g = Vector::Zero(dim());
    for (const auto& t : terms_) {
        for (int d = 0; d < dim(); ++d) {
            if (t.powers[d] == 0) continue;
            double m = t.coef * t.powers[d];
            for (int e = 0; e < dim(); ++e) {
                int p = t.powers[e] - (e == d ? 1 : 0);
                for (int q = 0; q < p; ++q) m *= u[e];
            }
            g[d] += m;
        }
    }
    return g;
}

Matrix ConvexBody::perturbation_hess(const Vector& u) const {
    Matrix H = Matrix::Zero(dim(), dim());
    for (const auto& t : terms_) {
        for (int a = 0; a < dim(); ++a) {
            for (int b = a; b < dim(); ++b) {
                double factor;
                if (a == b) {
                    if (t.powers[a] < 2) continue;
                    factor = t.coef * t.powers[a] * (t.powers[a] - 1);
                } else {
                    if (t.powers[a] < 1 || t.powers[b] < 1) continue;
                    factor = t.coef * t.powers[a] * t.powers[b];
                }
                double m = factor;
                for (int e = 0; e < dim(); ++e) {
                    int p = t.powers[e];
                    if (e == a) p -= (a == b) ? 2 : 1;
                    if (e == b && a != b) p -= 1;
                    for (int q = 0; q < p; ++q) m *= u[e];
                }
                H(a, b) += m;
                if (a != b) H(b, a) += m;
            }
        }
    }
    return H;
}

double ConvexBody::angular(const Vector& x) const { return perturbation(x / x.norm()); }

Vector ConvexBody::angular_grad(const Vector& x) const {
    double r = x.norm();
    Vector u = x / r;
    Vector pg = perturbation_grad(u);
    return (pg - u * u.dot(pg)) / r;
}

Matrix ConvexBody::angular_hess(const Vector& x) const {
    double r = x.norm();
    Vector u = x / r;
    Matrix P = Matrix::Identity(dim(), dim()) - u * u.transpose();
    Vector pg = perturbation_grad(u);
    Matrix ph = perturbation_hess(u);
    Vector Ppg = P * pg;
    return (P * ph * P - Ppg * u.transpose() - u * Ppg.transpose() - u.dot(pg) * P) / (r * r);
}

double ConvexBody::gauge(const Vector& x) const {
    if (x.size() != dim()) throw DimensionError("gauge: wrong dimension");
    double je = ellipsoid_gauge(x);
    if (terms_.empty() || epsilon_ == 0.0) return je;
    if (x.norm() == 0.0) return 0.0;
    return je * (1.0 + epsilon_ * angular(x));
}

Vector ConvexBody::gauge_grad(const Vector& x) const {
    if (x.size() != dim()) throw DimensionError("gauge_grad: wrong dimension");
    if (x.norm() < 1e-14) throw SingularityError("gauge_grad: x too close to 0");
    double Q = 0.5 * x.dot(d_.asDiagonal() * x);
    double je = std::sqrt(Q);
    Vector ge = (d_.asDiagonal() * x) / (2.0 * je);
    if (terms_.empty() || epsilon_ == 0.0) return ge;
    double w = 1.0 + epsilon_ * angular(x);
    return ge * w + je * epsilon_ * angular_grad(x);
}

Matrix ConvexBody::gauge_hess(const Vector& x) const {
    if (x.size() != dim()) throw DimensionError("gauge_hess: wrong dimension");
    if (x.norm() < 1e-14) throw SingularityError("gauge_hess: x too close to 0");
    double Q = 0.5 * x.dot(d_.asDiagonal() * x);
    double je = std::sqrt(Q);
    Vector Dx = d_.asDiagonal() * x;
    Matrix He = Matrix(d_.asDiagonal()) / (2.0 * je) - Dx * Dx.transpose() / (4.0 * Q * je);
    if (terms_.empty() || epsilon_ == 0.0) return He;
    double w = 1.0 + epsilon_ * angular(x);
    Vector ge = Dx / (2.0 * je);
    Vector ag = angular_grad(x);
    return He * w + epsilon_ * (ge * ag.transpose() + ag * ge.transpose()) +
           epsilon_ * je * angular_hess(x);
}

SupportResult ConvexBody::support(const Vector& y, const Vector* hint) const {
    if (y.size() != dim()) throw DimensionError("support: wrong dimension");
    SupportResult out;
    if (y.norm() == 0.0) {
        out.polar = 0.0;
        out.point = Vector::Zero(dim());
        return out;
    }
    if (terms_.empty() || epsilon_ == 0.0) {
        double a = std::sqrt(2.0 * y.dot(dinv_.asDiagonal() * y));
        out.polar = a;
        out.point = (2.0 / a) * (dinv_.asDiagonal() * y);
        return out;
    }
    // Minimize F(x) = j(x)^2/2 - <x, y>: at the optimum j(x*) grad j(x*) = y,
    // the polar gauge equals j(x*) and the contact point is x*/j(x*).
    Vector x = hint && hint->size() == dim() && hint->norm() > 1e-12
                   ? *hint
                   : Vector(2.0 * (dinv_.asDiagonal() * y));
    double fx;
    auto eval = [&](const Vector& z, Vector* grad) {
        double j = gauge(z);
        if (grad) *grad = j * gauge_grad(z) - y;
        return 0.5 * j * j - z.dot(y);
    };
    Vector g(dim());
    fx = eval(x, &g);
    for (int it = 0; it < 60; ++it) {
        if (g.norm() <= 1e-13 * std::max(1.0, y.norm())) break;
        double j = gauge(x);
        Vector gj = gauge_grad(x);
        Matrix H = gj * gj.transpose() + j * gauge_hess(x);
        Vector step = H.ldlt().solve(-g);
        if (!step.allFinite()) step = -g;
        double s = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            Vector xn = x + s * step;
            if (xn.norm() > 1e-14) {
                double fn = eval(xn, nullptr);
                if (fn < fx) {
                    x = xn;
                    fx = fn;
                    break;
                }
            }
            s *= 0.5;
        }
        fx = eval(x, &g);
    }
    if (g.norm() > 1e-8 * std::max(1.0, y.norm()))
        throw ResolutionError("support: Newton solve for the polar gauge did not converge");
    double j = gauge(x);
    out.polar = j;
    out.point = x / j;
    return out;
}

double ConvexBody::polar_gauge(const Vector& y) const { return support(y).polar; }

BodySpec BodySpec::from_json(const nlohmann::json& j) {
    BodySpec spec;
    if (!j.contains("n")) throw DomainError("body spec: missing field 'n'");
    if (!j.contains("kind")) throw DomainError("body spec: missing field 'kind'");
    if (!j.contains("radii")) throw DomainError("body spec: missing field 'radii'");
    int n = j.at("n").get<int>();
    std::string kind = j.at("kind").get<std::string>();
    std::vector<double> radii = j.at("radii").get<std::vector<double>>();
    if (static_cast<int>(radii.size()) != n)
        throw DomainError("body spec: field 'radii' must have length n");
    spec.alpha = j.value("alpha", 1.5);
    if (!(spec.alpha > 1.0 && spec.alpha < 2.0))
        throw DomainError("body spec: field 'alpha' must lie in (1, 2)");
    if (kind == "ellipsoid") {
        spec.body = ConvexBody::ellipsoid(radii);
    } else if (kind == "perturbed") {
        if (!j.contains("perturbation"))
            throw DomainError("body spec: missing field 'perturbation'");
        const auto& p = j.at("perturbation");
        if (!p.contains("epsilon")) throw DomainError("body spec: missing 'perturbation.epsilon'");
        double eps = p.at("epsilon").get<double>();
        std::vector<PerturbationTerm> terms;
        for (const auto& t : p.value("terms", nlohmann::json::array())) {
            PerturbationTerm term;
            term.coef = t.at("coef").get<double>();
            term.powers = t.at("powers").get<std::vector<int>>();
            terms.push_back(std::move(term));
        }
        spec.body = ConvexBody::perturbed_ellipsoid(radii, eps, std::move(terms));
    } else {
        throw DomainError("body spec: field 'kind' must be 'ellipsoid' or 'perturbed'");
    }
    return spec;
}

nlohmann::json BodySpec::to_json() const {
    nlohmann::json j;
    j["n"] = body.n();
    j["kind"] = body.kind();
    j["radii"] = body.radii();
    j["alpha"] = alpha;
    if (body.kind() == "perturbed") {
        nlohmann::json p;
        p["epsilon"] = body.epsilon();
        p["terms"] = nlohmann::json::array();
        for (const auto& t : body.terms())
            p["terms"].push_back({{"coef", t.coef}, {"powers", t.powers}});
        j["perturbation"] = p;
    }
    return j;
}

BodySpec BodySpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open body spec file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("malformed JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

std::vector<ResonantPair> resonant_pairs(const std::vector<double>& radii, long max_den) {
    std::vector<ResonantPair> hits;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        for (std::size_t k = j + 1; k < radii.size(); ++k) {
            double ratio = radii[j] / radii[k];
            for (long q = 1; q <= max_den; ++q) {
                long p = std::lround(ratio * q);
                if (p <= 0) continue;
                if (std::abs(ratio - static_cast<double>(p) / q) < 1e-9) {
                    hits.push_back({static_cast<int>(j), static_cast<int>(k), p, q});
                    break;
                }
            }
        }
    }
    return hits;
}

}  // namespace sil
