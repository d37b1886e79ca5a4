#include "sil/characteristics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "sil/parallel.hpp"

namespace sil {

// --------------------------------------------------------------------------
// Hamiltonian

namespace {
void require_alpha(double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw DomainError("alpha must lie strictly between 1 and 2");
}
}  // namespace

double hamiltonian(const ConvexBody& body, double alpha, const Vector& x) {
    require_alpha(alpha);
    return std::pow(body.gauge(x), alpha);
}

Vector hamiltonian_grad(const ConvexBody& body, double alpha, const Vector& x) {
    require_alpha(alpha);
    if (x.norm() < 1e-14) return Vector::Zero(x.size());
    double j = body.gauge(x);
    return alpha * std::pow(j, alpha - 1.0) * body.gauge_grad(x);
}

Matrix hamiltonian_hess(const ConvexBody& body, double alpha, const Vector& x) {
    require_alpha(alpha);
    if (x.norm() < 1e-14) throw SingularityError("hamiltonian_hess: x = 0");
    double j = body.gauge(x);
    Vector g = body.gauge_grad(x);
    return alpha * (alpha - 1.0) * std::pow(j, alpha - 2.0) * g * g.transpose() +
           alpha * std::pow(j, alpha - 1.0) * body.gauge_hess(x);
}

double fenchel_conjugate(const ConvexBody& body, double alpha, const Vector& y) {
    require_alpha(alpha);
    double a = body.polar_gauge(y);
    if (a == 0.0) return 0.0;
    double s = std::pow(a / alpha, 1.0 / (alpha - 1.0));
    return s * a - std::pow(s, alpha);
}

Vector fenchel_gradient(const ConvexBody& body, double alpha, const Vector& y, Vector* hint) {
    require_alpha(alpha);
    if (y.norm() == 0.0) return Vector::Zero(y.size());
    SupportResult sup = body.support(y, hint);
    if (hint) *hint = sup.polar * sup.point;
    double s = std::pow(sup.polar / alpha, 1.0 / (alpha - 1.0));
    return s * sup.point;
}

// --------------------------------------------------------------------------
// Monotone reparametrization clock

namespace {

/// Cumulative integral C(t) = int_0^t rate, tabulated on a uniform grid with
/// per-interval Simpson increments, plus inverse lookup by table + Newton.
class MonotoneClock {
public:
    MonotoneClock(std::function<double(double)> rate, double domain, int table = 4096)
        : rate_(std::move(rate)), domain_(domain) {
        ts_.resize(table + 1);
        cs_.resize(table + 1);
        ts_[0] = 0.0;
        cs_[0] = 0.0;
        double h = domain / table;
        for (int i = 0; i < table; ++i) {
            double a = h * i;
            double inc = (h / 6.0) * (rate_(a) + 4.0 * rate_(a + 0.5 * h) + rate_(a + h));
            ts_[i + 1] = (i + 1 == table) ? domain : a + h;
            cs_[i + 1] = cs_[i] + inc;
        }
    }

    double total() const { return cs_.back(); }

    double forward(double t) const {
        t = std::clamp(t, 0.0, domain_);
        std::size_t i = locate(ts_, t);
        double a = ts_[i];
        double h = t - a;
        if (h == 0.0) return cs_[i];
        return cs_[i] + (h / 6.0) * (rate_(a) + 4.0 * rate_(a + 0.5 * h) + rate_(a + h));
    }

    double inverse(double c) const {
        c = std::clamp(c, 0.0, cs_.back());
        std::size_t i = locate(cs_, c);
        double t = ts_[i];
        if (i + 1 < ts_.size()) {
            double span = cs_[i + 1] - cs_[i];
            if (span > 0) t += (c - cs_[i]) / span * (ts_[i + 1] - ts_[i]);
        }
        for (int it = 0; it < 8; ++it) {
            double r = rate_(std::clamp(t, 0.0, domain_));
            if (r <= 0.0) break;
            double step = (forward(t) - c) / r;
            t = std::clamp(t - step, 0.0, domain_);
            if (std::abs(step) < 1e-15 * domain_) break;
        }
        return t;
    }

private:
    static std::size_t locate(const std::vector<double>& xs, double x) {
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t i = (it == xs.begin()) ? 0 : static_cast<std::size_t>(it - xs.begin() - 1);
        return std::min(i, xs.size() - 2);
    }

    std::function<double(double)> rate_;
    double domain_;
    std::vector<double> ts_, cs_;
};

double wrap_period(double t, double period) {
    double w = std::fmod(t, period);
    if (w < 0) w += period;
    return w;
}

Vector apply_J(const Vector& v) {
    int n = static_cast<int>(v.size()) / 2;
    Vector out(2 * n);
    out.head(n) = -v.tail(n);
    out.tail(n) = v.head(n);
    return out;
}

}  // namespace

// --------------------------------------------------------------------------
// Closed characteristics

ClosedCharacteristic make_characteristic(const ConvexBody& body, double tau,
                                         std::function<Vector(double)> curve,
                                         std::function<Vector(double)> velocity,
                                         int sample_count, const Tolerances& tol) {
    if (tau <= 0.0) throw DomainError("make_characteristic: period must be positive");
    ClosedCharacteristic orbit;
    orbit.tau = tau;
    orbit.curve = std::move(curve);
    orbit.velocity = std::move(velocity);
    orbit.samples.resize(sample_count);

    double scale = 0.0;
    for (int i = 0; i < sample_count; ++i) {
        orbit.samples[i] = orbit.curve(tau * i / sample_count);
        scale = std::max(scale, orbit.samples[i].norm());
    }

    double surface_err = 0.0, residual = 0.0;
    for (int i = 0; i < sample_count; ++i) {
        double t = tau * i / sample_count;
        const Vector& x = orbit.samples[i];
        surface_err = std::max(surface_err, std::abs(body.gauge(x) - 1.0));
        Vector grad = body.gauge_grad(x);
        Vector jn = apply_J(grad / grad.norm());
        residual = std::max(residual, (orbit.velocity(t) - jn).norm());
    }
    if (surface_err > tol.surface_tol) {
        std::ostringstream os;
        os << "make_characteristic: curve leaves the gauge surface by " << surface_err;
        throw NotASolutionError(os.str());
    }
    if (residual > tol.orbit_tol) {
        std::ostringstream os;
        os << "make_characteristic: flow-equation residual " << residual << " exceeds "
           << tol.orbit_tol;
        throw NotASolutionError(os.str());
    }

    orbit.action = orbit_action(orbit, std::max(sample_count, 2048));
    if (orbit.action <= 0.0) throw NotASolutionError("make_characteristic: action not positive");

    orbit.minimal_period = true;
    for (int d = 2; d <= 12; ++d) {
        double worst = 0.0;
        for (int i = 0; i < 64; ++i) {
            double t = tau * i / 64.0;
            worst = std::max(
                worst, (orbit.curve(wrap_period(t + tau / d, tau)) - orbit.curve(t)).norm());
        }
        if (worst <= 1e-6 * std::max(1.0, scale)) {
            orbit.minimal_period = false;
            break;
        }
    }
    return orbit;
}

double orbit_action(const ClosedCharacteristic& orbit, int grid) {
    double acc = 0.0;
    for (int i = 0; i < grid; ++i) {
        double t = orbit.tau * i / grid;
        Vector x = orbit.curve(t);
        Vector v = orbit.velocity(t);
        acc += (-apply_J(v)).dot(x);
    }
    return 0.5 * acc * orbit.tau / grid;
}

EllipsoidOrbits ellipsoid_characteristics(const std::vector<double>& radii,
                                          const Tolerances& tol) {
    EllipsoidOrbits out;
    ConvexBody body = ConvexBody::ellipsoid(radii);
    const int n = body.n();
    for (int k = 0; k < n; ++k) {
        double r = radii[k];
        double R = std::sqrt(2.0) * r;  // circle radius
        double omega = 1.0 / R;         // unit-speed angular rate
        double tau = kTwoPi * R;
        auto curve = [n, k, R, omega](double t) {
            Vector x = Vector::Zero(2 * n);
            x[k] = R * std::cos(omega * t);
            x[n + k] = R * std::sin(omega * t);
            return x;
        };
        auto velocity = [n, k, R, omega](double t) {
            Vector v = Vector::Zero(2 * n);
            v[k] = -R * omega * std::sin(omega * t);
            v[n + k] = R * omega * std::cos(omega * t);
            return v;
        };
        Tolerances strict = tol;
        strict.orbit_tol = 1e-10;  // closed form: residual is roundoff only
        strict.surface_tol = 1e-10;
        ClosedCharacteristic orbit = make_characteristic(body, tau, curve, velocity, 1024, strict);
        orbit.symmetry = OrbitSymmetry::symmetric;
        out.orbits.push_back(std::move(orbit));
    }
    out.resonances = resonant_pairs(radii);
    return out;
}

OrbitSymmetry classify_symmetry(const ConvexBody& body, const ClosedCharacteristic& orbit,
                                const Tolerances& tol) {
    if (!body.symmetric())
        throw UnsupportedInputError("classify_symmetry: body must be centrally symmetric");
    const double tau = orbit.tau;
    double scale = 0.0;
    for (const auto& x : orbit.samples) scale = std::max(scale, x.norm());
    const double thresh = tol.sym_orbit_tol * std::max(1.0, scale);

    const int G = 256;
    double d_half = 0.0;
    for (int i = 0; i < G; ++i) {
        double t = tau * i / G;
        d_half = std::max(d_half,
                          (orbit.curve(wrap_period(t + tau / 2.0, tau)) + orbit.curve(t)).norm());
    }
    if (d_half <= thresh) return OrbitSymmetry::symmetric;

    double d_flip = std::numeric_limits<double>::infinity();
    for (int s = 0; s < G; ++s) {
        double worst = 0.0;
        for (int i = 0; i < G; ++i) {
            double t = tau * i / G;
            worst = std::max(
                worst, (orbit.curve(wrap_period(t + tau * s / G, tau)) + orbit.curve(t)).norm());
            if (worst > d_flip) break;
        }
        d_flip = std::min(d_flip, worst);
    }
    if (d_flip > thresh) return OrbitSymmetry::asymmetric;

    std::ostringstream os;
    os << "classify_symmetry: ambiguous orbit (half-period distance " << d_half
       << ", best flip distance " << d_flip << ", tolerance " << thresh << ")";
    throw ClassificationError(os.str());
}

std::shared_ptr<const LinearSystem> linearize_orbit(const ConvexBody& body, double alpha,
                                                    const ClosedCharacteristic& orbit,
                                                    const Tolerances& tol) {
    require_alpha(alpha);
    for (const auto& x : orbit.samples) {
        if (x.norm() < 1e-12) throw SingularityError("linearize_orbit: orbit passes through 0");
        if (std::abs(body.gauge(x) - 1.0) > tol.surface_tol)
            throw NotASolutionError("linearize_orbit: orbit not on the gauge surface");
    }
    const double tau_n = orbit.tau;
    auto curve = orbit.curve;
    // alpha-flow time s advances by ds = dt / (alpha |grad j|) along the
    // unit-speed orbit
    auto clock = std::make_shared<MonotoneClock>(
        [body, alpha, curve](double t) { return 1.0 / (alpha * body.gauge_grad(curve(t)).norm()); },
        tau_n, 4096);
    const double tau_alpha = clock->total();
    auto B = [body, alpha, curve, clock, tau_alpha, tau_n](double s) -> Matrix {
        double t = clock->inverse(wrap_period(s, tau_alpha));
        return hamiltonian_hess(body, alpha, curve(std::min(t, tau_n)));
    };
    return std::make_shared<LinearSystem>(body.n(), tau_alpha, B, 1e-8, 128);
}

// --------------------------------------------------------------------------
// Dual loops

Vector DualLoop::value(double t) const {
    Vector u = Vector::Zero(2 * n);
    for (int j = 1; j <= K; ++j) {
        Complex e = std::polar(1.0, kTwoPi * j * t);
        for (int d = 0; d < 2 * n; ++d) u[d] += 2.0 * std::real(coeff[j - 1][d] * e);
    }
    return u;
}

Vector DualLoop::primitive(double t) const {
    Vector p = Vector::Zero(2 * n);
    for (int j = 1; j <= K; ++j) {
        Complex e = std::polar(1.0, kTwoPi * j * t);
        Complex div(0.0, kTwoPi * j);  // mode division by 2 pi i j
        for (int d = 0; d < 2 * n; ++d) p[d] += 2.0 * std::real(coeff[j - 1][d] / div * e);
    }
    return p;
}

double DualLoop::coeff_norm() const {
    double acc = 0.0;
    for (const auto& c : coeff) acc += c.squaredNorm();
    return std::sqrt(2.0 * acc);
}

DualLoop DualLoop::zero(int n, int K, double alpha) {
    DualLoop u;
    u.n = n;
    u.K = K;
    u.alpha = alpha;
    u.coeff.assign(K, ComplexVector::Zero(2 * n));
    return u;
}

// --------------------------------------------------------------------------
// Dual action evaluator

namespace {

/// Discretized dual action: exact Fourier quadratic part, rectangle-rule
/// conjugate part, and the exact gradient of that discretization.
class DualActionEvaluator {
public:
    DualActionEvaluator(const ConvexBody& body, double alpha, int K, int N)
        : body_(body), alpha_(alpha), n_(body.n()), K_(K), N_(N) {
        exp_.resize(static_cast<std::size_t>(N_) * K_);
        for (int i = 0; i < N_; ++i)
            for (int j = 1; j <= K_; ++j)
                exp_[static_cast<std::size_t>(i) * K_ + j - 1] =
                    std::polar(1.0, kTwoPi * j * i / N_);
        hint_ = Vector::Zero(2 * n_);
    }

    int dim() const { return 2 * 2 * n_ * K_; }

    void pack(const DualLoop& u, Vector& x) const {
        x.resize(dim());
        int idx = 0;
        for (int j = 0; j < K_; ++j) {
            for (int d = 0; d < 2 * n_; ++d) x[idx++] = u.coeff[j][d].real();
            for (int d = 0; d < 2 * n_; ++d) x[idx++] = u.coeff[j][d].imag();
        }
    }

    DualLoop unpack(const Vector& x) const {
        DualLoop u = DualLoop::zero(n_, K_, alpha_);
        int idx = 0;
        for (int j = 0; j < K_; ++j) {
            for (int d = 0; d < 2 * n_; ++d) u.coeff[j][d].real(x[idx++]);
            for (int d = 0; d < 2 * n_; ++d) u.coeff[j][d].imag(x[idx++]);
        }
        return u;
    }

    double eval(const Vector& x, Vector* grad) {
        // exact quadratic part: -sum_j Im(conj(c_j)^T J c_j) / omega_j
        double quad = 0.0;
        for (int j = 1; j <= K_; ++j) {
            ComplexVector c = mode(x, j);
            ComplexVector Jc(2 * n_);
            Jc.head(n_) = -c.tail(n_);
            Jc.tail(n_) = c.head(n_);
            Complex form = 0.0;
            for (int d = 0; d < 2 * n_; ++d) form += std::conj(c[d]) * Jc[d];
            quad -= std::imag(form) / (kTwoPi * j);
        }

        double hstar = 0.0;
        std::vector<Vector> G;
        if (grad) G.assign(N_, Vector());
        for (int i = 0; i < N_; ++i) {
            Vector ui = Vector::Zero(2 * n_);
            for (int j = 1; j <= K_; ++j) {
                const Complex e = exp_[static_cast<std::size_t>(i) * K_ + j - 1];
                for (int d = 0; d < 2 * n_; ++d) {
                    Complex c(x[pidx(j, d, false)], x[pidx(j, d, true)]);
                    ui[d] += 2.0 * std::real(c * e);
                }
            }
            Vector y = -apply_J(ui);
            if (grad) {
                Vector gh = fenchel_gradient(body_, alpha_, y, &hint_);
                hstar += (gh.norm() == 0.0) ? 0.0
                                            : gh.dot(y) - hamiltonian(body_, alpha_, gh);
                G[i] = apply_J(gh);
            } else {
                hstar += fenchel_conjugate(body_, alpha_, y);
            }
        }
        hstar /= N_;

        if (grad) {
            grad->resize(dim());
            for (int j = 1; j <= K_; ++j) {
                ComplexVector ghat = ComplexVector::Zero(2 * n_);
                for (int i = 0; i < N_; ++i) {
                    Complex ce = std::conj(exp_[static_cast<std::size_t>(i) * K_ + j - 1]);
                    for (int d = 0; d < 2 * n_; ++d) ghat[d] += G[i][d] * ce;
                }
                ghat /= static_cast<double>(N_);
                ComplexVector c = mode(x, j);
                ComplexVector Jc(2 * n_);
                Jc.head(n_) = -c.tail(n_);
                Jc.tail(n_) = c.head(n_);
                ghat += Complex(0.0, 1.0 / (kTwoPi * j)) * Jc;
                for (int d = 0; d < 2 * n_; ++d) {
                    (*grad)[pidx(j, d, false)] = 2.0 * ghat[d].real();
                    (*grad)[pidx(j, d, true)] = 2.0 * ghat[d].imag();
                }
            }
        }
        return quad + hstar;
    }

private:
    int pidx(int j, int d, bool imag) const { return (j - 1) * 4 * n_ + (imag ? 2 * n_ : 0) + d; }

    ComplexVector mode(const Vector& x, int j) const {
        ComplexVector c(2 * n_);
        for (int d = 0; d < 2 * n_; ++d) c[d] = Complex(x[pidx(j, d, false)], x[pidx(j, d, true)]);
        return c;
    }

    const ConvexBody& body_;
    double alpha_;
    int n_, K_, N_;
    std::vector<Complex> exp_;
    Vector hint_;
};

int auto_quad_points(int K, int requested) {
    if (requested > 0) return requested;
    return std::max(8 * K, 256);
}

}  // namespace

double dual_action(const ConvexBody& body, double alpha, const DualLoop& u, int quad_points) {
    require_alpha(alpha);
    int N = auto_quad_points(u.K, quad_points);
    DualActionEvaluator e1(body, alpha, u.K, N), e2(body, alpha, u.K, 2 * N);
    Vector x;
    e1.pack(u, x);
    double f1 = e1.eval(x, nullptr);
    double f2 = e2.eval(x, nullptr);
    if (std::abs(f1 - f2) > 1e-8 * std::max(1.0, std::abs(f1))) {
        std::ostringstream os;
        os << "dual_action: quadrature not converged (" << f1 << " vs " << f2
           << " after grid doubling)";
        throw ResolutionError(os.str());
    }
    return f2;
}

DualLoop dual_action_gradient(const ConvexBody& body, double alpha, const DualLoop& u,
                              int quad_points) {
    require_alpha(alpha);
    DualActionEvaluator e(body, alpha, u.K, auto_quad_points(u.K, quad_points));
    Vector x, g;
    e.pack(u, x);
    e.eval(x, &g);
    return e.unpack(g);
}

// --------------------------------------------------------------------------
// Optimizer

namespace {

struct OptOutcome {
    bool converged = false;
    double f = 0.0;
    double gnorm = 0.0;
};

/// Barzilai-Borwein descent with backtracking; coarse first stage.
OptOutcome bb_descent(DualActionEvaluator& ev, Vector& x, int max_iter, double gtol) {
    Vector g;
    double f = ev.eval(x, &g);
    double step = 1.0 / std::max(1.0, g.norm());
    for (int it = 0; it < max_iter; ++it) {
        if (g.norm() <= gtol) break;
        Vector cand;
        double fc = f;
        double s = step;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            cand = x - s * g;
            fc = ev.eval(cand, nullptr);
            if (fc <= f - 1e-4 * s * g.squaredNorm()) {
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) break;
        Vector xp = x, gp = g;
        x = cand;
        f = ev.eval(x, &g);
        Vector sv = x - xp, yv = g - gp;
        double sy = sv.dot(yv);
        step = (sy > 1e-14) ? sv.squaredNorm() / sy : 2.0 * s;
        step = std::clamp(step, 1e-8, 1e4);
    }
    Vector gfin;
    double ffin = ev.eval(x, &gfin);
    return {gfin.norm() <= gtol, ffin, gfin.norm()};
}

/// Limited-memory quasi-Newton stage with Armijo backtracking.
OptOutcome lbfgs(DualActionEvaluator& ev, Vector& x, int max_iter, double gtol) {
    const int mem = 8;
    std::vector<Vector> S, Y;
    Vector g;
    double f = ev.eval(x, &g);
    for (int it = 0; it < max_iter; ++it) {
        if (g.norm() <= gtol) break;
        Vector q = g;
        std::vector<double> ai(S.size());
        for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
            double rho = 1.0 / Y[i].dot(S[i]);
            ai[i] = rho * S[i].dot(q);
            q -= ai[i] * Y[i];
        }
        if (!S.empty())
            q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        else
            q *= 1.0 / std::max(1.0, g.norm());
        for (std::size_t i = 0; i < S.size(); ++i) {
            double rho = 1.0 / Y[i].dot(S[i]);
            double beta = rho * Y[i].dot(q);
            q += (ai[i] - beta) * S[i];
        }
        Vector dir = -q;
        if (dir.dot(g) >= 0) dir = -g;

        double s = 1.0;
        double gd = g.dot(dir);
        Vector cand;
        bool ok = false;
        for (int ls = 0; ls < 50; ++ls) {
            cand = x + s * dir;
            double fc = ev.eval(cand, nullptr);
            if (fc <= f + 1e-4 * s * gd) {
                ok = true;
                break;
            }
            s *= 0.5;
        }
        if (!ok) break;
        Vector gx;
        double fx = ev.eval(cand, &gx);
        Vector sv = cand - x, yv = gx - g;
        if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
            S.push_back(sv);
            Y.push_back(yv);
            if (static_cast<int>(S.size()) > mem) {
                S.erase(S.begin());
                Y.erase(Y.begin());
            }
        }
        x = cand;
        f = fx;
        g = gx;
    }
    return {g.norm() <= gtol, f, g.norm()};
}

/// Damped Gauss-Newton on grad f = 0 with a finite-difference Jacobian.
/// Converges to saddle-type critical points that descent methods escape.
OptOutcome gauss_newton(DualActionEvaluator& ev, Vector& x, int max_iter, double gtol) {
    const int d = static_cast<int>(x.size());
    Vector g;
    ev.eval(x, &g);
    for (int it = 0; it < max_iter && g.norm() > gtol; ++it) {
        Matrix Jg(d, d);
        const double h = 1e-6;
        Vector gp;
        for (int c = 0; c < d; ++c) {
            Vector xp = x;
            xp[c] += h;
            ev.eval(xp, &gp);
            Jg.col(c) = (gp - g) / h;
        }
        Matrix H = Jg.transpose() * Jg;
        H.diagonal().array() += 1e-12 * (1.0 + H.trace() / d);
        Vector step = H.ldlt().solve(-Jg.transpose() * g);
        double g0 = g.norm();
        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Vector cand = x + s * step;
            Vector gc;
            ev.eval(cand, &gc);
            if (gc.norm() < g0) {
                x = cand;
                g = gc;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) break;
    }
    double f = ev.eval(x, nullptr);
    return {g.norm() <= gtol, f, g.norm()};
}

double shift_flip_distance(const DualLoop& a, const DualLoop& b, bool allow_flip) {
    double na = a.coeff_norm(), nb = b.coeff_norm();
    if (na + nb == 0.0) return 0.0;
    auto dist_at = [&](double s, double sigma) {
        double acc = 0.0;
        for (int j = 1; j <= a.K; ++j) {
            Complex rot = std::polar(1.0, kTwoPi * j * s);
            acc += 2.0 * (a.coeff[j - 1] * rot - sigma * b.coeff[j - 1]).squaredNorm();
        }
        return std::sqrt(acc);
    };
    double best = std::numeric_limits<double>::infinity();
    const int shifts = 256;
    for (int f = 0; f < (allow_flip ? 2 : 1); ++f) {
        double sigma = f == 0 ? 1.0 : -1.0;
        double s_best = 0.0, d_best = std::numeric_limits<double>::infinity();
        for (int s = 0; s < shifts; ++s) {
            double d = dist_at(static_cast<double>(s) / shifts, sigma);
            if (d < d_best) {
                d_best = d;
                s_best = static_cast<double>(s) / shifts;
            }
        }
        // golden refinement of the best grid shift: the grid alone cannot
        // resolve distances near the dedup threshold
        double lo = s_best - 1.0 / shifts, hi = s_best + 1.0 / shifts;
        const double golden = 0.6180339887498949;
        double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
        double f1 = dist_at(x1, sigma), f2 = dist_at(x2, sigma);
        for (int it = 0; it < 60; ++it) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - golden * (hi - lo);
                f1 = dist_at(x1, sigma);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + golden * (hi - lo);
                f2 = dist_at(x2, sigma);
            }
        }
        best = std::min({best, f1, f2, d_best});
    }
    return best / (na + nb);
}

}  // namespace

std::vector<DualLoop> default_seeds(const ConvexBody& body, double alpha, int K,
                                    int random_count, std::uint64_t rng_seed) {
    require_alpha(alpha);
    const int n = body.n();
    std::vector<DualLoop> seeds;

    // analytic one-mode circle loops of the underlying ellipsoid radii
    double amp_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        double r = body.radii()[k];
        double w = alpha / (2.0 * r * r);
        double tau_a = kTwoPi / w;
        double lambda = std::pow(tau_a, (1.0 - alpha) / (2.0 - alpha));
        double A = lambda * std::sqrt(2.0) * r * w;
        DualLoop u = DualLoop::zero(n, K, alpha);
        u.coeff[0][k] = Complex(0.0, 0.5 * A);      // q-component of the circle
        u.coeff[0][n + k] = Complex(0.5 * A, 0.0);  // p-component
        amp_scale += A / n;
        seeds.push_back(std::move(u));
    }

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int s = 0; s < random_count; ++s) {
        DualLoop u = DualLoop::zero(n, K, alpha);
        for (int j = 1; j <= K; ++j) {
            double decay = std::exp(-static_cast<double>(j) / 6.0);
            for (int d = 0; d < 2 * n; ++d)
                u.coeff[j - 1][d] = 0.5 * amp_scale * decay * Complex(gauss(rng), gauss(rng));
        }
        seeds.push_back(std::move(u));
    }
    return seeds;
}

CriticalPointSet find_critical_points(const ConvexBody& body, double alpha, int K,
                                      const std::vector<DualLoop>& seeds,
                                      const FinderConfig& cfg) {
    require_alpha(alpha);
    const int N = auto_quad_points(K, cfg.quad_points);
    CriticalPointSet out;
    std::vector<std::optional<DualLoop>> slots(seeds.size());
    out.outcomes.resize(seeds.size());

    parallel_for(seeds.size(), [&](std::size_t s) {
        DualActionEvaluator ev(body, alpha, K, N);
        Vector x;
        ev.pack(seeds[s], x);
        Vector g;
        ev.eval(x, &g);
        SeedOutcome& rec = out.outcomes[s];
        rec.seed = static_cast<int>(s);

        double scale = std::max(1.0, seeds[s].coeff_norm());
        OptOutcome r;
        if (g.norm() <= cfg.grad_tol) {
            r = {true, ev.eval(x, nullptr), g.norm()};
            rec.note = "seed already critical";
        } else if (g.norm() <= cfg.near_critical_threshold * scale) {
            // near-critical seed: polish the root of grad f directly, since a
            // descent phase walks away from saddle-type critical points
            r = gauss_newton(ev, x, cfg.newton_iters, cfg.grad_tol);
            rec.note = "newton polish";
        } else {
            bb_descent(ev, x, cfg.descent_iters, 1e-5);
            r = lbfgs(ev, x, cfg.polish_iters, cfg.grad_tol);
            if (!r.converged && r.gnorm < 1e-4)
                r = gauss_newton(ev, x, cfg.newton_iters, cfg.grad_tol);
            rec.note = "descent";
        }
        rec.converged = r.converged;
        rec.grad_norm = r.gnorm;
        rec.value = r.f;
        if (r.converged) {
            DualLoop u = ev.unpack(x);
            if (u.coeff_norm() > 1e-8)
                slots[s] = std::move(u);
            else
                rec.note += "; converged to the zero loop";
        }
    });

    for (std::size_t s = 0; s < slots.size(); ++s) {
        if (!slots[s]) continue;
        bool dup = false;
        for (const auto& kept : out.loops)
            if (shift_flip_distance(*slots[s], kept, body.symmetric()) < cfg.dedup_shift_tol)
                dup = true;
        if (!dup) out.loops.push_back(std::move(*slots[s]));
    }
    return out;
}

// --------------------------------------------------------------------------
// Reconstruction maps

ReconstructedOrbit u_to_characteristic(const ConvexBody& body, double alpha, const DualLoop& u,
                                       const FinderConfig& cfg, const Tolerances& tol) {
    require_alpha(alpha);
    const int n = body.n();
    const int N = auto_quad_points(u.K, cfg.quad_points);

    DualLoop g = dual_action_gradient(body, alpha, u, N);
    double gnorm = g.coeff_norm();
    if (gnorm > 10.0 * cfg.grad_tol) {
        std::ostringstream os;
        os << "u_to_characteristic: loop is not critical (|grad f| = " << gnorm << ")";
        throw NotASolutionError(os.str());
    }

    // xi: at critical points grad H*(-Ju(t)) - Pi u(t) is the constant xi
    Vector xi = Vector::Zero(2 * n);
    Vector hint = Vector::Zero(2 * n);
    for (int i = 0; i < N; ++i) {
        double t = static_cast<double>(i) / N;
        xi += fenchel_gradient(body, alpha, -apply_J(u.value(t)), &hint) - u.primitive(t);
    }
    xi /= N;

    auto z = [u, xi](double t) { return Vector(u.primitive(t) + xi); };

    // residual of the 1-periodic problem: zdot = J H'(z), i.e. u = J H'(z)
    double h_acc = 0.0, h_min = 1e300, h_max = -1e300, res = 0.0, amp = 0.0;
    for (int i = 0; i < N; ++i) {
        double t = static_cast<double>(i) / N;
        Vector zt = z(t);
        double hv = hamiltonian(body, alpha, zt);
        h_acc += hv;
        h_min = std::min(h_min, hv);
        h_max = std::max(h_max, hv);
        res = std::max(res, (u.value(t) - apply_J(hamiltonian_grad(body, alpha, zt))).norm());
        amp = std::max(amp, u.value(t).norm());
    }
    double h = h_acc / N;
    if (h <= 0.0) throw NotASolutionError("u_to_characteristic: zero energy level");
    if (res > 1e-5 * std::max(1.0, amp))
        throw NotASolutionError("u_to_characteristic: reconstruction residual too large");
    if ((h_max - h_min) > 1e-5 * h)
        throw NotASolutionError("u_to_characteristic: energy varies along the loop");

    // minimal period 1/m of z: gcd of the active modes, confirmed by closure
    int m = 0;
    double cmax = 0.0;
    for (int j = 1; j <= u.K; ++j) cmax = std::max(cmax, u.coeff[j - 1].norm());
    for (int j = 1; j <= u.K; ++j)
        if (u.coeff[j - 1].norm() > 1e-6 * cmax) m = m == 0 ? j : std::gcd(m, j);
    if (m == 0) throw NotASolutionError("u_to_characteristic: empty loop");
    for (int i = 0; i < 64; ++i) {
        double t = static_cast<double>(i) / 64.0;
        if ((z(t + 1.0 / m) - z(t)).norm() > 1e-6 * std::max(1.0, amp))
            throw NotASolutionError("u_to_characteristic: minimal-period detection failed");
    }

    // alpha-flow solution on the surface: x(s) = h^{-1/alpha} z(c_t s)
    const double c_t = std::pow(h, (2.0 - alpha) / alpha);
    const double scale_x = std::pow(h, -1.0 / alpha);
    const double tau_alpha = 1.0 / (m * c_t);
    auto x_alpha = [z, scale_x, c_t](double s) { return Vector(scale_x * z(c_t * s)); };
    auto v_alpha = [u, scale_x, c_t](double s) { return Vector(scale_x * c_t * u.value(c_t * s)); };

    // unit-speed reparametrization: dt = alpha |grad j| ds
    auto clock = std::make_shared<MonotoneClock>(
        [body, alpha, x_alpha](double s) { return alpha * body.gauge_grad(x_alpha(s)).norm(); },
        tau_alpha, 4096);
    const double tau_n = clock->total();
    auto curve = [x_alpha, clock, tau_n](double t) {
        return x_alpha(clock->inverse(wrap_period(t, tau_n)));
    };
    auto velocity = [body, alpha, x_alpha, v_alpha, clock, tau_n](double t) {
        double s = clock->inverse(wrap_period(t, tau_n));
        double rate = alpha * body.gauge_grad(x_alpha(s)).norm();
        return Vector(v_alpha(s) / rate);
    };

    ReconstructedOrbit out;
    out.multiplicity = m;
    out.energy = h;
    out.tau_alpha = tau_alpha;
    out.orbit = make_characteristic(body, tau_n, curve, velocity, cfg.orbit_samples, tol);
    return out;
}

DualLoop characteristic_to_u(const ConvexBody& body, double alpha,
                             const ClosedCharacteristic& orbit, int m, int K) {
    require_alpha(alpha);
    if (m <= 0) throw DomainError("characteristic_to_u: m must be positive");
    const int n = body.n();
    auto curve = orbit.curve;
    auto vel = orbit.velocity;
    const double tau_n = orbit.tau;

    MonotoneClock clock(
        [body, alpha, curve](double t) { return 1.0 / (alpha * body.gauge_grad(curve(t)).norm()); },
        tau_n, 4096);
    const double tau_alpha = clock.total();
    auto v_alpha = [&](double s) {
        double t = clock.inverse(wrap_period(s, tau_alpha));
        double rate = alpha * body.gauge_grad(curve(t)).norm();
        return Vector(vel(t) * rate);
    };

    const double scale = std::pow(m * tau_alpha, (1.0 - alpha) / (2.0 - alpha));
    const int N = std::max(8 * K, 512);
    DualLoop u = DualLoop::zero(n, K, alpha);
    std::vector<Vector> samples(N);
    for (int i = 0; i < N; ++i)
        samples[i] = scale * v_alpha(wrap_period(m * tau_alpha * i / N, tau_alpha));
    for (int j = 1; j <= K; ++j) {
        ComplexVector c = ComplexVector::Zero(2 * n);
        for (int i = 0; i < N; ++i) {
            Complex e = std::polar(1.0, -kTwoPi * j * i / N);
            for (int d = 0; d < 2 * n; ++d) c[d] += samples[i][d] * e;
        }
        u.coeff[j - 1] = c / static_cast<double>(N);
    }
    return u;
}

// --------------------------------------------------------------------------
// Orbit search pipeline

namespace {

double point_to_segment(const Vector& x, const Vector& a, const Vector& b) {
    Vector d = b - a;
    double len2 = d.squaredNorm();
    if (len2 == 0.0) return (x - a).norm();
    double t = std::clamp((x - a).dot(d) / len2, 0.0, 1.0);
    return (x - a - t * d).norm();
}

/// Two-sided Hausdorff-type distance between the orbit images, measured from
/// sample points to the other orbit's polyline (plain nearest-sample distance
/// floors out at half the sample spacing, far above the dedup tolerance).
double orbit_image_distance(const ClosedCharacteristic& a, const ClosedCharacteristic& b) {
    const int G = 256;
    auto polyline = [&](const ClosedCharacteristic& q) {
        std::vector<Vector> pts(G);
        for (int j = 0; j < G; ++j) pts[j] = q.curve(q.tau * j / G);
        return pts;
    };
    std::vector<Vector> pa = polyline(a), pb = polyline(b);
    auto one_sided = [&](const std::vector<Vector>& ps, const std::vector<Vector>& qs) {
        double worst = 0.0;
        for (const auto& x : ps) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < G; ++j)
                best = std::min(best, point_to_segment(x, qs[j], qs[(j + 1) % G]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_sided(pa, pb), one_sided(pb, pa));
}

}  // namespace

OrbitSearchResult find_closed_characteristics(const ConvexBody& body, double alpha,
                                              const FinderConfig& cfg, const Tolerances& tol) {
    OrbitSearchResult out;
    auto seeds = default_seeds(body, alpha, cfg.K, cfg.random_seeds, cfg.rng_seed);
    CriticalPointSet crit = find_critical_points(body, alpha, cfg.K, seeds, cfg);
    out.outcomes = std::move(crit.outcomes);

    double scale = 0.0;
    for (double r : body.radii()) scale = std::max(scale, r);
    std::vector<ClosedCharacteristic> found;
    for (const auto& loop : crit.loops) {
        try {
            ReconstructedOrbit rec = u_to_characteristic(body, alpha, loop, cfg, tol);
            found.push_back(std::move(rec.orbit));
        } catch (const NotASolutionError&) {
            // loop yields no orbit; seed outcomes retain the optimizer story
        }
    }
    for (auto& orbit : found) {
        bool dup = false;
        for (const auto& kept : out.orbits)
            if (orbit_image_distance(orbit, kept) < cfg.geom_dedup_tol * std::max(1.0, scale))
                dup = true;
        if (dup) continue;
        orbit.symmetry = classify_symmetry(body, orbit, tol);
        out.orbits.push_back(std::move(orbit));
    }
    std::sort(out.orbits.begin(), out.orbits.end(),
              [](const ClosedCharacteristic& a, const ClosedCharacteristic& b) {
                  return a.action < b.action;
              });
    out.resonances = resonant_pairs(body.radii());
    return out;
}

}  // namespace sil
