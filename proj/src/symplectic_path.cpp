#include "sil/symplectic_path.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace sil {

bool validate_symplectic(const Matrix& M, double tol) {
    if (M.rows() != M.cols()) throw DimensionError("validate_symplectic: matrix not square");
    if (M.rows() % 2 != 0) throw DimensionError("validate_symplectic: odd dimension");
    const int n = static_cast<int>(M.rows()) / 2;
    Matrix J = standard_form(n);
    double err = (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
    return err <= tol;
}

SymplecticMatrix SymplecticMatrix::checked(const Matrix& M, double tol) {
    if (!validate_symplectic(M, tol)) {
        std::ostringstream os;
        os << "matrix violates M^T J M = J beyond tol " << tol;
        throw DomainError(os.str());
    }
    if (M.determinant() <= 0.0) throw DomainError("symplectic matrix must have positive determinant");
    return SymplecticMatrix{M, static_cast<int>(M.rows()) / 2};
}

LinearSystem::LinearSystem(int n, double tau, std::function<Matrix(double)> B,
                           double sym_tol, int certify_samples)
    : n_(n), tau_(tau), B_(std::move(B)) {
    if (n <= 0) throw DimensionError("LinearSystem: n must be positive");
    if (tau <= 0.0) throw DomainError("LinearSystem: period must be positive");
    if (certify_samples < 2) certify_samples = 2;

    double margin = std::numeric_limits<double>::infinity();
    double norm_bound = 0.0;
    for (int i = 0; i < certify_samples; ++i) {
        double t = tau * static_cast<double>(i) / certify_samples;
        Matrix Bt = B_(t);
        if (Bt.rows() != 2 * n || Bt.cols() != 2 * n)
            throw DimensionError("LinearSystem: B(t) has wrong shape");
        double asym = (Bt - Bt.transpose()).cwiseAbs().maxCoeff();
        if (asym > sym_tol) {
            std::ostringstream os;
            os << "LinearSystem: B(t) asymmetric by " << asym << " at t=" << t;
            throw DomainError(os.str());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Bt + Bt.transpose()),
                                                 Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues().minCoeff());
        norm_bound = std::max(norm_bound, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    margin_ = margin;
    norm_bound_ = norm_bound;
}

struct SymplecticPath::Impl {
    int n = 0;
    double tau = 0.0;
    std::vector<double> times;
    std::vector<Matrix> mats;
    std::shared_ptr<const LinearSystem> generator;  // may be null
    std::shared_ptr<const SymplecticPath> base;     // non-null for iterates
    int iter_m = 1;
    std::vector<Matrix> end_powers;  // [I, M, M^2, ...] for iterates
    double drift = 0.0;

    mutable std::once_flag eig_once;
    mutable std::vector<ComplexVector> sample_eigs;

    Matrix evaluate(double t) const;
};

namespace {

Matrix rk4_step(const LinearSystem& sys, const Matrix& G0, double t0, double h, const Matrix& J) {
    auto rhs = [&](double t, const Matrix& G) -> Matrix { return J * sys.B(t) * G; };
    Matrix k1 = rhs(t0, G0);
    Matrix k2 = rhs(t0 + 0.5 * h, G0 + 0.5 * h * k1);
    Matrix k3 = rhs(t0 + 0.5 * h, G0 + 0.5 * h * k2);
    Matrix k4 = rhs(t0 + h, G0 + h * k3);
    return G0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double path_drift(const std::vector<Matrix>& mats, int n) {
    Matrix J = standard_form(n);
    double worst = 0.0;
    for (const auto& G : mats)
        worst = std::max(worst, (G.transpose() * J * G - J).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace

Matrix SymplecticPath::Impl::evaluate(double t) const {
    const double T = times.back();
    if (t <= times.front()) return mats.front();
    if (t >= T) return mats.back();

    if (base) {
        // gamma~(j tau + s) = gamma(s) gamma(tau)^j
        double btau = base->tau();
        int j = static_cast<int>(std::floor(t / btau));
        if (j >= iter_m) j = iter_m - 1;
        double s = t - j * btau;
        if (j == 0) return base->at(s);
        return base->at(s) * end_powers[j];
    }

    // Locate the enclosing cell (uniform grids hit in O(1), fall back to
    // binary search otherwise) and re-integrate locally.
    std::size_t i;
    double h0 = times[1] - times[0];
    i = static_cast<std::size_t>(t / h0);
    if (i >= times.size() - 1 || !(times[i] <= t && t <= times[i + 1])) {
        i = static_cast<std::size_t>(
            std::upper_bound(times.begin(), times.end(), t) - times.begin());
        if (i > 0) --i;
        if (i >= times.size() - 1) i = times.size() - 2;
    }
    if (!generator) {
        // Raw sample path: linear interpolation (flagged by interpolation()).
        double w = (t - times[i]) / (times[i + 1] - times[i]);
        return (1.0 - w) * mats[i] + w * mats[i + 1];
    }
    double span = t - times[i];
    if (span == 0.0) return mats[i];
    Matrix J = standard_form(n);
    const int sub = 8;
    double h = span / sub;
    Matrix G = mats[i];
    for (int k = 0; k < sub; ++k) G = rk4_step(*generator, G, times[i] + k * h, h, J);
    return G;
}

int SymplecticPath::n() const { return impl_->n; }
double SymplecticPath::tau() const { return impl_->tau; }
std::size_t SymplecticPath::grid_size() const { return impl_->times.size(); }
double SymplecticPath::time_at(std::size_t i) const { return impl_->times[i]; }
const Matrix& SymplecticPath::matrix_at(std::size_t i) const { return impl_->mats[i]; }
const Matrix& SymplecticPath::end_matrix() const { return impl_->mats.back(); }
SymplecticMatrix SymplecticPath::end() const {
    return SymplecticMatrix{impl_->mats.back(), impl_->n};
}
Matrix SymplecticPath::at(double t) const { return impl_->evaluate(t); }
std::shared_ptr<const LinearSystem> SymplecticPath::generator() const { return impl_->generator; }
std::shared_ptr<const SymplecticPath> SymplecticPath::base() const { return impl_->base; }
int SymplecticPath::iteration_count() const { return impl_->iter_m; }
double SymplecticPath::drift() const { return impl_->drift; }

const char* SymplecticPath::interpolation() const {
    if (impl_->base) return "iterate";
    if (impl_->generator) return "generator";
    return "linear";
}

bool SymplecticPath::convex_generated() const {
    if (impl_->generator && impl_->generator->positive_definite()) return true;
    if (impl_->base) return impl_->base->convex_generated();
    return false;
}

const std::vector<ComplexVector>& SymplecticPath::sample_eigenvalues() const {
    const Impl* im = impl_.get();
    std::call_once(im->eig_once, [im] {
        im->sample_eigs.resize(im->mats.size());
        for (std::size_t i = 0; i < im->mats.size(); ++i) {
            Eigen::EigenSolver<Matrix> es(im->mats[i], /*computeEigenvectors=*/false);
            im->sample_eigs[i] = es.eigenvalues();
        }
    });
    return im->sample_eigs;
}

SymplecticPath SymplecticPath::from_samples(int n, std::vector<double> times,
                                            std::vector<Matrix> mats,
                                            std::shared_ptr<const LinearSystem> generator,
                                            double path_tol) {
    if (times.size() != mats.size() || times.size() < 2)
        throw DimensionError("SymplecticPath: need matching, nonempty grids");
    if ((mats.front() - Matrix::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff() != 0.0)
        throw DomainError("SymplecticPath: gamma(0) must be the identity exactly");

    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->tau = times.back();
    impl->times = std::move(times);
    impl->mats = std::move(mats);
    impl->generator = std::move(generator);
    impl->drift = path_drift(impl->mats, n);
    if (impl->drift > path_tol) {
        std::ostringstream os;
        os << "symplecticity drift " << impl->drift << " exceeds " << path_tol
           << "; use more integration steps";
        throw AccuracyError(os.str());
    }
    SymplecticPath p;
    p.impl_ = std::move(impl);
    return p;
}

SymplecticPath integrate_fundamental(std::shared_ptr<const LinearSystem> sys, int steps,
                                     double path_tol) {
    if (!sys) throw DomainError("integrate_fundamental: null system");
    if (steps < 16) throw DomainError("integrate_fundamental: steps must be >= 16");
    const int n = sys->n();
    const double tau = sys->tau();
    const double h = tau / steps;
    if (h * sys->norm_bound() > M_PI / 8.0 + 1e-12) {
        std::ostringstream os;
        os << "integrate_fundamental: step too coarse for crossing detection; need steps >= "
           << static_cast<int>(std::ceil(tau * sys->norm_bound() / (M_PI / 8.0)));
        throw AccuracyError(os.str());
    }

    Matrix J = standard_form(n);
    std::vector<double> times(steps + 1);
    std::vector<Matrix> mats(steps + 1);
    times[0] = 0.0;
    mats[0] = Matrix::Identity(2 * n, 2 * n);
    for (int i = 0; i < steps; ++i) {
        times[i + 1] = (i + 1 == steps) ? tau : h * (i + 1);
        mats[i + 1] = rk4_step(*sys, mats[i], h * i, h, J);
    }
    return SymplecticPath::from_samples(n, std::move(times), std::move(mats), std::move(sys),
                                        path_tol);
}

SymplecticPath integrate_fundamental(const LinearSystem& sys, int steps, double path_tol) {
    return integrate_fundamental(std::make_shared<LinearSystem>(sys), steps, path_tol);
}

SymplecticPath iterate_path(const SymplecticPath& gamma, int m) {
    if (m <= 0) throw DomainError("iterate_path: m must be positive");
    if (m == 1) return gamma;

    const std::size_t M = gamma.grid_size() - 1;
    const double tau = gamma.tau();
    const int n = gamma.n();

    auto impl = std::make_shared<SymplecticPath::Impl>();
    impl->n = n;
    impl->tau = m * tau;
    impl->base = std::make_shared<const SymplecticPath>(gamma);
    impl->iter_m = m;
    impl->end_powers.resize(m);
    impl->end_powers[0] = Matrix::Identity(2 * n, 2 * n);
    for (int j = 1; j < m; ++j) impl->end_powers[j] = impl->end_powers[j - 1] * gamma.end_matrix();

    impl->times.reserve(m * M + 1);
    impl->mats.reserve(m * M + 1);
    impl->times.push_back(0.0);
    impl->mats.push_back(Matrix::Identity(2 * n, 2 * n));
    for (int j = 0; j < m; ++j) {
        const Matrix& pw = impl->end_powers[j];
        for (std::size_t i = 1; i <= M; ++i) {
            impl->times.push_back(j * tau + gamma.time_at(i));
            impl->mats.push_back(gamma.matrix_at(i) * pw);
        }
    }
    impl->drift = path_drift(impl->mats, n);
    if (impl->drift > 1e-7) {
        std::ostringstream os;
        os << "iterate_path: drift " << impl->drift << " exceeds 1e-7";
        throw AccuracyError(os.str());
    }

    SymplecticPath p;
    p.impl_ = std::move(impl);
    return p;
}

}  // namespace sil
