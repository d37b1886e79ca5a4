#include "sil/random_suite.hpp"

#include <cmath>

namespace sil {

namespace {

Matrix random_symmetric(int dim, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = scale * u(rng);
    return 0.5 * (A + A.transpose());
}

}  // namespace

std::shared_ptr<const LinearSystem> random_convex_system(int n, std::mt19937_64& rng,
                                                         double margin) {
    const int dim = 2 * n;
    std::uniform_real_distribution<double> utau(0.8, 2.2);
    double tau = utau(rng);

    Matrix C1 = random_symmetric(dim, 0.5, rng);
    Matrix C2 = random_symmetric(dim, 0.5, rng);
    Matrix G = random_symmetric(dim, 1.0, rng);
    double shift = margin + C1.operatorNorm() + C2.operatorNorm();
    Matrix C0 = G * G.transpose() + shift * Matrix::Identity(dim, dim);

    auto B = [C0, C1, C2, tau](double t) -> Matrix {
        double phase = kTwoPi * t / tau;
        return C0 + std::sin(phase) * C1 + std::cos(phase) * C2;
    };
    return std::make_shared<LinearSystem>(n, tau, B);
}

std::shared_ptr<const LinearSystem> hyperbolic_demo_system() {
    // Hill equation qddot + c(t) q = 0 with c(t) = w0^2 (1 + h cos(2 w0 t)):
    // principal parametric resonance pumps the solution, so the monodromy is
    // hyperbolic while B(t) = diag(c(t), 1) stays positive definite.
    const double w0 = 1.0, h = 0.6;
    const double tau = M_PI;  // one forcing period of cos(2 t)
    auto B = [w0, h](double t) -> Matrix {
        Matrix Bt(2, 2);
        Bt << w0 * w0 * (1.0 + h * std::cos(2.0 * w0 * t)), 0.0, 0.0, 1.0;
        return Bt;
    };
    return std::make_shared<LinearSystem>(1, tau, B);
}

int recommended_steps(const LinearSystem& sys, int minimum) {
    double needed = sys.tau() * sys.norm_bound() / (M_PI / 8.0);
    int steps = static_cast<int>(std::ceil(needed)) * 4;
    steps = std::max(steps, minimum);
    // round up to a multiple of 16
    steps = ((steps + 15) / 16) * 16;
    return steps;
}

}  // namespace sil
