#include <doctest.h>

#include <cmath>
#include <random>

#include "sil/characteristics.hpp"
#include "sil/omega_index.hpp"
#include "test_support.hpp"

using namespace sil;

namespace {

const double kAlpha = 1.5;

ConvexBody e1() { return ConvexBody::ellipsoid({1.0}); }
ConvexBody e2() { return ConvexBody::ellipsoid({1.0, std::pow(2.0, 0.25)}); }

ConvexBody perturbed_e2(double eps = 0.02) {
    std::vector<PerturbationTerm> terms;
    terms.push_back({0.7, {2, 0, 2, 0}});
    terms.push_back({-0.4, {0, 2, 0, 2}});
    return ConvexBody::perturbed_ellipsoid({1.0, std::pow(2.0, 0.25)}, eps, terms);
}

/// Polygon shoelace area of the orbit, summed over the symplectic planes:
/// 1/2 sum_i x_i^T (-J) (x_{i+1} - x_i). Independent discrete route for the
/// action integral.
double shoelace_action(const ClosedCharacteristic& orbit, int N) {
    int n = static_cast<int>(orbit.samples.front().size()) / 2;
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
        Vector a = orbit.curve(orbit.tau * i / N);
        Vector b = orbit.curve(orbit.tau * (i + 1) / N);
        Vector d = b - a;
        Vector mJd(2 * n);
        mJd.head(n) = d.tail(n);
        mJd.tail(n) = -d.head(n);
        acc += mJd.dot(a);
    }
    return 0.5 * acc;
}

}  // namespace

TEST_CASE("hamiltonian values, gradient, symmetry") {
    auto body = e2();
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Vector x(4);
        for (int d = 0; d < 4; ++d) x[d] = gauss(rng);
        // on the surface H = 1
        Vector xs = x / body.gauge(x);
        CHECK(hamiltonian(body, kAlpha, xs) == doctest::Approx(1.0).epsilon(1e-10));
        // ellipsoid closed form (1/2 sum |x_k|^2/r_k^2)^(alpha/2)
        double q = 0.5 * (x[0] * x[0] + x[2] * x[2]) +
                   0.5 * (x[1] * x[1] + x[3] * x[3]) / std::sqrt(2.0);
        CHECK(hamiltonian(body, kAlpha, x) ==
              doctest::Approx(std::pow(q, kAlpha / 2.0)).epsilon(1e-10));
        // central symmetry
        CHECK(hamiltonian(body, kAlpha, Vector(-x)) ==
              doctest::Approx(hamiltonian(body, kAlpha, x)).epsilon(1e-12));
        CHECK((hamiltonian_grad(body, kAlpha, Vector(-x)) + hamiltonian_grad(body, kAlpha, x))
                  .norm() <= 1e-10);
    }
}

TEST_CASE("hamiltonian gradient and hessian match finite differences") {
    auto body = perturbed_e2();
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double h = 1e-6;
    for (int rep = 0; rep < 8; ++rep) {
        Vector x(4);
        for (int d = 0; d < 4; ++d) x[d] = gauss(rng);
        x *= (0.7 + 0.1 * rep) / x.norm();
        Vector g = hamiltonian_grad(body, kAlpha, x);
        Matrix H = hamiltonian_hess(body, kAlpha, x);
        for (int d = 0; d < 4; ++d) {
            Vector e = Vector::Zero(4);
            e[d] = h;
            double fd = (hamiltonian(body, kAlpha, Vector(x + e)) -
                         hamiltonian(body, kAlpha, Vector(x - e))) /
                        (2 * h);
            CHECK(g[d] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            Vector fdg = (hamiltonian_grad(body, kAlpha, Vector(x + e)) -
                          hamiltonian_grad(body, kAlpha, Vector(x - e))) /
                         (2 * h);
            for (int c = 0; c < 4; ++c)
                CHECK(H(c, d) == doctest::Approx(fdg[c]).epsilon(1e-5).scale(1.0));
        }
    }
    CHECK_THROWS_AS(hamiltonian_hess(body, kAlpha, Vector::Zero(4)), SingularityError);
}

TEST_CASE("fenchel conjugate") {
    auto body = e2();
    CHECK(fenchel_conjugate(body, kAlpha, Vector::Zero(4)) == 0.0);

    std::mt19937_64 rng(4711);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SUBCASE("Fenchel-Young with equality at the maximizer") {
        for (int rep = 0; rep < 20; ++rep) {
            Vector y(4), x(4);
            for (int d = 0; d < 4; ++d) {
                y[d] = gauss(rng);
                x[d] = gauss(rng);
            }
            double lhs = x.dot(y);
            double rhs = hamiltonian(body, kAlpha, x) + fenchel_conjugate(body, kAlpha, y);
            CHECK(lhs <= rhs + 1e-10);
            Vector xstar = fenchel_gradient(body, kAlpha, y);
            double gap = hamiltonian(body, kAlpha, xstar) + fenchel_conjugate(body, kAlpha, y) -
                         xstar.dot(y);
            CHECK(std::abs(gap) <= 1e-8);
        }
    }

    SUBCASE("brute force with shrinking-neighborhood sampling") {
        std::mt19937_64 rng2(99);
        std::normal_distribution<double> g2(0.0, 1.0);
        for (int rep = 0; rep < 3; ++rep) {
            Vector y(4);
            for (int d = 0; d < 4; ++d) y[d] = g2(rng2);
            // coarse random scan, then refine around the incumbent
            Vector xbest = Vector::Zero(4);
            double best = 0.0;
            for (int s = 0; s < 50000; ++s) {
                Vector x(4);
                for (int d = 0; d < 4; ++d) x[d] = 3.0 * g2(rng2);
                double v = x.dot(y) - hamiltonian(body, kAlpha, x);
                if (v > best) {
                    best = v;
                    xbest = x;
                }
            }
            double radius = 0.5;
            for (int round = 0; round < 8; ++round) {
                for (int s = 0; s < 20000; ++s) {
                    Vector x = xbest;
                    for (int d = 0; d < 4; ++d) x[d] += radius * g2(rng2);
                    double v = x.dot(y) - hamiltonian(body, kAlpha, x);
                    if (v > best) {
                        best = v;
                        xbest = x;
                    }
                }
                radius *= 0.3;
            }
            double exact = fenchel_conjugate(body, kAlpha, y);
            CHECK(exact >= best - 1e-9);
            CHECK(std::abs(exact - best) <= 1e-4);
        }
    }
}

TEST_CASE("ellipsoid characteristics") {
    SUBCASE("unit circle: closed form satisfies the flow equation") {
        auto out = ellipsoid_characteristics({1.0});
        REQUIRE(out.orbits.size() == 1);
        const auto& orbit = out.orbits[0];
        CHECK(orbit.tau == doctest::Approx(kTwoPi * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(orbit.minimal_period);
        CHECK(out.resonances.empty());
        // residual re-checked here independently of the constructor
        ConvexBody body = e1();
        for (int i = 0; i < 50; ++i) {
            double t = orbit.tau * i / 50;
            Vector x = orbit.curve(t);
            Vector grad = body.gauge_grad(x);
            Vector jn(2);
            jn[0] = -grad[1] / grad.norm();
            jn[1] = grad[0] / grad.norm();
            CHECK((orbit.velocity(t) - jn).norm() <= 1e-10);
        }
    }

    SUBCASE("weakly non-resonant pair: two orbits, increasing periods") {
        auto out = ellipsoid_characteristics({1.0, std::pow(2.0, 0.25)});
        REQUIRE(out.orbits.size() == 2);
        CHECK(out.orbits[0].tau < out.orbits[1].tau);
        CHECK(out.resonances.empty());
        for (const auto& orbit : out.orbits) {
            // centered circles are symmetric: x(t + tau/2) = -x(t)
            for (int i = 0; i < 16; ++i) {
                double t = orbit.tau * i / 16;
                double shifted = std::fmod(t + orbit.tau / 2.0, orbit.tau);
                CHECK((orbit.curve(shifted) + orbit.curve(t)).norm() <= 1e-10);
            }
        }
    }

    SUBCASE("resonant radii are flagged") {
        auto out = ellipsoid_characteristics({1.0, 2.0});
        CHECK(out.resonances.size() == 1);
    }
}

TEST_CASE("action quadrature against the shoelace oracle") {
    auto out = ellipsoid_characteristics({1.0});
    const auto& orbit = out.orbits[0];
    // enclosed area of the radius-sqrt2 circle is 2 pi
    CHECK(orbit.action == doctest::Approx(kTwoPi).epsilon(1e-10));
    double oracle = shoelace_action(orbit, 1 << 17);
    CHECK(std::abs(orbit.action - oracle) <= 1e-8);
    // refinement stability
    CHECK(std::abs(orbit_action(orbit, 4096) - orbit_action(orbit, 8192)) <=
          1e-9 * std::abs(orbit.action));
}

TEST_CASE("action of the doubled traversal and shift invariance") {
    auto out = ellipsoid_characteristics({1.0});
    const auto& orbit = out.orbits[0];
    ClosedCharacteristic dbl = orbit;
    dbl.tau = 2.0 * orbit.tau;  // traverse the same loop twice
    CHECK(orbit_action(dbl, 8192) == doctest::Approx(2.0 * orbit.action).epsilon(1e-10));

    double s0 = 1.2345;
    ClosedCharacteristic shifted = orbit;
    auto c = orbit.curve;
    auto v = orbit.velocity;
    shifted.curve = [c, s0](double t) { return c(t + s0); };
    shifted.velocity = [v, s0](double t) { return v(t + s0); };
    CHECK(std::abs(orbit_action(shifted, 8192) - orbit.action) <= 1e-10);
}

TEST_CASE("dual action basics") {
    auto body = e1();

    SUBCASE("zero loop evaluates to zero") {
        CHECK(dual_action(body, kAlpha, DualLoop::zero(1, 8, kAlpha)) == 0.0);
    }

    SUBCASE("Fourier quadratic term matches direct quadrature") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss(0.0, 1.0);
        DualLoop u = DualLoop::zero(1, 6, kAlpha);
        for (int j = 0; j < 6; ++j)
            for (int d = 0; d < 2; ++d) u.coeff[j][d] = 0.3 * Complex(gauss(rng), gauss(rng));
        const int N = 1 << 14;
        double quad = 0.0, hstar = 0.0;
        for (int i = 0; i < N; ++i) {
            double t = static_cast<double>(i) / N;
            Vector ui = u.value(t), pi = u.primitive(t);
            quad += 0.5 * (-ui[1] * pi[0] + ui[0] * pi[1]);  // (Ju . Pi u)/2
            Vector y(2);
            y[0] = ui[1];
            y[1] = -ui[0];  // -J u
            hstar += fenchel_conjugate(body, kAlpha, y);
        }
        quad /= N;
        hstar /= N;
        double f = dual_action(body, kAlpha, u, 1 << 14);
        CHECK(f == doctest::Approx(quad + hstar).epsilon(1e-9));
    }

    SUBCASE("quadrature refinement is stable on smooth loops") {
        auto orbit = ellipsoid_characteristics({1.0}).orbits[0];
        DualLoop u = characteristic_to_u(body, kAlpha, orbit, 1, 16);
        double f1 = dual_action(body, kAlpha, u, 512);
        double f2 = dual_action(body, kAlpha, u, 1024);
        CHECK(std::abs(f1 - f2) <= 1e-10);
    }
}

TEST_CASE("dual action gradient matches finite differences") {
    auto body = e2();
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DualLoop u = DualLoop::zero(2, 3, kAlpha);
    for (int j = 0; j < 3; ++j)
        for (int d = 0; d < 4; ++d) u.coeff[j][d] = 0.1 * Complex(gauss(rng), gauss(rng));

    const int N = 512;
    DualLoop g = dual_action_gradient(body, kAlpha, u, N);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        for (int d = 0; d < 4; ++d) {
            for (int part = 0; part < 2; ++part) {
                DualLoop up = u, um = u;
                Complex delta = part == 0 ? Complex(h, 0.0) : Complex(0.0, h);
                up.coeff[j][d] += delta;
                um.coeff[j][d] -= delta;
                double fd =
                    (dual_action(body, kAlpha, up, N) - dual_action(body, kAlpha, um, N)) /
                    (2.0 * h);
                double an = part == 0 ? g.coeff[j][d].real() : g.coeff[j][d].imag();
                CHECK(an == doctest::Approx(fd).epsilon(5e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("critical value of the circle loop matches the closed form") {
    auto body = e1();
    auto orbit = ellipsoid_characteristics({1.0}).orbits[0];
    for (int m = 1; m <= 3; ++m) {
        DualLoop u = characteristic_to_u(body, kAlpha, orbit, m, 16);
        double f = dual_action(body, kAlpha, u);
        double A = orbit.action;
        double expected =
            -(1.0 - kAlpha / 2.0) * std::pow(2.0 * m * A / kAlpha, -kAlpha / (2.0 - kAlpha));
        CHECK(f == doctest::Approx(expected).epsilon(1e-6));
        if (m == 1) {
            // frozen closed form for E_1(1), alpha = 3/2: f = -27 / (2048 pi^3)
            CHECK(f == doctest::Approx(-27.0 / (2048.0 * std::pow(M_PI, 3))).epsilon(1e-9));
        }
    }
}

TEST_CASE("circle loop is critical and reconstructs to the circle") {
    auto body = e1();
    auto orbit = ellipsoid_characteristics({1.0}).orbits[0];

    DualLoop u = characteristic_to_u(body, kAlpha, orbit, 1, 16);
    CHECK(dual_action_gradient(body, kAlpha, u).coeff_norm() <= 1e-8);

    FinderConfig cfg;
    cfg.K = 16;
    auto rec = u_to_characteristic(body, kAlpha, u, cfg);
    CHECK(rec.multiplicity == 1);
    CHECK(rec.orbit.tau == doctest::Approx(orbit.tau).epsilon(1e-8));
    CHECK(rec.orbit.action == doctest::Approx(orbit.action).epsilon(1e-8));
    // round trip recovers the orbit up to a time shift
    double worst = 1e18;
    for (int s = 0; s < 256; ++s) {
        double shift = orbit.tau * s / 256.0;
        double d = 0.0;
        for (int i = 0; i < 64; ++i) {
            double t = orbit.tau * i / 64.0;
            d = std::max(
                d, (rec.orbit.curve(std::fmod(t + shift, orbit.tau)) - orbit.curve(t)).norm());
        }
        worst = std::min(worst, d);
    }
    CHECK(worst <= 1e-7);

    // doubled traversal: same geometric orbit, multiplicity detected as 2
    DualLoop u2 = characteristic_to_u(body, kAlpha, orbit, 2, 16);
    auto rec2 = u_to_characteristic(body, kAlpha, u2, cfg);
    CHECK(rec2.multiplicity == 2);
    CHECK(rec2.orbit.tau == doctest::Approx(orbit.tau).epsilon(1e-8));

    // action ordering: f decreases as m A grows
    double f1 = dual_action(body, kAlpha, u);
    double f2 = dual_action(body, kAlpha, u2);
    CHECK(f1 < f2);
    CHECK(f2 < 0.0);
}

TEST_CASE("non-critical loops are rejected by reconstruction") {
    auto body = e1();
    std::mt19937_64 rng(21);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DualLoop u = DualLoop::zero(1, 8, kAlpha);
    for (int j = 0; j < 8; ++j)
        for (int d = 0; d < 2; ++d) u.coeff[j][d] = 0.2 * Complex(gauss(rng), gauss(rng));
    CHECK_THROWS_AS(u_to_characteristic(body, kAlpha, u), NotASolutionError);
}

TEST_CASE("classify_symmetry") {
    auto body = e2();
    auto orbits = ellipsoid_characteristics({1.0, std::pow(2.0, 0.25)}).orbits;
    for (const auto& orbit : orbits)
        CHECK(classify_symmetry(body, orbit) == OrbitSymmetry::symmetric);

    // synthetic off-center loop: the images of x and -x are disjoint
    ClosedCharacteristic fake;
    fake.tau = kTwoPi;
    fake.curve = [](double t) {
        Vector x(4);
        x << 3.0 + 0.2 * std::cos(t), 0.0, 0.2 * std::sin(t), 0.0;
        return x;
    };
    fake.velocity = [](double t) {
        Vector v(4);
        v << -0.2 * std::sin(t), 0.0, 0.2 * std::cos(t), 0.0;
        return v;
    };
    fake.samples.resize(64);
    for (int i = 0; i < 64; ++i) fake.samples[i] = fake.curve(kTwoPi * i / 64);
    CHECK(classify_symmetry(body, fake) == OrbitSymmetry::asymmetric);
}

TEST_CASE("linearize_orbit: analytic in-plane closed form for the unit circle") {
    auto body = e1();
    auto orbit = ellipsoid_characteristics({1.0}).orbits[0];
    auto sys = linearize_orbit(body, kAlpha, orbit);
    CHECK(sys->positive_definite());
    // alpha-flow period 4 pi r^2 / alpha
    CHECK(sys->tau() == doctest::Approx(4.0 * M_PI / kAlpha).epsilon(1e-9));

    auto path = integrate_fundamental(sys, 2048);
    const double w = kAlpha / 2.0;                       // in-plane rotation rate
    const double kappa = kAlpha * (2.0 - kAlpha) / 2.0;  // shear rate
    for (double s : {0.5, 1.5, 3.0, sys->tau()}) {
        Matrix shear(2, 2);
        shear << 1.0, 0.0, -kappa * s, 1.0;
        Matrix expected = testsup::rotation2(w * s) * shear;
        CHECK((path.at(s) - expected).cwiseAbs().maxCoeff() <= 1e-7);
    }

    // index data of the circle: i_m = 2m - 1, nu_m = 1
    OmegaIndexTable table(path);
    for (int m = 1; m <= 6; ++m) {
        IndexPair p = table.iterate_pair(m);
        CHECK(p.index == 2 * m - 1);
        CHECK(p.nullity == 1);
    }
    CHECK(mean_index(path) == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("linearization of a symmetric orbit is half-period periodic") {
    auto body = e2();
    auto orbit = ellipsoid_characteristics({1.0, std::pow(2.0, 0.25)}).orbits[1];
    auto sys = linearize_orbit(body, kAlpha, orbit);
    for (int i = 0; i < 16; ++i) {
        double s = sys->tau() * i / 32.0;
        CHECK((sys->B(s + sys->tau() / 2.0) - sys->B(s)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("finder on the weakly non-resonant pair returns exactly two orbits") {
    auto body = e2();
    FinderConfig cfg;
    cfg.K = 24;
    cfg.random_seeds = 8;
    cfg.rng_seed = 42;
    auto result = find_closed_characteristics(body, kAlpha, cfg);
    REQUIRE(result.orbits.size() == 2);
    CHECK(result.orbits[0].action < result.orbits[1].action);
    auto analytic = ellipsoid_characteristics({1.0, std::pow(2.0, 0.25)}).orbits;
    CHECK(result.orbits[0].tau == doctest::Approx(analytic[0].tau).epsilon(1e-7));
    CHECK(result.orbits[1].tau == doctest::Approx(analytic[1].tau).epsilon(1e-7));
    for (const auto& orbit : result.orbits) CHECK(orbit.symmetry == OrbitSymmetry::symmetric);
}
