#include <doctest.h>

#include <cmath>
#include <random>

#include "sil/convex_body.hpp"

using namespace sil;

namespace {

Vector random_point(int dim, std::mt19937_64& rng, double lo = 0.3, double hi = 2.0) {
    std::uniform_real_distribution<double> radius(lo, hi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(dim);
    for (int d = 0; d < dim; ++d) v[d] = gauss(rng);
    v *= radius(rng) / v.norm();
    return v;
}

ConvexBody perturbed_sample() {
    std::vector<PerturbationTerm> terms;
    terms.push_back({0.7, {2, 0, 2, 0}});
    terms.push_back({-0.4, {0, 2, 0, 2}});
    terms.push_back({0.3, {1, 1, 1, 1}});
    return ConvexBody::perturbed_ellipsoid({1.0, std::pow(2.0, 0.25)}, 0.02, terms);
}

}  // namespace

TEST_CASE("ellipsoid gauge closed forms") {
    auto body = ConvexBody::ellipsoid({1.0, 2.0});
    Vector x = Vector::Zero(4);
    x[0] = std::sqrt(2.0);  // (q1, q2, p1, p2); first plane touches at sqrt 2 r1
    CHECK(body.gauge(x) == doctest::Approx(1.0));
    x[0] = 0.0;
    x[1] = 2.0 * std::sqrt(2.0);
    CHECK(body.gauge(x) == doctest::Approx(1.0));
}

TEST_CASE("gauge invariants: homogeneity, symmetry, Euler identity") {
    std::mt19937_64 rng(8080);
    for (const auto& body : {ConvexBody::ellipsoid({0.7, 1.3, 2.1}), perturbed_sample()}) {
        int dim = body.dim();
        for (int rep = 0; rep < 20; ++rep) {
            Vector x = random_point(dim, rng);
            double j = body.gauge(x);
            CHECK(body.gauge(2.5 * x) == doctest::Approx(2.5 * j).epsilon(1e-9));
            CHECK(body.gauge(-x) == doctest::Approx(j).epsilon(1e-12));
            CHECK(body.gauge_grad(x).dot(x) == doctest::Approx(j).epsilon(1e-8));
        }
        CHECK(body.convexity_margin() > 0.0);
    }
}

TEST_CASE("gauge derivatives match finite differences") {
    std::mt19937_64 rng(117);
    auto body = perturbed_sample();
    const int dim = body.dim();
    const double h = 1e-6;
    for (int rep = 0; rep < 6; ++rep) {
        Vector x = random_point(dim, rng, 0.5, 1.5);
        Vector g = body.gauge_grad(x);
        Matrix H = body.gauge_hess(x);
        for (int d = 0; d < dim; ++d) {
            Vector e = Vector::Zero(dim);
            e[d] = h;
            double fd = (body.gauge(x + e) - body.gauge(x - e)) / (2.0 * h);
            CHECK(g[d] == doctest::Approx(fd).epsilon(1e-5));
            Vector fdg = (body.gauge_grad(x + e) - body.gauge_grad(x - e)) / (2.0 * h);
            for (int c = 0; c < dim; ++c)
                CHECK(H(c, d) == doctest::Approx(fdg[c]).epsilon(5e-4).scale(1.0));
        }
    }
}

TEST_CASE("polar gauge duality") {
    std::mt19937_64 rng(2718);
    for (const auto& body : {ConvexBody::ellipsoid({1.0, 1.6}), perturbed_sample()}) {
        int dim = body.dim();
        for (int rep = 0; rep < 12; ++rep) {
            Vector x = random_point(dim, rng);
            Vector y = random_point(dim, rng);
            // polar inequality <x,y> <= j(x) j°(y)
            double lhs = x.dot(y);
            double rhs = body.gauge(x) * body.polar_gauge(y);
            CHECK(lhs <= rhs * (1.0 + 1e-6));
            // support point attains it
            auto sup = body.support(y);
            CHECK(body.gauge(sup.point) == doctest::Approx(1.0).epsilon(1e-8));
            CHECK(sup.point.dot(y) == doctest::Approx(sup.polar).epsilon(1e-8));
        }
    }
}

TEST_CASE("polar gauge against brute force on the sphere") {
    auto body = perturbed_sample();
    std::mt19937_64 rng(55);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 4; ++rep) {
        Vector y(4);
        for (int d = 0; d < 4; ++d) y[d] = gauss(rng);
        double best = 0.0;
        for (int s = 0; s < 40000; ++s) {
            Vector d(4);
            for (int c = 0; c < 4; ++c) d[c] = gauss(rng);
            best = std::max(best, d.dot(y) / body.gauge(d));
        }
        double exact = body.polar_gauge(y);
        CHECK(exact >= best - 1e-9);
        CHECK(exact == doctest::Approx(best).epsilon(2e-3));
    }
}

TEST_CASE("body spec JSON round trip") {
    BodySpec spec;
    spec.body = perturbed_sample();
    spec.alpha = 1.5;
    auto j = spec.to_json();
    BodySpec back = BodySpec::from_json(j);
    CHECK(back.alpha == spec.alpha);
    CHECK(back.body.kind() == "perturbed");
    CHECK(back.body.radii() == spec.body.radii());
    CHECK(back.body.epsilon() == spec.body.epsilon());
    CHECK(back.to_json() == j);  // lossless

    // validation errors name the field
    nlohmann::json bad = {{"kind", "ellipsoid"}, {"radii", {1.0}}};
    CHECK_THROWS_WITH_AS(BodySpec::from_json(bad), "body spec: missing field 'n'", DomainError);
    nlohmann::json bad_alpha = {{"n", 1}, {"kind", "ellipsoid"}, {"radii", {1.0}}, {"alpha", 2.5}};
    CHECK_THROWS_AS(BodySpec::from_json(bad_alpha), DomainError);
}

TEST_CASE("degenerate and invalid bodies are rejected") {
    CHECK_THROWS_AS(ConvexBody::ellipsoid({1.0, -1.0}), DomainError);
    CHECK_THROWS_AS(ConvexBody::ellipsoid({}), DimensionError);
    // a huge perturbation destroys convexity
    std::vector<PerturbationTerm> terms;
    terms.push_back({1.0, {4, 0, 0, 0}});
    CHECK_THROWS_AS(ConvexBody::perturbed_ellipsoid({1.0, 1.0}, 2.0, terms), DomainError);
    // odd total degree breaks central symmetry
    std::vector<PerturbationTerm> odd;
    odd.push_back({0.1, {1, 0, 0, 0}});
    CHECK_THROWS_AS(ConvexBody::perturbed_ellipsoid({1.0, 1.0}, 0.01, odd), DomainError);

    auto body = ConvexBody::ellipsoid({1.0});
    CHECK_THROWS_AS(body.gauge_hess(Vector::Zero(2)), SingularityError);
}

TEST_CASE("resonance detection") {
    CHECK(resonant_pairs({1.0, 2.0}).size() == 1);
    CHECK(resonant_pairs({1.0, std::pow(2.0, 0.25)}).empty());
    auto hits = resonant_pairs({1.0, 1.5, std::sqrt(2.0)});
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].p == 2);
    CHECK(hits[0].q == 3);
}
