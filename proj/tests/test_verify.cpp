#include <doctest.h>

#include <cmath>

#include "sil/verify.hpp"

using namespace sil;

namespace {

const double kAlpha = 1.5;

std::vector<double> e2_radii() { return {1.0, std::pow(2.0, 0.25)}; }

OrbitData orbit_data(const std::vector<double>& radii, int which) {
    ConvexBody body = ConvexBody::ellipsoid(radii);
    auto orbits = ellipsoid_characteristics(radii).orbits;
    return prepare_orbit_data(body, kAlpha, orbits[which]);
}

/// Closed-form iterate index of an ellipsoid orbit: the base term n, the
/// in-plane contribution 2m - 2, and two transverse passages per completed
/// frequency ratio: i_m = n + (2m - 2) + 2 sum_j floor(m r_k^2 / r_j^2).
long ellipsoid_index_oracle(const std::vector<double>& radii, int k, long m) {
    long n = static_cast<long>(radii.size());
    long acc = n + 2 * m - 2;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (static_cast<int>(j) == k) continue;
        double rho = (radii[k] * radii[k]) / (radii[j] * radii[j]);
        acc += 2 * static_cast<long>(std::floor(m * rho));
    }
    return acc;
}

}  // namespace

TEST_CASE("orbit data for the unit circle") {
    auto data = orbit_data({1.0}, 0);
    CHECK(data.first == IndexPair{1, 1});
    CHECK(data.mean_index == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(data.s_plus_at_one == 1);
    CHECK(data.s_plus_square_at_one == 1);
    CHECK(data.tau_alpha == doctest::Approx(4.0 * M_PI / kAlpha).epsilon(1e-9));
}

TEST_CASE("index intervals follow the closed-form ellipsoid pattern") {
    for (int which : {0, 1}) {
        auto data = orbit_data(e2_radii(), which);
        auto intervals = index_intervals(data, 20, which);
        REQUIRE(intervals.size() == 20);
        for (const auto& iv : intervals) {
            CHECK(iv.lo == ellipsoid_index_oracle(e2_radii(), which, iv.m));
            CHECK(iv.nullity == 1);
            CHECK(iv.hi == iv.lo + 1);
        }
        // mean index equals the slope 2 + 2 sum rho_j
        double rho = which == 0 ? 1.0 / std::sqrt(2.0) : std::sqrt(2.0);
        CHECK(data.mean_index == doctest::Approx(2.0 + 2.0 * rho).epsilon(1e-9));
        // strict disjointness with gaps >= 2 comes out of index_intervals
        // without throwing; also check it explicitly
        for (std::size_t i = 0; i + 1 < intervals.size(); ++i) {
            CHECK(intervals[i + 1].lo - intervals[i].lo >= 2);
            CHECK(intervals[i + 1].lo > intervals[i].hi);
        }
    }
}

TEST_CASE("first interval starts at n") {
    auto data = orbit_data(e2_radii(), 0);
    auto intervals = index_intervals(data, 1, 0);
    CHECK(intervals[0].lo == 2);  // i_1 = n for the shortest orbit
}

TEST_CASE("coverage of 2k-2+n") {
    SUBCASE("unit circle covers every odd target") {
        std::vector<OrbitData> orbits{orbit_data({1.0}, 0)};
        auto cov = covering_injection_check(orbits, 10);
        CHECK(cov.all_covered);
        CHECK(cov.matching_exists);
        for (const auto& row : cov.rows) {
            REQUIRE(row.candidates.size() == 1);
            // target 2k-1 is covered by iterate m = k (index 2k-1)
            CHECK(row.candidates[0].second == row.k);
        }
    }

    SUBCASE("weakly non-resonant pair: complementary coverage") {
        std::vector<OrbitData> orbits{orbit_data(e2_radii(), 0), orbit_data(e2_radii(), 1)};
        auto cov = covering_injection_check(orbits, 20);
        CHECK(cov.all_covered);
        CHECK(cov.matching_exists);
        // each target covered exactly once (Beatty-type complementarity)
        for (const auto& row : cov.rows) CHECK(row.candidates.size() == 1);

        // negative control: dropping either orbit breaks coverage
        for (int drop = 0; drop < 2; ++drop) {
            std::vector<OrbitData> rest;
            rest.push_back(orbit_data(e2_radii(), 1 - drop));
            auto broken = covering_injection_check(rest, 20);
            CHECK_FALSE(broken.all_covered);
        }
    }
}

TEST_CASE("common index jump certificates on the unit circle") {
    std::vector<OrbitData> orbits{orbit_data({1.0}, 0)};
    JumpSearchConfig cfg;
    cfg.N_max = 100;
    cfg.max_certificates = 1000;
    auto certs = index_jump_search(orbits, 1, 0, cfg);
    REQUIRE(certs.size() >= 3);
    for (const auto& cert : certs) {
        CHECK(cert.all_hold);
        // circle: every certificate has N = 2 m and hits both equality cases
        CHECK(cert.N == 2 * cert.entries[0].m);
        CHECK(cert.entries[0].equality_case);
        CHECK(cert.entries[0].elliptic_ok);
    }
    CHECK(recheck_certificate(orbits, 1, 0, certs.front()));
}

TEST_CASE("common index jump certificates on the non-resonant pair") {
    std::vector<OrbitData> orbits{orbit_data(e2_radii(), 0), orbit_data(e2_radii(), 1)};
    JumpSearchConfig cfg;
    cfg.N_max = 2000;
    cfg.max_certificates = 3;
    auto certs = index_jump_search(orbits, 2, 0, cfg);
    REQUIRE(certs.size() >= 1);
    const auto& cert = certs.front();
    CHECK(cert.all_hold);
    CHECK(cert.symmetric_pairing_ok);  // vacuous with q2 = 0
    CHECK(recheck_certificate(orbits, 2, 0, cert));
    // certificate data satisfies the audit identities by construction; spot
    // check the two-sided bound values against the tables
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        IndexPair mid = orbits[k].table->iterate_pair(2 * cert.entries[k].m);
        CHECK(mid.index == cert.entries[k].i_2m);
        CHECK(mid.index >= 2 * cert.N - 2);
        CHECK(mid.index + mid.nullity <= 2 * cert.N + 2);
    }
}

TEST_CASE("symmetric orbits factor through the half path") {
    ConvexBody body = ConvexBody::ellipsoid(e2_radii());
    auto orbits = ellipsoid_characteristics(e2_radii()).orbits;
    for (const auto& orbit : orbits) {
        auto check = symmetric_halfpath_check(body, kAlpha, orbit);
        CHECK(check.applicable);
        CHECK(check.identity_holds);
        CHECK(check.identity_error <= 1e-8);
        CHECK(check.index_route_agrees);
    }
}

TEST_CASE("half-path check skips asymmetric curves") {
    ConvexBody body = ConvexBody::ellipsoid(e2_radii());
    ClosedCharacteristic fake;
    fake.tau = kTwoPi;
    fake.symmetry = OrbitSymmetry::asymmetric;
    fake.curve = [](double) { return Vector::Zero(4); };
    fake.velocity = [](double) { return Vector::Zero(4); };
    auto check = symmetric_halfpath_check(body, kAlpha, fake);
    CHECK_FALSE(check.applicable);
}

TEST_CASE("count verification on the weakly non-resonant pair") {
    ConvexBody body = ConvexBody::ellipsoid(e2_radii());
    CountConfig cfg;
    cfg.finder.K = 24;
    cfg.finder.random_seeds = 6;
    cfg.jump.N_max = 2000;
    cfg.jump.max_certificates = 3;
    CountReport report = count_lower_bound_check(body, kAlpha, cfg);
    CHECK(report.n == 2);
    CHECK(report.q1 == 2);
    CHECK(report.q2 == 0);
    CHECK(report.total == 2);
    CHECK(report.verdict);
    CHECK_FALSE(report.inconclusive);
    REQUIRE(report.injection.size() == 2);
    // distinct representatives
    CHECK((report.injection[0].orbit != report.injection[1].orbit ||
           report.injection[0].m != report.injection[1].m));
    for (const auto& row : report.injection) CHECK(row.orbit >= 0);

    auto j = count_report_json(report, body, kAlpha);
    CHECK(j["schema_version"] == 1);
    CHECK(j["verdict"] == true);
    CHECK(j["orbits"].size() == 2);
    CHECK(j["resonance_warnings"].empty());
}
