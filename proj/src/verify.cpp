#include "sil/verify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sil/random_suite.hpp"
#include "sil/version.hpp"

namespace sil {

namespace {

double x_scale(const ClosedCharacteristic& orbit) {
    double s = 0.0;
    for (const auto& x : orbit.samples) s = std::max(s, x.norm());
    return s;
}

bool is_elliptic(const Matrix& M, double modulus_tol = 1e-6) {
    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
        if (std::abs(std::abs(es.eigenvalues()[j]) - 1.0) > modulus_tol) return false;
    return true;
}

/// Iterate data for an entry of the extended orbit list: base orbits use
/// their table directly, doubled entries query the base table at 2m.
struct EntryView {
    const OrbitData* data;
    bool doubled;

    IndexPair at(long m) const { return data->table->iterate_pair(doubled ? 2 * m : m); }
    IndexPair first() const { return at(1); }
    long s_plus() const { return doubled ? data->s_plus_square_at_one : data->s_plus_at_one; }
    double mean() const { return doubled ? 2.0 * data->mean_index : data->mean_index; }
    Matrix end_matrix() const {
        const Matrix& M = data->path.end_matrix();
        return doubled ? Matrix(M * M) : M;
    }
};

std::vector<EntryView> extended_entries(const std::vector<OrbitData>& orbits, int q1, int q2) {
    if (q1 + q2 != static_cast<int>(orbits.size()))
        throw DomainError("index_jump_search: orbit list must hold q1 + q2 entries");
    std::vector<EntryView> entries;
    for (int k = 0; k < q1 + q2; ++k) entries.push_back({&orbits[k], false});
    for (int k = q1; k < q1 + q2; ++k) entries.push_back({&orbits[k], true});
    return entries;
}

CertificateEntry test_entry(const EntryView& e, long N, long m, int n) {
    CertificateEntry out;
    out.m = m;
    IndexPair p1 = e.first();
    IndexPair back = e.at(2 * m - 1);
    IndexPair mid = e.at(2 * m);
    IndexPair fwd = e.at(2 * m + 1);
    out.i_2m = mid.index;
    out.nu_2m = mid.nullity;
    out.conditions[0] = back.nullity == p1.nullity;
    out.conditions[1] = fwd.nullity == p1.nullity;
    out.conditions[2] =
        back.index + back.nullity == 2 * N - (p1.index + 2 * e.s_plus() - p1.nullity);
    out.conditions[3] = fwd.index == 2 * N + p1.index;
    out.conditions[4] = mid.index >= 2 * N - n;
    out.conditions[5] = mid.index + mid.nullity <= 2 * N + n;
    out.equality_case = (mid.index == 2 * N - n) || (mid.index + mid.nullity == 2 * N + n);
    if (out.equality_case) out.elliptic_ok = is_elliptic(e.end_matrix());
    return out;
}

bool entry_all(const CertificateEntry& e) {
    for (bool c : e.conditions)
        if (!c) return false;
    return true;
}

}  // namespace

OrbitData prepare_orbit_data(const ConvexBody& body, double alpha,
                             const ClosedCharacteristic& orbit, int steps, const Tolerances& tol) {
    OrbitData data;
    data.orbit = orbit;
    data.system = linearize_orbit(body, alpha, orbit, tol);
    if (!data.system->positive_definite())
        throw UnsupportedInputError("prepare_orbit_data: linearized system not positive definite");
    int use_steps = steps > 0 ? steps : recommended_steps(*data.system, 1024);
    data.path = integrate_fundamental(data.system, use_steps, tol.path_tol);
    data.table = std::make_shared<OmegaIndexTable>(data.path, tol);
    data.tau_alpha = data.system->tau();
    data.mean_index = data.table->circle_average();
    data.first = data.table->iterate_pair(1);
    data.s_plus_at_one = splitting_numbers(data.path, Complex(1.0, 0.0), 0.0, tol).s_plus;
    data.s_plus_square_at_one =
        splitting_numbers(iterate_path(data.path, 2), Complex(1.0, 0.0), 0.0, tol).s_plus;
    return data;
}

std::vector<IndexInterval> index_intervals(const OrbitData& data, int m_max, int orbit_id) {
    if (m_max < 1) throw DomainError("index_intervals: m_max must be positive");
    std::vector<IndexInterval> out;
    const int two_n = 2 * data.path.n();
    for (long m = 1; m <= m_max; ++m) {
        IndexPair p = data.table->iterate_pair(m);
        IndexInterval iv;
        iv.orbit = orbit_id;
        iv.m = m;
        iv.lo = p.index;
        iv.hi = p.index + p.nullity;
        iv.nullity = p.nullity;
        if (p.nullity < 0 || p.nullity > two_n)
            throw ConsistencyError("index_intervals: nullity out of range");
        out.push_back(iv);
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        if (out[i + 1].lo - out[i].lo < 2) {
            std::ostringstream os;
            os << "index_intervals: iterate index gap below 2 at m=" << out[i].m
               << " (theorem violation indicates an index computation bug)";
            throw ConsistencyError(os.str());
        }
        if (!(out[i + 1].lo > out[i].hi - 1)) {
            std::ostringstream os;
            os << "index_intervals: iterate " << out[i + 1].m
               << " does not clear the previous interval interior";
            throw ConsistencyError(os.str());
        }
    }
    return out;
}

CoverageResult covering_injection_check(const std::vector<OrbitData>& orbits, int k_max) {
    CoverageResult out;
    if (orbits.empty()) return out;
    const int n = orbits.front().path.n();

    for (long k = 1; k <= k_max; ++k) {
        CoverageRow row;
        row.k = k;
        row.target = 2 * k - 2 + n;
        long m_cap = (row.target - n) / 2 + 2;
        for (std::size_t o = 0; o < orbits.size(); ++o) {
            for (long m = 1; m <= m_cap; ++m) {
                IndexPair p = orbits[o].table->iterate_pair(m);
                if (p.index <= row.target && row.target <= p.index + p.nullity - 1)
                    row.candidates.emplace_back(static_cast<int>(o), m);
                if (p.index > row.target) break;  // indices increase with m
            }
        }
        out.rows.push_back(std::move(row));
    }
    out.all_covered = std::all_of(out.rows.begin(), out.rows.end(),
                                  [](const CoverageRow& r) { return !r.candidates.empty(); });

    // system of distinct representatives via augmenting paths
    std::map<std::pair<int, long>, int> owner;  // candidate -> row index
    out.assignment.assign(out.rows.size(), {-1, 0});
    std::function<bool(int, std::set<std::pair<int, long>>&)> augment =
        [&](int row, std::set<std::pair<int, long>>& visited) -> bool {
        for (const auto& cand : out.rows[row].candidates) {
            if (visited.count(cand)) continue;
            visited.insert(cand);
            auto it = owner.find(cand);
            if (it == owner.end() || augment(it->second, visited)) {
                owner[cand] = row;
                out.assignment[row] = cand;
                return true;
            }
        }
        return false;
    };
    bool matched = true;
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        std::set<std::pair<int, long>> visited;
        if (!augment(static_cast<int>(r), visited)) matched = false;
    }
    out.matching_exists = matched && out.all_covered;
    return out;
}

std::vector<JumpCertificate> index_jump_search(const std::vector<OrbitData>& orbits, int q1,
                                               int q2, const JumpSearchConfig& cfg) {
    std::vector<JumpCertificate> found;
    if (orbits.empty()) return found;
    const int n = orbits.front().path.n();
    auto entries = extended_entries(orbits, q1, q2);
    for (const auto& e : entries)
        if (!(e.mean() > 0))
            throw UnsupportedInputError("index_jump_search: entry with nonpositive mean index");

    for (long N = 1; N <= cfg.N_max; ++N) {
        JumpCertificate cert;
        cert.N = N;
        bool ok = true;
        for (const auto& e : entries) {
            long center = std::lround(static_cast<double>(N) / e.mean());
            long lo = std::max<long>(1, center - cfg.window);
            long hi = center + cfg.window;
            std::optional<CertificateEntry> hit;
            for (long m = lo; m <= hi && !hit; ++m) {
                CertificateEntry t = test_entry(e, N, m, n);
                if (entry_all(t)) hit = t;
            }
            if (!hit) {
                ok = false;
                break;
            }
            cert.entries.push_back(*hit);
        }
        if (!ok) continue;
        cert.all_hold = true;
        for (int j = 0; j < q2; ++j) {
            long m_base = cert.entries[q1 + j].m;
            long m_doubled = cert.entries[q1 + q2 + j].m;
            if (m_base != 2 * m_doubled) cert.symmetric_pairing_ok = false;
        }
        found.push_back(std::move(cert));
        if (static_cast<int>(found.size()) >= cfg.max_certificates) break;
    }
    return found;
}

bool recheck_certificate(const std::vector<OrbitData>& orbits, int q1, int q2,
                         const JumpCertificate& cert, const Tolerances& tol) {
    if (!cert.all_hold) return false;
    const int n = orbits.front().path.n();
    // fresh tables: every omega-index sweep is recomputed from scratch
    std::vector<OrbitData> fresh = orbits;
    for (auto& d : fresh) {
        d.table = std::make_shared<OmegaIndexTable>(d.path, tol);
        d.s_plus_at_one = splitting_numbers(d.path, Complex(1.0, 0.0), 0.0, tol).s_plus;
        d.s_plus_square_at_one =
            splitting_numbers(iterate_path(d.path, 2), Complex(1.0, 0.0), 0.0, tol).s_plus;
    }
    auto entries = extended_entries(fresh, q1, q2);
    if (entries.size() != cert.entries.size()) return false;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        CertificateEntry redo = test_entry(entries[k], cert.N, cert.entries[k].m, n);
        if (!entry_all(redo)) return false;
        if (redo.i_2m != cert.entries[k].i_2m || redo.nu_2m != cert.entries[k].nu_2m)
            return false;
    }
    return true;
}

HalfPathCheck symmetric_halfpath_check(const ConvexBody& body, double alpha,
                                       const ClosedCharacteristic& orbit,
                                       const Tolerances& tol) {
    HalfPathCheck out;
    OrbitSymmetry cls = orbit.symmetry != OrbitSymmetry::unknown
                            ? orbit.symmetry
                            : classify_symmetry(body, orbit, tol);
    if (cls != OrbitSymmetry::symmetric) return out;  // not applicable
    out.applicable = true;

    auto sys = linearize_orbit(body, alpha, orbit, tol);
    int steps = recommended_steps(*sys, 1024);
    if (steps % 2 != 0) ++steps;
    SymplecticPath full = integrate_fundamental(sys, steps, tol.path_tol);
    const double half_tau = sys->tau() / 2.0;

    Matrix mid = full.at(half_tau);
    double err = 0.0;
    for (int i = 0; i <= 32; ++i) {
        double t = half_tau * i / 32.0;
        err = std::max(err, (full.at(t + half_tau) - full.at(t) * mid).cwiseAbs().maxCoeff());
    }
    out.identity_error = err;
    out.identity_holds = err <= 1e-6 * std::max(1.0, mid.norm());

    // index route: the full path must carry the same pair as the doubled half
    auto half_sys = std::make_shared<LinearSystem>(
        sys->n(), half_tau, [sys](double t) { return sys->B(t); }, 1e-8, 64);
    SymplecticPath half = integrate_fundamental(half_sys, steps / 2, tol.path_tol);
    IndexPair via_half = iterated_index(half, 2, tol);
    IndexPair direct = maslov_index(full, tol);
    out.index_route_agrees = via_half == direct;
    return out;
}

CountReport count_lower_bound_check(const ConvexBody& body, double alpha, const CountConfig& cfg,
                                    const Tolerances& tol) {
    CountReport report;
    report.n = body.n();

    OrbitSearchResult sweep = find_closed_characteristics(body, alpha, cfg.finder, tol);
    report.seed_outcomes = std::move(sweep.outcomes);
    report.resonances = std::move(sweep.resonances);
    if (sweep.orbits.empty()) {
        report.inconclusive = true;
        report.diagnosis = "no orbits found by the seed sweep";
        return report;
    }

    // symmetry classes: q1 symmetric orbits, q2 asymmetric pairs
    std::vector<ClosedCharacteristic> symmetric, asym_reps;
    std::vector<bool> paired(sweep.orbits.size(), false);
    for (std::size_t i = 0; i < sweep.orbits.size(); ++i) {
        if (sweep.orbits[i].symmetry == OrbitSymmetry::symmetric) {
            symmetric.push_back(sweep.orbits[i]);
            continue;
        }
        if (paired[i]) continue;
        // the mirror orbit -x solves the same problem on a symmetric body;
        // pair it with a found partner when present
        for (std::size_t j = i + 1; j < sweep.orbits.size(); ++j) {
            if (paired[j] || sweep.orbits[j].symmetry == OrbitSymmetry::symmetric) continue;
            auto ci = sweep.orbits[i].curve;
            ClosedCharacteristic mirrored = sweep.orbits[i];
            mirrored.curve = [ci](double t) { return Vector(-ci(t)); };
            auto cv = sweep.orbits[i].velocity;
            mirrored.velocity = [cv](double t) { return Vector(-cv(t)); };
            for (auto& s : mirrored.samples) s = -s;
            // same geometric image as orbit j?
            double d = 0.0;
            for (int g = 0; g < 64; ++g) {
                Vector x = mirrored.curve(mirrored.tau * g / 64);
                double best = 1e300;
                for (int h = 0; h < 64; ++h)
                    best = std::min(best,
                                    (x - sweep.orbits[j].curve(sweep.orbits[j].tau * h / 64)).norm());
                d = std::max(d, best);
            }
            if (d < 1e-3 * std::max(1.0, x_scale(sweep.orbits[i]))) paired[j] = true;
        }
        asym_reps.push_back(sweep.orbits[i]);
    }
    report.q1 = static_cast<int>(symmetric.size());
    report.q2 = static_cast<int>(asym_reps.size());
    report.total = report.q1 + 2 * report.q2;

    std::vector<ClosedCharacteristic> entry_orbits = symmetric;
    entry_orbits.insert(entry_orbits.end(), asym_reps.begin(), asym_reps.end());
    for (const auto& orbit : entry_orbits)
        report.orbits.push_back(prepare_orbit_data(body, alpha, orbit, cfg.steps, tol));

    // iteration inequalities (hard consistency checks) and interval table
    for (std::size_t o = 0; o < report.orbits.size(); ++o)
        report.intervals.push_back(
            index_intervals(report.orbits[o], cfg.m_max, static_cast<int>(o)));

    report.coverage = covering_injection_check(report.orbits, cfg.k_max);

    report.certificates = index_jump_search(report.orbits, report.q1, report.q2, cfg.jump);
    if (report.certificates.empty()) {
        report.inconclusive = true;
        report.diagnosis = "no common index jump certificate within N_max";
        return report;
    }

    // injection table around the smallest certificate
    const JumpCertificate& cert = report.certificates.front();
    const long N = cert.N;
    bool injection_ok = true;
    std::map<std::pair<int, long>, int> used;
    for (int s = 1; s <= report.n; ++s) {
        InjectionRow row;
        row.s = s;
        row.target = 2 * (N - s + 1) - 2 + report.n;
        // candidates near m ~ target / mean
        std::vector<std::pair<int, long>> cands;
        for (std::size_t o = 0; o < report.orbits.size(); ++o) {
            double mean = report.orbits[o].mean_index;
            long center = std::lround(static_cast<double>(row.target) / mean);
            for (long m = std::max<long>(1, center - 8); m <= center + 8; ++m) {
                IndexPair p = report.orbits[o].table->iterate_pair(m);
                if (p.index <= row.target && row.target <= p.index + p.nullity - 1)
                    cands.emplace_back(static_cast<int>(o), m);
            }
        }
        if (cands.empty()) {
            injection_ok = false;
            report.diagnosis = "injection target uncovered; the orbit sweep may be incomplete";
        } else {
            // prefer the certificate-shaped iterate count
            std::optional<std::pair<int, long>> choice;
            for (const auto& c : cands) {
                long mk = cert.entries[c.first].m;
                bool shaped = (c.first < report.q1) ? (c.second == 2 * mk)
                                                    : (c.second == 2 * mk - 1 || c.second == 2 * mk);
                if (shaped && !used.count(c)) {
                    choice = c;
                    break;
                }
            }
            if (!choice)
                for (const auto& c : cands)
                    if (!used.count(c)) {
                        choice = c;
                        break;
                    }
            if (!choice) {
                injection_ok = false;
                report.diagnosis = "injection table has no distinct representative";
            } else {
                used[*choice] = s;
                row.orbit = choice->first;
                row.m = choice->second;
            }
        }
        report.injection.push_back(row);
    }

    // multiplicity bounds: a symmetric class absorbs one s, an asymmetric
    // pair at most two
    std::map<int, int> per_orbit;
    for (const auto& row : report.injection)
        if (row.orbit >= 0) per_orbit[row.orbit]++;
    for (const auto& [o, count] : per_orbit) {
        int cap = (o < report.q1) ? 1 : 2;
        if (count > cap) {
            injection_ok = false;
            report.diagnosis = "injection multiplicity bound violated";
        }
    }

    if (!injection_ok) {
        report.inconclusive = true;
        return report;
    }
    report.verdict = report.total >= report.n;
    if (!report.verdict) {
        // a convex symmetric body cannot violate the count theorem
        report.inconclusive = true;
        report.diagnosis = "fewer orbit classes than n: the orbit sweep is incomplete";
    }
    return report;
}

nlohmann::json count_report_json(const CountReport& report, const ConvexBody& body,
                                 double alpha) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool_version"] = kVersion;
    BodySpec spec;
    spec.body = body;
    spec.alpha = alpha;
    j["body"] = spec.to_json();
    j["n"] = report.n;
    j["q1"] = report.q1;
    j["q2"] = report.q2;
    j["total"] = report.total;
    j["verdict"] = report.verdict;
    j["inconclusive"] = report.inconclusive;
    j["diagnosis"] = report.diagnosis;

    j["orbits"] = nlohmann::json::array();
    for (std::size_t o = 0; o < report.orbits.size(); ++o) {
        const OrbitData& d = report.orbits[o];
        nlohmann::json row;
        row["id"] = o;
        row["tau"] = d.orbit.tau;
        row["tau_alpha"] = d.tau_alpha;
        row["action"] = d.orbit.action;
        row["symmetry"] =
            d.orbit.symmetry == OrbitSymmetry::symmetric ? "symmetric" : "asymmetric";
        row["minimal_period"] = d.orbit.minimal_period;
        row["mean_index"] = d.mean_index;
        row["splitting_plus_at_one"] = d.s_plus_at_one;
        row["iterates"] = nlohmann::json::array();
        if (o < report.intervals.size())
            for (const auto& iv : report.intervals[o])
                row["iterates"].push_back(
                    {{"m", iv.m}, {"index", iv.lo}, {"nullity", iv.nullity}});
        j["orbits"].push_back(row);
    }

    j["coverage"] = nlohmann::json::array();
    for (const auto& row : report.coverage.rows) {
        nlohmann::json r;
        r["k"] = row.k;
        r["target"] = row.target;
        r["candidates"] = nlohmann::json::array();
        for (const auto& c : row.candidates) r["candidates"].push_back({c.first, c.second});
        j["coverage"].push_back(r);
    }
    j["coverage_complete"] = report.coverage.all_covered;
    j["coverage_matching"] = report.coverage.matching_exists;

    j["certificates"] = nlohmann::json::array();
    for (const auto& cert : report.certificates) {
        nlohmann::json c;
        c["N"] = cert.N;
        c["entries"] = nlohmann::json::array();
        for (const auto& e : cert.entries)
            c["entries"].push_back({{"m", e.m},
                                    {"i_2m", e.i_2m},
                                    {"nu_2m", e.nu_2m},
                                    {"equality_case", e.equality_case},
                                    {"elliptic_ok", e.elliptic_ok}});
        c["symmetric_pairing_ok"] = cert.symmetric_pairing_ok;
        j["certificates"].push_back(c);
    }

    j["injection"] = nlohmann::json::array();
    for (const auto& row : report.injection)
        j["injection"].push_back(
            {{"s", row.s}, {"target", row.target}, {"orbit", row.orbit}, {"m", row.m}});

    j["resonance_warnings"] = nlohmann::json::array();
    for (const auto& r : report.resonances)
        j["resonance_warnings"].push_back({{"j", r.j}, {"k", r.k}, {"p", r.p}, {"q", r.q}});
    return j;
}

}  // namespace sil
