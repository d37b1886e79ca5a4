#include "sil/report.hpp"

#include <fstream>
#include <sstream>

#include "sil/version.hpp"

namespace sil {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

nlohmann::json report_stamp(const nlohmann::json& config, std::uint64_t rng_seed) {
    nlohmann::json j;
    std::ostringstream hash;
    hash << std::hex << fnv1a64(config.dump());
    j["config_hash"] = hash.str();
    j["config"] = config;
    j["rng_seed"] = rng_seed;
    j["tool_version"] = kVersion;
    j["schema_version"] = kReportSchemaVersion;
    return j;
}

std::shared_ptr<const LinearSystem> load_system_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open system spec file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("malformed JSON in " + path + ": " + e.what());
    }

    if (j.contains("B")) {
        if (!j.contains("n")) throw DomainError("system spec: missing field 'n'");
        if (!j.contains("tau")) throw DomainError("system spec: missing field 'tau'");
        int n = j.at("n").get<int>();
        double tau = j.at("tau").get<double>();
        auto rows = j.at("B").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(rows.size()) != 2 * n)
            throw DomainError("system spec: field 'B' must be a 2n x 2n matrix");
        Matrix B(2 * n, 2 * n);
        for (int r = 0; r < 2 * n; ++r) {
            if (static_cast<int>(rows[r].size()) != 2 * n)
                throw DomainError("system spec: field 'B' must be a 2n x 2n matrix");
            for (int c = 0; c < 2 * n; ++c) B(r, c) = rows[r][c];
        }
        return std::make_shared<LinearSystem>(n, tau, [B](double) { return B; });
    }
    if (j.contains("body")) {
        BodySpec spec = j.at("body").is_string()
                            ? BodySpec::load(j.at("body").get<std::string>())
                            : BodySpec::from_json(j.at("body"));
        if (spec.body.kind() != "ellipsoid")
            throw DomainError("system spec: orbit references need an ellipsoid body");
        int which = j.value("orbit", 0);
        auto orbits = ellipsoid_characteristics(spec.body.radii()).orbits;
        if (which < 0 || which >= static_cast<int>(orbits.size()))
            throw DomainError("system spec: field 'orbit' out of range");
        double alpha = j.value("alpha", spec.alpha);
        return linearize_orbit(spec.body, alpha, orbits[which]);
    }
    throw DomainError("system spec: need either field 'B' or field 'body'");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write file: " + path);
    out << content;
}

std::string interval_csv(const CountReport& report) {
    std::ostringstream os;
    os << "orbit,m,index,nullity,lo,hi\n";
    for (const auto& ivs : report.intervals)
        for (const auto& iv : ivs)
            os << iv.orbit << ',' << iv.m << ',' << iv.lo << ',' << iv.nullity << ',' << iv.lo
               << ',' << iv.hi << '\n';
    return os.str();
}

std::string plot_index_vs_iterate(const CountReport& report) {
    std::ostringstream os;
    os << "# m";
    for (std::size_t o = 0; o < report.intervals.size(); ++o) os << " orbit" << o;
    os << '\n';
    std::size_t rows = 0;
    for (const auto& ivs : report.intervals) rows = std::max(rows, ivs.size());
    for (std::size_t r = 0; r < rows; ++r) {
        os << (r + 1);
        for (const auto& ivs : report.intervals) {
            if (r < ivs.size())
                os << ' ' << ivs[r].lo;
            else
                os << " nan";
        }
        os << '\n';
    }
    return os.str();
}

std::string plot_targets(const CountReport& report) {
    std::ostringstream os;
    os << "# k target covered\n";
    for (const auto& row : report.coverage.rows)
        os << row.k << ' ' << row.target << ' ' << (row.candidates.empty() ? 0 : 1) << '\n';
    return os.str();
}

}  // namespace sil
