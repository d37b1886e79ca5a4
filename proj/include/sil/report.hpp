#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "sil/symplectic_path.hpp"
#include "sil/verify.hpp"

#include <json.hpp>

namespace sil {

std::uint64_t fnv1a64(const std::string& bytes);

/// Stamp shared by every report: config hash, RNG seed, tool and schema
/// versions. Identical config and seed give byte-identical reports; wall time
/// is logged to stderr instead of the report body.
nlohmann::json report_stamp(const nlohmann::json& config, std::uint64_t rng_seed);

/// Constant-coefficient system spec {"n":, "tau":, "B": [[...]]} or a body
/// reference {"body": <spec or path>, "orbit": k, "alpha": a}.
std::shared_ptr<const LinearSystem> load_system_spec(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

/// intervals.csv: orbit, m, index, nullity, lo, hi
std::string interval_csv(const CountReport& report);

/// Plain-text plot data: per-orbit iterate index columns, and the coverage
/// targets against interval bounds.
std::string plot_index_vs_iterate(const CountReport& report);
std::string plot_targets(const CountReport& report);

}  // namespace sil
