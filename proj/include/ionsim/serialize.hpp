#pragma once

// Deterministic result persistence: canonical JSON envelopes (sorted keys,
// shortest round-trip floats), CSV tables, config hashing, and binary state
// files with JSON headers. Identical inputs produce byte-identical payloads;
// the envelope timestamp honors SOURCE_DATE_EPOCH for fully reproducible
// files.

#include <json.hpp>

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ionsim {

using json = nlohmann::json;

inline constexpr const char* tool_name = "ionsim";
inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* result_schema_version = "1";

// Shortest decimal string that round-trips to the same double. Non-finite
// values render as "inf"/"-inf"/"nan" (CSV only; JSON stores them as null).
std::string format_double(double v);

// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a64(std::string_view s);

// Hex hash of the canonical dump (sorted keys, shortest floats) of a config
// tree. Reproducible across runs and platforms with identical trees.
std::string config_hash(const json& config);

// ISO-8601 UTC timestamp. Uses SOURCE_DATE_EPOCH when set (reproducible runs).
std::string utc_timestamp();

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// UTF-8, comma separator, header row first, minimal quoting, "\n" endings.
std::string render_csv(const CsvTable& table);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Result envelope: command name, resolved config + its hash, payload report,
// and convergence/validity flags. Key order is lexicographic throughout.
json make_envelope(const std::string& command, const json& resolved_config,
                   const json& payload, const json& flags);
void write_envelope(const std::string& path, const json& envelope);

// Eigen -> JSON (nested arrays, row-major).
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);

// JSON-safe double: non-finite values become null instead of silently
// serializing to null deep inside a numeric field.
json json_num(double v);

// State files: <base>.json header (dimension, site count, basis ordering tag,
// sector tag, encoding) plus <base>.bin with interleaved little-endian
// (re, im) float64 pairs.
void save_state(const std::string& base_path, const Eigen::VectorXcd& psi,
                int n_sites, std::optional<int> sector);
Eigen::VectorXcd load_state(const std::string& base_path, int* n_sites = nullptr,
                            std::optional<int>* sector = nullptr);

} // namespace ionsim
