#include "ionsim/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "ionsim/errors.hpp"

namespace ionsim {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const json& config) {
    const std::uint64_t h = fnv1a64(config.dump());
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = '\0';
    return std::string(buf);
}

std::string utc_timestamp() {
    std::time_t t = 0;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(sde, &end, 10);
        t = (end && *end == '\0') ? static_cast<std::time_t>(v) : std::time(nullptr);
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

static std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string render_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += csv_cell(table.header[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_cell(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw SimError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json make_envelope(const std::string& command, const json& resolved_config,
                   const json& payload, const json& flags) {
    json env;
    env["command"] = command;
    env["config"] = resolved_config;
    env["config_hash"] = config_hash(resolved_config);
    env["flags"] = flags.is_null() ? json::object() : flags;
    env["payload"] = payload;
    env["schema_version"] = result_schema_version;
    env["timestamp"] = utc_timestamp();
    env["tool"] = std::string(tool_name) + " " + tool_version;
    return env;
}

void write_envelope(const std::string& path, const json& envelope) {
    write_text_file(path, envelope.dump(2) + "\n");
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(json_num(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (long i = 0; i < v.size(); ++i) arr.push_back(json_num(v(i)));
    return arr;
}

json json_num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

void save_state(const std::string& base_path, const Eigen::VectorXcd& psi,
                int n_sites, std::optional<int> sector) {
    json header;
    header["basis"] = "site-major, site 0 most significant, local order {+1,0,-1}";
    header["dimension"] = psi.size();
    header["encoding"] = "float64 (re, im) interleaved, little-endian";
    header["n_sites"] = n_sites;
    header["payload"] = base_path + ".bin";
    header["sector"] = sector ? json(*sector) : json(nullptr);
    write_text_file(base_path + ".json", header.dump(2) + "\n");

    std::ofstream f(base_path + ".bin", std::ios::binary);
    if (!f) throw SimError("cannot open for writing: " + base_path + ".bin");
    static_assert(sizeof(std::complex<double>) == 16);
    f.write(reinterpret_cast<const char*>(psi.data()),
            static_cast<std::streamsize>(sizeof(std::complex<double>) *
                                         static_cast<std::size_t>(psi.size())));
    if (!f) throw SimError("write failed: " + base_path + ".bin");
}

Eigen::VectorXcd load_state(const std::string& base_path, int* n_sites,
                            std::optional<int>* sector) {
    json header;
    try {
        header = json::parse(read_text_file(base_path + ".json"));
    } catch (const json::exception& e) {
        throw ValidationError("state header parse: " + std::string(e.what()));
    }
    const long dim = header.at("dimension").get<long>();
    if (n_sites) *n_sites = header.at("n_sites").get<int>();
    if (sector) {
        const json& s = header.at("sector");
        *sector = s.is_null() ? std::optional<int>{} : std::optional<int>{s.get<int>()};
    }
    std::ifstream f(base_path + ".bin", std::ios::binary);
    if (!f) throw ValidationError("cannot open: " + base_path + ".bin");
    Eigen::VectorXcd psi(dim);
    f.read(reinterpret_cast<char*>(psi.data()),
           static_cast<std::streamsize>(sizeof(std::complex<double>) *
                                        static_cast<std::size_t>(dim)));
    if (f.gcount() != static_cast<std::streamsize>(16 * dim))
        throw ValidationError("state payload truncated: " + base_path + ".bin");
    return psi;
}

} // namespace ionsim
