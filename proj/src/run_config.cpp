#include "ionsim/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <map>

#include "ionsim/serialize.hpp"

namespace ionsim {

json default_config() {
    static const json defaults = json::parse(R"json({
  "seed": 0,
  "workers": 1,
  "output": {"dir": ".", "format": "json", "save_states": false},
  "trap": {"n_ions": 10, "omega_x_mhz": 1.0, "omega_y_mhz": 10.0, "omega_z_mhz": 10.0},
  "species": {"mass_amu": 171.0, "g_factor": 1.0},
  "hardware": {"gradient_t_per_m": null, "target_eta": 0.03,
               "axes": ["x", "y"], "coupling_axes": ["y"], "resonance_guard": 0.05},
  "drive": {"omega_mhz": 33.94112549695428, "omega_prime_mhz": 2.4, "theta": 1.47,
            "omega_r_mhz": 0.0, "delta_r_mhz": 0.0, "d_prime_khz": -18.5},
  "two_ion": {"nu_mhz": 4.0, "eta": 0.03, "n_max": 3, "oversample": 80,
              "full_level_structure": false, "initial": "uD", "t_final_us": null,
              "n_samples": 400, "check_truncation": false, "trunc_tol": 0.001},
  "model": {"source": "direct", "n_sites": 8, "lambda": 1.0, "d": null,
            "h_staggered": 0.0, "j_eff": 1.0, "periodic": false, "nn_truncation": false},
  "eigen": {"k_per_sector": 4, "sectors": [0, 1, -1, 2, -2], "max_iter": 500,
            "tol": 1e-10, "cluster_tol": 0.0},
  "observe": {"axis": "z", "fit": true, "string_i": null, "string_j": null,
              "cut": null, "sector": null, "group_tol": 0.01, "weight_floor": 1e-8},
  "sweep": {"total_time": 40.0, "n_steps": 400, "n_samples": 100,
            "instantaneous": false, "compare_direct": false,
            "segments": [{"fraction": 1.0, "d0": 0.0, "d1": 0.0, "h0": 0.0, "h1": 0.0}]},
  "scan": {"n_sites": 6,
           "lambda": {"min": 0.5, "max": 1.5, "count": 5},
           "d": {"min": -1.0, "max": 3.0, "count": 5}}
})json");
    return defaults;
}

namespace {

// Leaves that accept null ("use the derived/auto value"), with the scalar
// type expected when a value is given: 'n' number, 'i' integer.
const std::map<std::string, char>& nullable_leaves() {
    static const std::map<std::string, char> m = {
        {"hardware.gradient_t_per_m", 'n'}, {"drive.d_prime_khz", 'n'},
        {"two_ion.t_final_us", 'n'},        {"model.d", 'n'},
        {"observe.string_i", 'i'},          {"observe.string_j", 'i'},
        {"observe.cut", 'i'},               {"observe.sector", 'i'},
    };
    return m;
}

bool is_int(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

json yaml_scalar_to_json(const YAML::Node& n) {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return json(s); // quoted scalars stay strings
    if (s.empty() || s == "null" || s == "~" || s == "Null" || s == "NULL")
        return json(nullptr);
    if (s == "true") return json(true);
    if (s == "false") return json(false);
    {
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0' && end != s.c_str() && errno == 0) return json(v);
    }
    {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && end != s.c_str() && errno == 0 && std::isfinite(v))
            return json(v);
    }
    return json(s);
}

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return json(nullptr);
        case YAML::NodeType::Scalar:
            return yaml_scalar_to_json(n);
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            for (const auto& e : n) arr.push_back(yaml_to_json(e));
            return arr;
        }
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (const auto& kv : n) obj[kv.first.Scalar()] = yaml_to_json(kv.second);
            return obj;
        }
    }
    throw ValidationError("config: unsupported YAML node");
}

json merge_validate(const json& user, const json& def, const std::string& path,
                    std::vector<std::string>& errs) {
    auto fail = [&](const std::string& what) {
        errs.push_back("config: " + what + " at '" + (path.empty() ? "<root>" : path) + "'");
        return def;
    };
    const auto nl = nullable_leaves().find(path);
    if (nl != nullable_leaves().end()) {
        if (user.is_null()) return user;
        if (nl->second == 'i')
            return is_int(user) ? user : fail("expected integer or null");
        return user.is_number() ? json(user.get<double>())
                                : fail("expected number or null");
    }
    if (def.is_object()) {
        if (!user.is_object()) return fail("expected mapping");
        json out = def;
        for (const auto& [k, v] : user.items()) {
            const std::string p = path.empty() ? k : path + "." + k;
            if (!def.contains(k)) {
                errs.push_back("config: unknown key '" + p + "'");
                continue;
            }
            out[k] = merge_validate(v, def.at(k), p, errs);
        }
        return out;
    }
    if (def.is_array()) {
        if (!user.is_array()) return fail("expected sequence");
        if (def.empty()) return user;
        json out = json::array();
        for (std::size_t i = 0; i < user.size(); ++i)
            out.push_back(merge_validate(user[i], def.at(0),
                                         path + "[" + std::to_string(i) + "]", errs));
        return out;
    }
    if (def.is_boolean()) return user.is_boolean() ? user : fail("expected boolean");
    if (is_int(def)) return is_int(user) ? user : fail("expected integer");
    if (def.is_number_float())
        return user.is_number() ? json(user.get<double>()) : fail("expected number");
    if (def.is_string()) return user.is_string() ? user : fail("expected string");
    return def;
}

double num_or(const json& j, double fallback) {
    return j.is_null() ? fallback : j.get<double>();
}

std::string enum_check(const json& node, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    const std::string v = node.get<std::string>();
    for (const char* a : allowed)
        if (v == a) return v;
    std::string opts;
    for (const char* a : allowed) {
        if (!opts.empty()) opts += "|";
        opts += a;
    }
    throw ValidationError("config: '" + path + "' must be one of " + opts);
}

} // namespace

json parse_config_text(const std::string& text, bool is_json) {
    if (is_json) {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw ValidationError("config parse (JSON): " + std::string(e.what()));
        }
    }
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw ValidationError("config parse (YAML): " + std::string(e.what()));
    }
}

json resolve_config(const json& user) {
    std::vector<std::string> errs;
    json resolved = merge_validate(user, default_config(), "", errs);
    if (!errs.empty()) {
        std::string msg;
        const std::size_t cap = 8;
        for (std::size_t i = 0; i < errs.size() && i < cap; ++i) {
            if (i) msg += "; ";
            msg += errs[i];
        }
        if (errs.size() > cap)
            msg += "; (+" + std::to_string(errs.size() - cap) + " more)";
        throw ValidationError(msg);
    }
    // Cross-field / enum checks not expressible as per-leaf type rules.
    enum_check(resolved.at("output").at("format"), "output.format", {"json", "csv", "both"});
    enum_check(resolved.at("model").at("source"), "model.source", {"direct", "chain"});
    enum_check(resolved.at("observe").at("axis"), "observe.axis", {"x", "y", "z"});
    for (const auto& a : resolved.at("hardware").at("axes"))
        enum_check(a, "hardware.axes[]", {"x", "y", "z"});
    for (const auto& a : resolved.at("hardware").at("coupling_axes"))
        enum_check(a, "hardware.coupling_axes[]", {"x", "y", "z"});
    if (resolved.at("seed").get<long long>() < 0)
        throw ValidationError("config: 'seed' must be non-negative");
    if (resolved.at("workers").get<int>() < 1)
        throw ValidationError("config: 'workers' must be >= 1");
    for (const char* g : {"lambda", "d"})
        if (resolved.at("scan").at(g).at("count").get<int>() < 1)
            throw ValidationError(std::string("config: 'scan.") + g + ".count' must be >= 1");
    return resolved;
}

RunConfig RunConfig::from_file(const std::string& path) {
    if (path.empty()) return RunConfig{default_config()};
    const bool is_json =
        path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return from_json(parse_config_text(read_text_file(path), is_json));
}

RunConfig RunConfig::from_json(const json& user) { return RunConfig{resolve_config(user)}; }

TrapConfig RunConfig::trap() const {
    const json& t = tree.at("trap");
    return TrapConfig::from_mhz(t.at("n_ions").get<int>(), t.at("omega_x_mhz").get<double>(),
                                t.at("omega_y_mhz").get<double>(),
                                t.at("omega_z_mhz").get<double>());
}

IonSpecies RunConfig::species() const {
    const json& s = tree.at("species");
    IonSpecies sp;
    sp.mass_amu = s.at("mass_amu").get<double>();
    sp.g_factor = s.at("g_factor").get<double>();
    return sp;
}

DriveParams RunConfig::drive() const {
    const json& d = tree.at("drive");
    DriveParams p;
    p.omega = consts::mhz_to_rad(d.at("omega_mhz").get<double>());
    p.omega_prime = consts::mhz_to_rad(d.at("omega_prime_mhz").get<double>());
    p.theta = d.at("theta").get<double>();
    p.omega_r = consts::mhz_to_rad(d.at("omega_r_mhz").get<double>());
    p.delta_r = consts::mhz_to_rad(d.at("delta_r_mhz").get<double>());
    const json& dp = d.at("d_prime_khz");
    if (!dp.is_null()) p.d_prime_override = consts::hz_to_rad(dp.get<double>() * 1e3);
    return p;
}

namespace {
std::vector<Axis> parse_axes(const json& arr, const char* key) {
    std::vector<Axis> axes;
    for (const auto& a : arr) {
        const std::string s = a.get<std::string>();
        axes.push_back(s == "x" ? Axis::x : (s == "y" ? Axis::y : Axis::z));
    }
    if (axes.empty())
        throw ValidationError(std::string("config: '") + key + "' must not be empty");
    return axes;
}
} // namespace

CouplingOptions RunConfig::coupling_options() const {
    const json& h = tree.at("hardware");
    CouplingOptions o;
    o.resonance_guard = h.at("resonance_guard").get<double>();
    o.axes = parse_axes(h.at("coupling_axes"), "hardware.coupling_axes");
    return o;
}

std::vector<Axis> RunConfig::report_axes() const {
    return parse_axes(tree.at("hardware").at("axes"), "hardware.axes");
}

FullModelParams RunConfig::two_ion() const {
    const json& t = tree.at("two_ion");
    FullModelParams p;
    p.drive = drive();
    p.nu = consts::mhz_to_rad(t.at("nu_mhz").get<double>());
    p.eta = t.at("eta").get<double>();
    p.n_max = t.at("n_max").get<int>();
    p.oversample = t.at("oversample").get<int>();
    p.full_level_structure = t.at("full_level_structure").get<bool>();
    p.initial = t.at("initial").get<std::string>();
    p.trunc_tol = t.at("trunc_tol").get<double>();
    return p;
}

SpinModelParams RunConfig::model_direct() const {
    const json& m = tree.at("model");
    SpinModelParams p = SpinModelParams::uniform_nn(
        m.at("n_sites").get<int>(), m.at("lambda").get<double>(),
        num_or(m.at("d"), 0.0), m.at("h_staggered").get<double>(),
        m.at("j_eff").get<double>(), m.at("periodic").get<bool>());
    p.nn_truncation = m.at("nn_truncation").get<bool>();
    return p;
}

SweepSchedule RunConfig::sweep_schedule() const {
    const json& s = tree.at("sweep");
    SweepSchedule sch;
    sch.total_time = s.at("total_time").get<double>();
    for (const auto& seg : s.at("segments")) {
        SweepSegment g;
        g.fraction = seg.at("fraction").get<double>();
        g.d0 = seg.at("d0").get<double>();
        g.d1 = seg.at("d1").get<double>();
        g.h0 = seg.at("h0").get<double>();
        g.h1 = seg.at("h1").get<double>();
        sch.segments.push_back(g);
    }
    return sch;
}

SweepOptions RunConfig::sweep_options() const {
    const json& s = tree.at("sweep");
    SweepOptions o;
    o.n_steps = s.at("n_steps").get<int>();
    o.n_samples = s.at("n_samples").get<int>();
    o.instantaneous = s.at("instantaneous").get<bool>();
    o.eigen = eigen_options();
    return o;
}

EigenOptions RunConfig::eigen_options() const {
    const json& e = tree.at("eigen");
    EigenOptions o;
    o.max_iter = e.at("max_iter").get<int>();
    o.tol = e.at("tol").get<double>();
    if (seed() != 0) o.seed = seed();
    return o;
}

std::vector<int> RunConfig::eigen_sectors() const {
    std::vector<int> v;
    for (const auto& s : tree.at("eigen").at("sectors")) v.push_back(s.get<int>());
    if (v.empty()) throw ValidationError("config: 'eigen.sectors' must not be empty");
    return v;
}

int RunConfig::eigen_k_per_sector() const {
    return tree.at("eigen").at("k_per_sector").get<int>();
}

double RunConfig::eigen_cluster_tol() const {
    return tree.at("eigen").at("cluster_tol").get<double>();
}

std::uint64_t RunConfig::seed() const {
    return static_cast<std::uint64_t>(tree.at("seed").get<long long>());
}

int RunConfig::workers() const { return tree.at("workers").get<int>(); }

std::string RunConfig::out_dir() const {
    return tree.at("output").at("dir").get<std::string>();
}

std::string RunConfig::out_format() const {
    return tree.at("output").at("format").get<std::string>();
}

bool RunConfig::save_states() const {
    return tree.at("output").at("save_states").get<bool>();
}

} // namespace ionsim
