#pragma once

// Declarative run configuration. YAML or JSON input is normalized into one
// JSON tree, validated against the schema (unknown keys rejected with their
// full path), and merged over the defaults so every consumed value — every
// tolerance included — appears in the resolved tree that outputs embed.
//
// YAML scalar typing is deliberately strict: true/false for booleans,
// null/~ for null; quoted scalars always stay strings. User-facing
// frequencies are ordinary (not angular) and carry their unit in the key
// name (_mhz, _khz, _us); angles are radians.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "ionsim/adiabatic.hpp"
#include "ionsim/coupling_engine.hpp"
#include "ionsim/eigen_solver.hpp"
#include "ionsim/two_ion.hpp"

namespace ionsim {

using json = nlohmann::json;

// Full default tree; every leaf at its default value.
json default_config();

// Parse raw text (YAML unless is_json) into an unvalidated JSON tree.
json parse_config_text(const std::string& text, bool is_json);

// Validate a user tree against the schema and materialize defaults.
// Throws ValidationError listing the paths of unknown or ill-typed keys.
json resolve_config(const json& user);

struct RunConfig {
    json tree; // resolved: defaults materialized, units as written

    // path "" -> pure defaults; *.json parses as JSON, anything else as YAML.
    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const json& user);

    // Typed views (units converted to the internal rad/s conventions).
    TrapConfig trap() const;
    IonSpecies species() const;
    DriveParams drive() const;
    CouplingOptions coupling_options() const;     // hardware.coupling_axes
    std::vector<Axis> report_axes() const;        // hardware.axes (mode reports)
    FullModelParams two_ion() const;       // t_final handled by the command
    SpinModelParams model_direct() const;  // dimensionless uniform-NN model
    SweepSchedule sweep_schedule() const;
    SweepOptions sweep_options() const;
    EigenOptions eigen_options() const;
    std::vector<int> eigen_sectors() const;
    int eigen_k_per_sector() const;
    double eigen_cluster_tol() const;

    std::uint64_t seed() const;
    int workers() const;
    std::string out_dir() const;
    std::string out_format() const; // "json" | "csv" | "both"
    bool save_states() const;
};

} // namespace ionsim
