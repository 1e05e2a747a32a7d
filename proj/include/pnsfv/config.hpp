/// @file config.hpp
/// @brief TOML-style configuration files: a small parser covering sections,
///        scalar values and flat number arrays (the subset the solver
///        needs), canonical serialization for round-trips and hashing, and
///        the typed Config the CLI commands consume.

#pragma once

#include "pnsfv/experiments.hpp"
#include "pnsfv/scheme.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace pnsfv {

struct TomlValue {
    enum class Type { Number, String, Boolean, NumberList };
    Type type = Type::Number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<double> list;

    static TomlValue number(double v);
    static TomlValue string(std::string v);
    static TomlValue boolean_v(bool v);
    static TomlValue number_list(std::vector<double> v);
    bool operator==(const TomlValue&) const = default;
};

/// Sections of key/value pairs; top-level keys live in section "".
struct TomlTable {
    std::map<std::string, std::map<std::string, TomlValue>> sections;

    bool has(const std::string& section, const std::string& key) const;
    const TomlValue* find(const std::string& section, const std::string& key) const;
    bool operator==(const TomlTable&) const = default;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TomlTable toml_parse(const std::string& text);
TomlTable toml_parse_file(const std::filesystem::path& path);
/// Canonical form: sorted sections and keys, %.17g numbers. parse/serialize
/// round-trips to the same table.
std::string toml_serialize(const TomlTable& table);

std::uint64_t fnv1a_hash(const std::string& s);

struct OutputOptions {
    std::filesystem::path dir = "out";
    int snapshot_every = 0;
    bool vtk = false;
    int workers = 1;
};

/// Typed view of a configuration file. `load` validates presence and ranges
/// and reports offending keys by name.
struct Config {
    TomlTable raw;
    std::string experiment; // exp1 | exp2 | exp3
    GridSpec grid;
    FluidParams fluid;
    SolverParams solver;
    double dt_over_h = 0.25; // used when solver.dt is not given explicitly
    bool has_explicit_dt = false;
    StudyPlan study;
    OutputOptions output;
    std::optional<Shape> shape; // overrides the experiment's default domain

    static Config load(const std::filesystem::path& path);
    static Config from_table(const TomlTable& table);

    std::string canonical() const { return toml_serialize(raw); }
    std::string hash_hex() const;
};

} // namespace pnsfv
