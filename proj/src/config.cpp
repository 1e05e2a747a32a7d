#include "pnsfv/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pnsfv {

TomlValue TomlValue::number(double v) {
    TomlValue t;
    t.type = Type::Number;
    t.num = v;
    return t;
}
TomlValue TomlValue::string(std::string v) {
    TomlValue t;
    t.type = Type::String;
    t.str = std::move(v);
    return t;
}
TomlValue TomlValue::boolean_v(bool v) {
    TomlValue t;
    t.type = Type::Boolean;
    t.boolean = v;
    return t;
}
TomlValue TomlValue::number_list(std::vector<double> v) {
    TomlValue t;
    t.type = Type::NumberList;
    t.list = std::move(v);
    return t;
}

bool TomlTable::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

const TomlValue* TomlTable::find(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("parse error at line " + std::to_string(line) + ": " + msg);
}

TomlValue parse_scalar(const std::string& tok, int line) {
    if (tok.empty()) fail(line, "empty value");
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
        return TomlValue::string(tok.substr(1, tok.size() - 2));
    }
    if (tok == "true") return TomlValue::boolean_v(true);
    if (tok == "false") return TomlValue::boolean_v(false);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        fail(line, "cannot parse value '" + tok + "'");
    return TomlValue::number(v);
}

} // namespace

TomlTable toml_parse(const std::string& text) {
    TomlTable table;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        // strip comments outside strings
        std::string line;
        bool in_str = false;
        for (char c : raw) {
            if (c == '"') in_str = !in_str;
            if (c == '#' && !in_str) break;
            line += c;
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(line_no, "empty section name");
            table.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (!val.empty() && val.front() == '[') {
            if (val.back() != ']') fail(line_no, "unterminated array");
            std::vector<double> nums;
            std::string body = val.substr(1, val.size() - 2);
            std::stringstream ss(body);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = trim(tok);
                if (tok.empty()) fail(line_no, "empty array element");
                const TomlValue v = parse_scalar(tok, line_no);
                if (v.type != TomlValue::Type::Number)
                    fail(line_no, "arrays may contain numbers only");
                nums.push_back(v.num);
            }
            table.sections[section][key] = TomlValue::number_list(std::move(nums));
        } else {
            table.sections[section][key] = parse_scalar(val, line_no);
        }
    }
    return table;
}

TomlTable toml_parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return toml_parse(text);
}

std::string toml_serialize(const TomlTable& table) {
    std::string out;
    char buf[64];
    auto emit_value = [&](const TomlValue& v) {
        switch (v.type) {
            case TomlValue::Type::Number:
                std::snprintf(buf, sizeof(buf), "%.17g", v.num);
                out += buf;
                break;
            case TomlValue::Type::String:
                out += '"';
                out += v.str;
                out += '"';
                break;
            case TomlValue::Type::Boolean:
                out += v.boolean ? "true" : "false";
                break;
            case TomlValue::Type::NumberList:
                out += '[';
                for (std::size_t i = 0; i < v.list.size(); ++i) {
                    if (i) out += ", ";
                    std::snprintf(buf, sizeof(buf), "%.17g", v.list[i]);
                    out += buf;
                }
                out += ']';
                break;
        }
    };
    // top-level first, then sections in sorted order (std::map is sorted)
    if (auto top = table.sections.find(""); top != table.sections.end()) {
        for (const auto& [k, v] : top->second) {
            out += k + " = ";
            emit_value(v);
            out += '\n';
        }
    }
    for (const auto& [name, sec] : table.sections) {
        if (name.empty()) continue;
        out += "[" + name + "]\n";
        for (const auto& [k, v] : sec) {
            out += k + " = ";
            emit_value(v);
            out += '\n';
        }
    }
    return out;
}

std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

double need_number(const TomlTable& t, const std::string& sec, const std::string& key) {
    const TomlValue* v = t.find(sec, key);
    if (!v) throw ConfigError("missing key " + sec + "." + key);
    if (v->type != TomlValue::Type::Number)
        throw ConfigError("key " + sec + "." + key + " must be a number");
    return v->num;
}

double opt_number(const TomlTable& t, const std::string& sec, const std::string& key,
                  double fallback) {
    const TomlValue* v = t.find(sec, key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::Number)
        throw ConfigError("key " + sec + "." + key + " must be a number");
    return v->num;
}

std::string opt_string(const TomlTable& t, const std::string& sec, const std::string& key,
                       const std::string& fallback) {
    const TomlValue* v = t.find(sec, key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::String)
        throw ConfigError("key " + sec + "." + key + " must be a string");
    return v->str;
}

bool opt_bool(const TomlTable& t, const std::string& sec, const std::string& key,
              bool fallback) {
    const TomlValue* v = t.find(sec, key);
    if (!v) return fallback;
    if (v->type != TomlValue::Type::Boolean)
        throw ConfigError("key " + sec + "." + key + " must be a boolean");
    return v->boolean;
}

} // namespace

Config Config::from_table(const TomlTable& table) {
    Config cfg;
    cfg.raw = table;

    cfg.experiment = opt_string(table, "", "experiment", "exp1");
    if (cfg.experiment != "exp1" && cfg.experiment != "exp2" && cfg.experiment != "exp3")
        throw ConfigError("experiment must be one of exp1, exp2, exp3");

    cfg.grid.d = static_cast<int>(opt_number(table, "grid", "d", 2));
    cfg.grid.n = static_cast<int>(need_number(table, "grid", "n"));
    cfg.grid.side = opt_number(table, "grid", "side", 2.0);
    if (const TomlValue* v = table.find("grid", "origin")) {
        if (v->type != TomlValue::Type::NumberList ||
            v->list.size() != static_cast<std::size_t>(cfg.grid.d))
            throw ConfigError("grid.origin must be a list of d numbers");
        for (int a = 0; a < cfg.grid.d; ++a) cfg.grid.origin[a] = v->list[a];
    } else {
        for (int a = 0; a < cfg.grid.d; ++a) cfg.grid.origin[a] = -0.5 * cfg.grid.side;
    }

    cfg.fluid.a = need_number(table, "fluid", "a");
    cfg.fluid.gamma = need_number(table, "fluid", "gamma");
    cfg.fluid.mu = need_number(table, "fluid", "mu");
    cfg.fluid.lambda = opt_number(table, "fluid", "lambda", 0.0);
    cfg.fluid.alpha = need_number(table, "fluid", "alpha");
    cfg.fluid.eps = need_number(table, "fluid", "eps");
    cfg.fluid.validate();

    cfg.solver.T = opt_number(table, "solver", "T", 0.1);
    cfg.dt_over_h = opt_number(table, "solver", "dt_over_h", 0.25);
    if (table.has("solver", "dt")) {
        cfg.solver.dt = need_number(table, "solver", "dt");
        cfg.has_explicit_dt = true;
    }
    const std::string mode = opt_string(table, "solver", "mode", "implicit");
    if (mode == "implicit")
        cfg.solver.mode = SolverParams::Mode::Implicit;
    else if (mode == "explicit")
        cfg.solver.mode = SolverParams::Mode::Explicit;
    else
        throw ConfigError("solver.mode must be implicit or explicit");
    cfg.solver.tol_nl = opt_number(table, "solver", "tol_nl", 1e-10);
    cfg.solver.max_picard = static_cast<int>(opt_number(table, "solver", "max_picard", 100));
    cfg.solver.tol_lin = opt_number(table, "solver", "tol_lin", 1e-12);
    cfg.solver.max_lin = static_cast<int>(opt_number(table, "solver", "max_lin", 0));
    cfg.solver.cfl = opt_number(table, "solver", "cfl", 0.4);

    const std::string study_mode = opt_string(table, "study", "mode", "fixed-eps");
    if (study_mode == "fixed-eps")
        cfg.study.mode = StudyPlan::Mode::FixedEps;
    else if (study_mode == "paired")
        cfg.study.mode = StudyPlan::Mode::Paired;
    else
        throw ConfigError("study.mode must be fixed-eps or paired");
    cfg.study.eps_fixed = opt_number(table, "study", "eps", cfg.fluid.eps);
    cfg.study.rule = opt_string(table, "study", "rule", "quadratic");
    if (cfg.study.rule != "sqrt" && cfg.study.rule != "quadratic" &&
        cfg.study.rule != "quartic")
        throw ConfigError("study.rule must be sqrt, quadratic or quartic");
    cfg.study.m_min = static_cast<int>(opt_number(table, "study", "m_min", 0));
    cfg.study.m_max = static_cast<int>(opt_number(table, "study", "m_max", 2));
    cfg.study.m_ref = static_cast<int>(opt_number(table, "study", "m_ref", 3));
    cfg.study.base_h = opt_number(table, "study", "base_h", 0.2);
    cfg.study.domain = cfg.grid;
    cfg.study.dt_over_h = cfg.dt_over_h;
    const std::string grad = opt_string(table, "study", "grad_compare", "overlay");
    if (grad == "overlay")
        cfg.study.grad_mode = GradCompare::Overlay;
    else if (grad == "fine-inject")
        cfg.study.grad_mode = GradCompare::FineInject;
    else if (grad == "coarse-transfer")
        cfg.study.grad_mode = GradCompare::CoarseTransfer;
    else
        throw ConfigError("study.grad_compare must be overlay, fine-inject or coarse-transfer");

    cfg.output.dir = opt_string(table, "output", "dir", "out");
    cfg.output.snapshot_every =
        static_cast<int>(opt_number(table, "output", "snapshot_every", 0));
    cfg.output.vtk = opt_bool(table, "output", "vtk", false);
    cfg.output.workers = static_cast<int>(opt_number(table, "output", "workers", 1));

    // optional explicit fluid-domain shape, overriding the experiment preset
    if (table.sections.count("shape")) {
        const std::string kind = opt_string(table, "shape", "kind", "ring");
        std::array<double, 3> center{0.0, 0.0, 0.0};
        if (const TomlValue* v = table.find("shape", "center")) {
            if (v->type != TomlValue::Type::NumberList || v->list.size() < 2)
                throw ConfigError("shape.center must be a list of coordinates");
            for (std::size_t a = 0; a < v->list.size() && a < 3; ++a) center[a] = v->list[a];
        }
        if (kind == "ring") {
            cfg.shape = Shape::ring(need_number(table, "shape", "r_in"),
                                    need_number(table, "shape", "r_out"), center);
        } else if (kind == "ball") {
            cfg.shape = Shape::ball(need_number(table, "shape", "r"), center);
        } else if (kind == "flower") {
            cfg.shape = Shape::flower(
                need_number(table, "shape", "r_in"),
                opt_number(table, "shape", "base", 0.7),
                opt_number(table, "shape", "delta", 0.05),
                static_cast<int>(opt_number(table, "shape", "lobes", 8)), center);
        } else {
            throw ConfigError("shape.kind must be ring, ball or flower");
        }
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    return from_table(toml_parse_file(path));
}

std::string Config::hash_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(canonical())));
    return buf;
}

} // namespace pnsfv
