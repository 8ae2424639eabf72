#pragma once

// Run configuration: a sectioned key=value text format.
//
//   # comment
//   [run]
//   kind = mc-e1
//   [grid]
//   nx = 64
//
// Unknown sections or keys, malformed values and failed validation raise
// ParseError naming the line and key.  serialize_config writes every key, so
// parse_config(serialize_config(c)) == c.

#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/montecarlo.hpp"
#include "vfv/scheme.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vfv {

enum class RunKind { solve, mc_e1, mc_e2, total_error, consistency };

inline const char* to_string(RunKind k)
{
    switch (k) {
    case RunKind::solve: return "solve";
    case RunKind::mc_e1: return "mc-e1";
    case RunKind::mc_e2: return "mc-e2";
    case RunKind::total_error: return "total-error";
    case RunKind::consistency: return "consistency";
    }
    return "?";
}

struct RunConfig {
    RunKind kind = RunKind::solve;
    std::string output = "out";
    std::size_t workers = 1;
    /// Extra snapshot times for `solve` (the final time is always written).
    std::vector<double> snapshots;

    std::size_t nx = 64;
    std::size_t ny = 64;
    double lx = 1.0;
    double ly = 1.0;
    /// Cells per side of the Cesàro ladder, coarsest first (mc-e2).
    std::vector<std::size_t> ladder{16, 32, 64};

    GasParams gas;
    SchemeParams scheme;
    KHDataSpec kh;

    /// Initial data for `solve` / `consistency`: "kh" or "constant".
    std::string init_kind = "kh";
    double init_rho = 1.0;
    double init_u1 = 0.0;
    double init_u2 = 0.0;
    std::uint64_t sample_id = 0;

    std::uint64_t seed = 20240101;
    std::vector<std::size_t> sample_counts{5, 10, 20, 40, 80};
    std::size_t repetitions = 20;
    std::size_t n_ref = 100;

    std::vector<MeshSamples> pairs{{32, 5}, {64, 10}, {128, 20}};
    std::size_t reference_cells = 256;
    bool cesaro = false;

    std::vector<std::size_t> resolutions{32, 64, 128};

    Grid grid() const { return Grid(nx, ny, lx, ly); }

    SamplePlan plan() const
    {
        SamplePlan p;
        p.master_seed = seed;
        p.sample_counts = sample_counts;
        p.repetitions = repetitions;
        p.n_ref = n_ref;
        p.gas = gas;
        p.scheme = scheme;
        p.kh = kh;
        p.workers = workers;
        return p;
    }

    bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& s)
{
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += fmt(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s)
{
    std::vector<T> out;
    for (const auto& item : split(s, ',')) out.push_back(parse_number<T>(item));
    return out;
}

struct Key {
    std::string section;
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Key number(std::string section, std::string name, T RunConfig::*member)
{
    return {std::move(section), std::move(name), [member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(v); },
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt(c.*member);
                else
                    return std::to_string(c.*member);
            }};
}

template <class T, class S>
Key nested(std::string section, std::string name, S RunConfig::*outer, T S::*member)
{
    return {std::move(section), std::move(name),
            [outer, member](RunConfig& c, const std::string& v) { (c.*outer).*member = parse_number<T>(v); },
            [outer, member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt((c.*outer).*member);
                else
                    return std::to_string((c.*outer).*member);
            }};
}

template <class T>
Key list(std::string section, std::string name, std::vector<T> RunConfig::*member)
{
    return {std::move(section), std::move(name),
            [member](RunConfig& c, const std::string& v) { c.*member = parse_list<T>(v); },
            [member](const RunConfig& c) { return join(c.*member); }};
}

inline RunKind parse_kind(const std::string& s)
{
    for (RunKind k : {RunKind::solve, RunKind::mc_e1, RunKind::mc_e2, RunKind::total_error, RunKind::consistency})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown run kind '" + s + "'");
}

inline const std::vector<Key>& keys()
{
    static const std::vector<Key> k = [] {
        std::vector<Key> v;
        v.push_back({"run", "kind", [](RunConfig& c, const std::string& s) { c.kind = parse_kind(s); },
                     [](const RunConfig& c) { return std::string(to_string(c.kind)); }});
        v.push_back({"run", "output", [](RunConfig& c, const std::string& s) { c.output = s; },
                     [](const RunConfig& c) { return c.output; }});
        v.push_back(number("run", "workers", &RunConfig::workers));
        v.push_back(list("run", "snapshots", &RunConfig::snapshots));

        v.push_back(number("grid", "nx", &RunConfig::nx));
        v.push_back(number("grid", "ny", &RunConfig::ny));
        v.push_back(number("grid", "lx", &RunConfig::lx));
        v.push_back(number("grid", "ly", &RunConfig::ly));
        v.push_back(list("grid", "ladder", &RunConfig::ladder));

        v.push_back(nested("gas", "gamma", &RunConfig::gas, &GasParams::gamma));
        v.push_back(nested("gas", "a", &RunConfig::gas, &GasParams::a));

        v.push_back(nested("scheme", "alpha", &RunConfig::scheme, &SchemeParams::alpha));
        v.push_back(nested("scheme", "eps_flux", &RunConfig::scheme, &SchemeParams::eps_flux));
        v.push_back(nested("scheme", "dt", &RunConfig::scheme, &SchemeParams::dt));
        v.push_back(nested("scheme", "t_final", &RunConfig::scheme, &SchemeParams::t_final));
        v.push_back(nested("scheme", "picard_tol", &RunConfig::scheme, &SchemeParams::picard_tol));
        v.push_back(nested("scheme", "picard_max", &RunConfig::scheme, &SchemeParams::picard_max));
        v.push_back(nested("scheme", "linear_tol", &RunConfig::scheme, &SchemeParams::linear_tol));
        v.push_back(nested("scheme", "linear_max", &RunConfig::scheme, &SchemeParams::linear_max));
        v.push_back(nested("scheme", "linear_forcing", &RunConfig::scheme, &SchemeParams::linear_forcing));
        v.push_back(nested("scheme", "max_halvings", &RunConfig::scheme, &SchemeParams::max_halvings));

        v.push_back(nested("kh", "J1", &RunConfig::kh, &KHDataSpec::J1));
        v.push_back(nested("kh", "J2", &RunConfig::kh, &KHDataSpec::J2));
        v.push_back(nested("kh", "eps_perturb", &RunConfig::kh, &KHDataSpec::eps_perturb));
        v.push_back(nested("kh", "modes", &RunConfig::kh, &KHDataSpec::modes));
        v.push_back(nested("kh", "rho_inner", &RunConfig::kh, &KHDataSpec::rho_inner));
        v.push_back(nested("kh", "u_inner", &RunConfig::kh, &KHDataSpec::u_inner));
        v.push_back(nested("kh", "rho_outer", &RunConfig::kh, &KHDataSpec::rho_outer));
        v.push_back(nested("kh", "u_outer", &RunConfig::kh, &KHDataSpec::u_outer));

        v.push_back({"init", "kind", [](RunConfig& c, const std::string& s) {
                         if (s != "kh" && s != "constant") throw std::invalid_argument("expected kh or constant");
                         c.init_kind = s;
                     },
                     [](const RunConfig& c) { return c.init_kind; }});
        v.push_back(number("init", "rho", &RunConfig::init_rho));
        v.push_back(number("init", "u1", &RunConfig::init_u1));
        v.push_back(number("init", "u2", &RunConfig::init_u2));
        v.push_back(number("init", "sample_id", &RunConfig::sample_id));

        v.push_back(number("plan", "seed", &RunConfig::seed));
        v.push_back(list("plan", "sample_counts", &RunConfig::sample_counts));
        v.push_back(number("plan", "repetitions", &RunConfig::repetitions));
        v.push_back(number("plan", "n_ref", &RunConfig::n_ref));

        v.push_back({"total", "pairs",
                     [](RunConfig& c, const std::string& s) {
                         c.pairs.clear();
                         for (const auto& item : split(s, ',')) {
                             const auto parts = split(item, ':');
                             if (parts.size() != 2) throw std::invalid_argument("expected cells:samples, got '" + item + "'");
                             c.pairs.push_back({parse_number<std::size_t>(parts[0]), parse_number<std::size_t>(parts[1])});
                         }
                     },
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.pairs.size(); ++i)
                             out += (i ? "," : "") + std::to_string(c.pairs[i].cells) + ":" + std::to_string(c.pairs[i].samples);
                         return out;
                     }});
        v.push_back(number("total", "reference_cells", &RunConfig::reference_cells));
        v.push_back({"total", "cesaro", [](RunConfig& c, const std::string& s) { c.cesaro = parse_bool(s); },
                     [](const RunConfig& c) { return std::string(c.cesaro ? "true" : "false"); }});

        v.push_back(list("consistency", "resolutions", &RunConfig::resolutions));
        return v;
    }();
    return k;
}

inline const Key* find_key(const std::string& section, const std::string& name)
{
    for (const auto& k : keys())
        if (k.section == section && k.name == name) return &k;
    return nullptr;
}

} // namespace config_detail

/// Checks every sub-configuration; `line_of` maps "section.key" to the line
/// that set it, so errors point at the offending line.
inline void validate_config(const RunConfig& c, const std::map<std::string, std::size_t>& line_of = {})
{
    auto fail = [&](const std::string& key, const std::string& what) {
        const auto it = line_of.find(key);
        throw ParseError(it == line_of.end() ? 0 : it->second, key, what);
    };
    auto guard = [&](const std::string& key, auto&& check) {
        try {
            check();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            fail(key, e.what());
        }
    };
    if (c.workers < 1) fail("run.workers", "must be >= 1");
    if (c.output.empty()) fail("run.output", "must not be empty");
    guard("grid.nx", [&] { (void)c.grid(); });
    guard("gas.gamma", [&] { c.gas.validate(); });
    guard("kh.J1", [&] { c.kh.validate(); });
    const Admissibility adm = validate_params(c.gas, c.scheme);
    if (!adm) fail("scheme.alpha", adm.violated);
    if (c.init_kind == "constant") guard("init.rho", [&] { (void)FieldSet::uniform(c.grid(), c.init_rho, c.init_u1, c.init_u2); });
    for (double t : c.snapshots)
        if (!(t >= 0.0 && t <= c.scheme.t_final)) fail("run.snapshots", "snapshot time outside [0, t_final]");
    guard("grid.ladder", [&] {
        if (c.ladder.empty()) throw PlanError("ladder must not be empty");
        (void)MeshLadder::from_cells(c.ladder, c.lx);
    });
    if (c.kind != RunKind::total_error) guard("plan.n_ref", [&] { c.plan().validate(); });
    if (c.resolutions.empty()) fail("consistency.resolutions", "must not be empty");
    if (c.kind == RunKind::total_error) {
        if (c.lx != c.ly) fail("grid.ly", "total-error runs need a square box");
        if (c.pairs.empty()) fail("total.pairs", "must not be empty");
        std::size_t max_n = 0;
        for (std::size_t k = 0; k < c.pairs.size(); ++k) {
            if (k > 0 && c.pairs[k].cells <= c.pairs[k - 1].cells)
                fail("total.pairs", "pairs must be sorted by strictly decreasing h");
            max_n = std::max(max_n, c.pairs[k].samples);
        }
        if (c.reference_cells <= c.pairs.back().cells) fail("total.reference_cells", "must be finer than every pair");
        if (c.n_ref < max_n) fail("plan.n_ref", "must be >= the largest pair sample count");
    }
}

/// Applies one "section.key=value" assignment.
inline void apply_setting(RunConfig& c, const std::string& assignment, std::size_t line = 0)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ParseError(line, "", "expected section.key=value, got '" + assignment + "'");
    const std::string lhs = config_detail::trim(std::string_view(assignment).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(assignment).substr(eq + 1));
    const auto dot = lhs.find('.');
    if (dot == std::string::npos) throw ParseError(line, lhs, "expected section.key");
    const auto* key = config_detail::find_key(lhs.substr(0, dot), lhs.substr(dot + 1));
    if (!key) throw ParseError(line, lhs, "unknown key");
    try {
        key->set(c, value);
    } catch (const std::invalid_argument& e) {
        throw ParseError(line, lhs, e.what());
    }
}

/// Parses a configuration document, then applies `overrides` ("section.key=value",
/// reported as line 0), then validates.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {})
{
    RunConfig c;
    std::map<std::string, std::size_t> line_of;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    std::size_t line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = config_detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "", "unterminated section header");
            section = config_detail::trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const auto& k : config_detail::keys()) known = known || k.section == section;
            if (!known) throw ParseError(line, section, "unknown section");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "", "expected key = value");
        if (section.empty()) throw ParseError(line, config_detail::trim(s.substr(0, eq)), "key outside a section");
        const std::string name = config_detail::trim(s.substr(0, eq));
        apply_setting(c, section + "." + name + "=" + s.substr(eq + 1), line);
        line_of[section + "." + name] = line;
    }
    for (const auto& o : overrides) {
        apply_setting(c, o, 0);
        line_of.erase(config_detail::trim(o.substr(0, o.find('='))));
    }
    validate_config(c, line_of);
    return c;
}

/// Every key, grouped by section, in a form parse_config reads back exactly.
inline std::string serialize_config(const RunConfig& c)
{
    std::string out;
    std::string section;
    for (const auto& k : config_detail::keys()) {
        if (k.section != section) {
            if (!section.empty()) out += '\n';
            section = k.section;
            out += "[" + section + "]\n";
        }
        out += k.name + " = " + k.get(c) + "\n";
    }
    return out;
}

} // namespace vfv
