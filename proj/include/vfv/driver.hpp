#pragma once

// Experiment drivers behind the command-line tool.  Every run writes its
// artifacts plus manifest.json (seed, full configuration, configuration hash,
// format versions) into the output directory; a failed run writes error.json
// instead of the result files and returns a nonzero status.

#include "vfv/analysis.hpp"
#include "vfv/config.hpp"
#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/io.hpp"
#include "vfv/montecarlo.hpp"
#include "vfv/random.hpp"
#include "vfv/scheme.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

namespace vfv {

inline constexpr int manifest_version = 1;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Fixed smooth test pair used by `consistency` runs: a temporal cutoff
/// chi(t) = (1 - t/T)^3 on [0, T] (zero afterwards, C^2 at T) times a
/// single periodic Fourier mode in space.
struct TestPair {
    ScalarTestFunction phi;
    VectorTestFunction phivec;
};

inline TestPair standard_test_pair(double t_final, double lx, double ly)
{
    const double kx = 2.0 * std::numbers::pi / lx;
    const double ky = 2.0 * std::numbers::pi / ly;
    auto chi = [t_final](double t) {
        const double s = 1.0 - t / t_final;
        return s > 0.0 ? s * s * s : 0.0;
    };
    // Each component carries a y-only mode: a pair made only of x-modes is orthogonal to every
    // x-independent flow (the unperturbed shear layer) and would see nothing.  The y-modes match
    // the parity of the band data about y = ly/2 (rho, m1 even; m2 odd) for the same reason.
    TestPair p;
    p.phi.value = [=](double t, double x, double y) { return chi(t) * (std::sin(kx * x) + 1.0) * std::cos(ky * y); };
    p.phi.gradient = [=](double t, double x, double y) {
        return std::array<double, 2>{chi(t) * kx * std::cos(kx * x) * std::cos(ky * y),
                                     -chi(t) * ky * (std::sin(kx * x) + 1.0) * std::sin(ky * y)};
    };
    p.phivec.components[0].value = [=](double t, double x, double y) { return chi(t) * (std::cos(kx * x) * std::sin(ky * y) + std::cos(ky * y)); };
    p.phivec.components[0].gradient = [=](double t, double x, double y) {
        return std::array<double, 2>{-chi(t) * kx * std::sin(kx * x) * std::sin(ky * y),
                                     chi(t) * ky * (std::cos(kx * x) * std::cos(ky * y) - std::sin(ky * y))};
    };
    p.phivec.components[1].value = [=](double t, double x, double y) { return chi(t) * (std::sin(kx * x) + 1.0) * std::sin(ky * y); };
    p.phivec.components[1].gradient = [=](double t, double x, double y) {
        return std::array<double, 2>{chi(t) * kx * std::cos(kx * x) * std::sin(ky * y),
                                     chi(t) * ky * (std::sin(kx * x) + 1.0) * std::cos(ky * y)};
    };
    return p;
}

inline FieldSet initial_state(const RunConfig& c, const Grid& g)
{
    if (c.init_kind == "constant") return FieldSet::uniform(g, c.init_rho, c.init_u1, c.init_u2);
    RandomStream stream(c.seed, c.sample_id);
    return sample_kh_data(c.kh, g, stream);
}

struct ConsistencyRow {
    std::size_t cells = 0;
    double h = 0.0;
    ConsistencyErrors errors;
};

/// Consistency defects of the configured initial data on square grids with
/// the given cells per side.
inline std::vector<ConsistencyRow> consistency_study(const RunConfig& c, const std::vector<std::size_t>& cells)
{
    std::vector<ConsistencyRow> rows(cells.size());
    const TestPair tp = standard_test_pair(c.scheme.t_final, c.lx, c.lx);
    parallel_for(cells.size(), c.workers, [&](std::size_t k) {
        const Grid g(cells[k], cells[k], c.lx, c.lx);
        const FieldSet init = initial_state(c, g);
        const Trajectory traj = solve(init, c.gas, c.scheme, {}, {.record_every_step = true});
        rows[k] = {cells[k], g.h(), consistency_residuals(traj, init, c.gas, tp.phi, tp.phivec)};
    });
    return rows;
}

inline void write_manifest(const std::filesystem::path& dir, const RunConfig& c, const std::vector<std::string>& artifacts,
                           const std::string& status)
{
    const std::string text = serialize_config(c);
    nlohmann::ordered_json m;
    m["manifest_version"] = manifest_version;
    m["kind"] = to_string(c.kind);
    m["status"] = status;
    m["seed"] = c.seed;
    m["config_hash_fnv1a64"] = hex64(fnv1a(text));
    m["formats"] = {{"field", io::field_format}, {"csv", io::csv_format_version}};
    m["artifacts"] = artifacts;
    m["config"] = text;
    io::write_file(dir / "manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

inline void write_error_record(const std::filesystem::path& dir, const std::string& kind, const std::string& message,
                               const nlohmann::ordered_json& extra = {})
{
    nlohmann::ordered_json e;
    e["kind"] = kind;
    e["message"] = message;
    for (auto it = extra.begin(); it != extra.end(); ++it) e[it.key()] = it.value();
    io::write_file(dir / "error.json", [&](std::ostream& os) { os << e.dump(2) << '\n'; });
}

inline void write_table(const std::filesystem::path& dir, const std::string& stem, const ErrorTable& t,
                        std::vector<std::string>& artifacts)
{
    io::write_file(dir / (stem + ".csv"), [&](std::ostream& os) { io::write_error_table_csv(os, t); });
    io::write_file(dir / (stem + "_plot.csv"), [&](std::ostream& os) { io::write_plot_data(os, t); });
    artifacts.push_back(stem + ".csv");
    artifacts.push_back(stem + "_plot.csv");
}

namespace driver_detail {

inline void run_solve(const RunConfig& c, const std::filesystem::path& dir, std::vector<std::string>& artifacts)
{
    const Grid g = c.grid();
    const FieldSet init = initial_state(c, g);
    const Trajectory traj = solve(init, c.gas, c.scheme, c.snapshots);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%03zu.efld", k);
        io::write_field(dir / name, traj.snapshots[k].state);
        artifacts.push_back(name);
    }
    io::write_field(dir / "final.efld", traj.final_state());
    artifacts.push_back("final.efld");
    io::write_file(dir / "snapshots.csv", [&](std::ostream& os) {
        os << "index,t\n";
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k) os << k << ',' << io::fmt(traj.snapshots[k].t) << '\n';
    });
    artifacts.push_back("snapshots.csv");
    io::write_file(dir / "steps.csv", [&](std::ostream& os) { io::write_steps_csv(os, traj); });
    artifacts.push_back("steps.csv");
}

inline void run_mc(const RunConfig& c, const std::filesystem::path& dir, std::vector<std::string>& artifacts, bool cesaro)
{
    const SamplePlan plan = c.plan();
    FieldSet reference = FieldSet::uniform(c.grid(), 1.0, 0.0, 0.0);
    std::vector<ErrorVector> errs;
    if (cesaro) {
        const MeshLadder ladder = MeshLadder::from_cells(c.ladder, c.lx);
        reference = reference_cesaro_mean(plan, ladder);
        errs = statistical_error_E2(plan, ladder, reference);
    } else {
        reference = reference_mean(plan, c.grid());
        errs = statistical_error_E1(plan, c.grid(), reference);
    }
    io::write_field(dir / "reference.efld", reference);
    artifacts.push_back("reference.efld");
    write_table(dir, "errors", ErrorTable::build(plan.sample_counts, errs), artifacts);
}

inline void run_total(const RunConfig& c, const std::filesystem::path& dir, std::vector<std::string>& artifacts)
{
    const TotalErrorResult r = total_error_study(c.plan(), c.pairs, c.reference_cells, c.cesaro, c.lx);
    write_table(dir, "total_e1", r.e1, artifacts);
    if (r.e2) write_table(dir, "total_e2", *r.e2, artifacts);
}

inline void run_consistency(const RunConfig& c, const std::filesystem::path& dir, std::vector<std::string>& artifacts)
{
    const auto rows = consistency_study(c, c.resolutions);
    io::write_file(dir / "consistency.csv", [&](std::ostream& os) {
        os << "cells,h,e1,e2,e3\n";
        for (const auto& r : rows)
            os << r.cells << ',' << io::fmt(r.h) << ',' << io::fmt(r.errors.e1) << ',' << io::fmt(r.errors.e2) << ','
               << io::fmt(r.errors.e3) << '\n';
    });
    artifacts.push_back("consistency.csv");
}

} // namespace driver_detail

/// Runs the configured experiment into c.output.  Returns 0 on success; on
/// failure writes error.json and returns 1 (2 if even that is impossible).
inline int run(const RunConfig& c, std::ostream& log = std::cerr)
{
    const std::filesystem::path dir = c.output;
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::exception& e) {
        log << "error: cannot create output directory " << dir << ": " << e.what() << '\n';
        return 2;
    }
    std::filesystem::remove(dir / "error.json");
    std::vector<std::string> artifacts;
    auto fail = [&](const std::string& kind, const std::string& msg, const nlohmann::ordered_json& extra) {
        log << "error (" << kind << "): " << msg << '\n';
        try {
            write_error_record(dir, kind, msg, extra);
            write_manifest(dir, c, artifacts, "failed");
        } catch (const std::exception&) {
            return 2;
        }
        return 1;
    };
    try {
        switch (c.kind) {
        case RunKind::solve: driver_detail::run_solve(c, dir, artifacts); break;
        case RunKind::mc_e1: driver_detail::run_mc(c, dir, artifacts, false); break;
        case RunKind::mc_e2: driver_detail::run_mc(c, dir, artifacts, true); break;
        case RunKind::total_error: driver_detail::run_total(c, dir, artifacts); break;
        case RunKind::consistency: driver_detail::run_consistency(c, dir, artifacts); break;
        }
        write_manifest(dir, c, artifacts, "ok");
    } catch (const SampleFailure& e) {
        return fail(e.kind(), e.what(), {{"sample_id", e.sample_id()}});
    } catch (const StepFailure& e) {
        return fail(e.kind(), e.what(), {{"step", e.step()}});
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), {});
    } catch (const std::exception& e) {
        return fail("internal", e.what(), {});
    }
    return 0;
}

} // namespace vfv
