#pragma once

// On-disk formats: EFLD1 field dumps, step-report CSV, error tables and plot data.
//
// EFLD1: one ASCII line "EFLD1 <nx> <ny> <lx> <ly> 3\n", then nx*ny*3 doubles,
// little-endian, variable-major (rho, m1, m2), each variable row-major.
// Every floating-point value written to CSV uses 17 significant digits.

#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/grid.hpp"
#include "vfv/montecarlo.hpp"
#include "vfv/scheme.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace vfv::io {

inline constexpr const char* field_format = "EFLD1";
inline constexpr int csv_format_version = 1;

/// %.17g; NaN prints as an empty field.
inline std::string fmt(double v)
{
    if (std::isnan(v)) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_field(std::ostream& os, const FieldSet& s)
{
    const Grid& g = s.grid();
    os << field_format << ' ' << g.nx() << ' ' << g.ny() << ' ' << fmt(g.lx()) << ' ' << fmt(g.ly()) << " 3\n";
    std::vector<unsigned char> bytes(g.num_cells() * 8);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto v = s.var(k);
        for (std::size_t c = 0; c < v.size(); ++c) {
            std::uint64_t u = std::bit_cast<std::uint64_t>(v[c]);
            for (int b = 0; b < 8; ++b) bytes[c * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
        }
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!os) throw IoError("failed writing field data");
}

inline FieldSet read_field(std::istream& is)
{
    std::string header;
    if (!std::getline(is, header)) throw IoError("missing EFLD1 header");
    std::istringstream hs(header);
    std::string magic;
    std::size_t nx = 0, ny = 0, nvars = 0;
    double lx = 0.0, ly = 0.0;
    if (!(hs >> magic >> nx >> ny >> lx >> ly >> nvars) || magic != field_format)
        throw IoError("malformed EFLD1 header: '" + header + "'");
    if (nvars != 3) throw IoError("EFLD1 files must hold 3 variables, got " + std::to_string(nvars));
    const Grid g(nx, ny, lx, ly);
    std::vector<unsigned char> bytes(g.num_cells() * 8);
    std::array<std::vector<double>, 3> vars;
    for (auto& v : vars) {
        if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
            throw IoError("truncated EFLD1 payload");
        v.resize(g.num_cells());
        for (std::size_t c = 0; c < v.size(); ++c) {
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[c * 8 + b]) << (8 * b);
            v[c] = std::bit_cast<double>(u);
        }
    }
    return FieldSet(g, std::move(vars[0]), std::move(vars[1]), std::move(vars[2]));
}

inline void write_field(const std::filesystem::path& path, const FieldSet& s)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_field(os, s);
}

inline FieldSet read_field(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_field(is);
}

/// step,t,picard_iters,residual,mass_drift,energy
inline void write_steps_csv(std::ostream& os, const Trajectory& traj)
{
    os << "step,t,picard_iters,residual,mass_drift,energy\n";
    for (const auto& s : traj.steps)
        os << s.step << ',' << fmt(s.t) << ',' << s.report.picard_iters << ',' << fmt(s.report.residual) << ','
           << fmt(s.report.mass_drift) << ',' << fmt(s.energy) << '\n';
}

/// N,err_rho,ord_rho,err_m1,ord_m1,err_m2,ord_m2 (with leading h in total-error mode).
inline void write_error_table_csv(std::ostream& os, const ErrorTable& t)
{
    const bool total = t.total_error_mode();
    if (total) os << "h,";
    os << "N,err_rho,ord_rho,err_m1,ord_m1,err_m2,ord_m2\n";
    for (const auto& r : t.rows) {
        if (total) os << fmt(*r.h) << ',';
        os << r.N;
        for (std::size_t k = 0; k < 3; ++k) os << ',' << fmt(r.error[k]) << ',' << fmt(r.order[k]);
        os << '\n';
    }
}

/// Log-log data for plotting: log10 of N and of each error, plus the reference
/// slopes N^-1/2 and N^-1 through the first density error.
inline void write_plot_data(std::ostream& os, const ErrorTable& t)
{
    const bool total = t.total_error_mode();
    if (total) os << "log10_h,";
    os << "log10_N,log10_err_rho,log10_err_m1,log10_err_m2,log10_slope_half,log10_slope_one\n";
    if (t.rows.empty()) return;
    const double n0 = static_cast<double>(t.rows.front().N);
    const double e0 = t.rows.front().error[0];
    auto lg = [](double v) { return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN(); };
    for (const auto& r : t.rows) {
        const double n = static_cast<double>(r.N);
        if (total) os << fmt(lg(*r.h)) << ',';
        os << fmt(lg(n));
        for (double e : r.error) os << ',' << fmt(lg(e));
        os << ',' << fmt(lg(e0 * std::pow(n / n0, -0.5))) << ',' << fmt(lg(e0 * (n0 / n))) << '\n';
    }
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& w)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    w(os);
    if (!os) throw IoError("failed writing " + path.string());
}

} // namespace vfv::io
