#pragma once

// Piecewise-constant gas state (density, momentum), the total energy, the
// data-space distance, and the randomized Kelvin-Helmholtz initial data.

#include "vfv/error.hpp"
#include "vfv/grid.hpp"
#include "vfv/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vfv {

/// Pressure law p = a * rho^gamma.
struct GasParams {
    double gamma = 1.4;
    double a = 1.0;

    void validate() const
    {
        if (!(gamma > 1.0)) throw DomainError("gamma must be > 1");
        if (!(a > 0.0)) throw DomainError("pressure coefficient a must be > 0");
    }

    double pressure(double rho) const { return a * std::pow(rho, gamma); }

    bool operator==(const GasParams&) const = default;
};

/// Density and momentum on every cell of a grid.  Density is strictly positive.
class FieldSet {
public:
    static constexpr std::size_t num_vars = 3;

    FieldSet(Grid grid, CellScalar rho, CellVector mom)
        : grid_(grid), rho_(std::move(rho)), m1_(std::move(mom.x)), m2_(std::move(mom.y))
    {
        check();
    }

    FieldSet(Grid grid, CellScalar rho, CellScalar m1, CellScalar m2)
        : grid_(grid), rho_(std::move(rho)), m1_(std::move(m1)), m2_(std::move(m2))
    {
        check();
    }

    static FieldSet uniform(const Grid& grid, double rho, double u1, double u2)
    {
        const std::size_t n = grid.num_cells();
        return FieldSet(grid, CellScalar(n, rho), CellScalar(n, rho * u1), CellScalar(n, rho * u2));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> rho() const noexcept { return rho_; }
    std::span<const double> m1() const noexcept { return m1_; }
    std::span<const double> m2() const noexcept { return m2_; }

    /// Variable k in the fixed order (rho, m1, m2).
    std::span<const double> var(std::size_t k) const noexcept
    {
        return k == 0 ? std::span<const double>(rho_) : k == 1 ? std::span<const double>(m1_) : std::span<const double>(m2_);
    }

    double min_density() const noexcept { return *std::min_element(rho_.begin(), rho_.end()); }

    /// Sum over cells of |K| * variable k.
    double integral(std::size_t k) const noexcept
    {
        double s = 0.0;
        for (double v : var(k)) s += v;
        return s * grid_.cell_volume();
    }

    bool operator==(const FieldSet&) const = default;

private:
    void check() const
    {
        const std::size_t n = grid_.num_cells();
        if (rho_.size() != n || m1_.size() != n || m2_.size() != n)
            throw DomainError("field arrays must have one value per grid cell");
        for (std::size_t c = 0; c < n; ++c)
            if (!(rho_[c] > 0.0))
                throw PositivityLoss("density " + std::to_string(rho_[c]) + " at cell " + std::to_string(c) +
                                     " is not strictly positive");
    }

    Grid grid_;
    CellScalar rho_;
    CellScalar m1_;
    CellScalar m2_;
};

/// Convex energy E(rho, m): kinetic plus a/(gamma-1) rho^gamma, 0 at vacuum
/// with zero momentum, +infinity for vacuum with nonzero momentum.
inline double energy_density(double rho, double m1, double m2, const GasParams& gas)
{
    if (rho < 0.0 || std::isnan(rho)) throw DomainError("energy_density: negative density");
    if (rho == 0.0) return (m1 == 0.0 && m2 == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return 0.5 * (m1 * m1 + m2 * m2) / rho + gas.a / (gas.gamma - 1.0) * std::pow(rho, gas.gamma);
}

inline double total_energy(const FieldSet& s, const GasParams& gas)
{
    double e = 0.0;
    const auto rho = s.rho();
    const auto m1 = s.m1();
    const auto m2 = s.m2();
    for (std::size_t c = 0; c < rho.size(); ++c) e += energy_density(rho[c], m1[c], m2[c], gas);
    return e * s.grid().cell_volume();
}

/// ||rho1 - rho2||_{L^gamma} + ||m1/sqrt(rho1) - m2/sqrt(rho2)||_{L^2}, midpoint rule.
inline double data_metric(const FieldSet& d1, const FieldSet& d2, const GasParams& gas)
{
    if (!(d1.grid() == d2.grid())) throw TopologyError("data_metric: fields live on different grids");
    const double vol = d1.grid().cell_volume();
    double dens = 0.0;
    double mom = 0.0;
    for (std::size_t c = 0; c < d1.grid().num_cells(); ++c) {
        const double r1 = d1.rho()[c];
        const double r2 = d2.rho()[c];
        dens += std::pow(std::abs(r1 - r2), gas.gamma);
        const double s1 = 1.0 / std::sqrt(r1);
        const double s2 = 1.0 / std::sqrt(r2);
        const double w1 = d1.m1()[c] * s1 - d2.m1()[c] * s2;
        const double w2 = d1.m2()[c] * s1 - d2.m2()[c] * s2;
        mom += w1 * w1 + w2 * w2;
    }
    return std::pow(dens * vol, 1.0 / gas.gamma) + std::sqrt(mom * vol);
}

/// Randomized two-interface shear layer.
struct KHDataSpec {
    double J1 = 0.25;
    double J2 = 0.75;
    double eps_perturb = 0.01;
    int modes = 10;
    double rho_inner = 2.0;
    double u_inner = -0.5;
    double rho_outer = 1.0;
    double u_outer = 0.5;

    void validate() const
    {
        if (!(0.0 < J1 && J1 < J2 && J2 < 1.0)) throw DomainError("KH data needs 0 < J1 < J2 < 1");
        if (!(eps_perturb >= 0.0)) throw DomainError("KH perturbation amplitude must be >= 0");
        if (modes < 1) throw DomainError("KH data needs at least one mode");
    }

    bool operator==(const KHDataSpec&) const = default;
};

/// Interface coefficients a_j^i (normalized to sum 1 per interface) and phases b_j^i.
struct KHCoefficients {
    std::array<std::vector<double>, 2> amplitude;
    std::array<std::vector<double>, 2> phase;

    bool operator==(const KHCoefficients&) const = default;
};

/// Draw order: for j = 1, 2: the m amplitudes a_j^1..a_j^m from U[0,1), then
/// the m phases b_j^1..b_j^m from U[-pi, pi).
inline KHCoefficients draw_kh_coefficients(const KHDataSpec& spec, RandomStream& stream)
{
    KHCoefficients k;
    const auto m = static_cast<std::size_t>(spec.modes);
    for (std::size_t j = 0; j < 2; ++j) {
        auto& a = k.amplitude[j];
        a.resize(m);
        double sum = 0.0;
        for (auto& v : a) {
            v = stream.uniform();
            sum += v;
        }
        if (!(sum > 0.0)) {
            a.assign(m, 1.0);
            sum = static_cast<double>(m);
        }
        for (auto& v : a) v /= sum;
        auto& b = k.phase[j];
        b.resize(m);
        for (auto& v : b) v = stream.uniform(-std::numbers::pi, std::numbers::pi);
    }
    return k;
}

/// Interface height I_j(x1) on the unit-normalized box.
inline double kh_interface(const KHDataSpec& spec, const KHCoefficients& k, std::size_t j, double x1_unit)
{
    double y = 0.0;
    for (std::size_t i = 0; i < k.amplitude[j].size(); ++i)
        y += k.amplitude[j][i] * std::cos(k.phase[j][i] + 2.0 * static_cast<double>(i + 1) * std::numbers::pi * x1_unit);
    return (j == 0 ? spec.J1 : spec.J2) + spec.eps_perturb * y;
}

/// Cell-center evaluation of the two-state profile; momentum = rho * u.
inline FieldSet kh_state(const KHDataSpec& spec, const KHCoefficients& k, const Grid& grid)
{
    const std::size_t n = grid.num_cells();
    CellScalar rho(n), m1(n), m2(n, 0.0);
    std::vector<std::array<double, 2>> iface(grid.nx());
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        const double x1 = (static_cast<double>(i) + 0.5) * grid.h() / grid.lx();
        iface[i] = {kh_interface(spec, k, 0, x1), kh_interface(spec, k, 1, x1)};
    }
    for (std::size_t c = 0; c < n; ++c) {
        const double x2 = grid.center(c)[1] / grid.ly();
        const auto& I = iface[grid.ix(c)];
        const bool inner = I[0] < x2 && x2 < I[1];
        rho[c] = inner ? spec.rho_inner : spec.rho_outer;
        m1[c] = rho[c] * (inner ? spec.u_inner : spec.u_outer);
    }
    return FieldSet(grid, std::move(rho), std::move(m1), std::move(m2));
}

inline FieldSet sample_kh_data(const KHDataSpec& spec, const Grid& grid, RandomStream& stream)
{
    spec.validate();
    return kh_state(spec, draw_kh_coefficients(spec, stream), grid);
}

} // namespace vfv
