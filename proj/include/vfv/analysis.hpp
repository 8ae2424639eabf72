#pragma once

// Norms, weak-form consistency residuals and grid transfer between nested meshes.

#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/grid.hpp"
#include "vfv/scheme.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

namespace vfv {

/// (sum_K |K| |f_K|^q)^(1/q).
inline double lq_norm(std::span<const double> field, const Grid& grid, double q)
{
    if (!(q >= 1.0)) throw DomainError("lq_norm needs q >= 1");
    if (field.size() != grid.num_cells()) throw DomainError("lq_norm: field size does not match grid");
    double s = 0.0;
    if (q == 1.0) {
        for (double v : field) s += std::abs(v);
        return s * grid.cell_volume();
    }
    if (q == 2.0) {
        for (double v : field) s += v * v;
        return std::sqrt(s * grid.cell_volume());
    }
    for (double v : field) s += std::pow(std::abs(v), q);
    return std::pow(s * grid.cell_volume(), 1.0 / q);
}

/// L^q norm of the pointwise Euclidean magnitude of a vector field.
inline double lq_norm(const CellVector& field, const Grid& grid, double q)
{
    std::vector<double> mag(field.size());
    for (std::size_t c = 0; c < mag.size(); ++c) mag[c] = std::hypot(field.x[c], field.y[c]);
    return lq_norm(mag, grid, q);
}

namespace detail {

// The FFTW planner is not re-entrant; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct FftwPlanDestroy {
    void operator()(fftw_plan_s* p) const noexcept
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

} // namespace detail

/// Unnormalized 2D DFT of a row-major ny-by-nx real field:
/// F[ky][kx] = sum_{j,i} f[j][i] exp(-2 pi i (kx i / nx + ky j / ny)).
inline std::vector<std::complex<double>> dft2(std::span<const double> field, std::size_t nx, std::size_t ny)
{
    const std::size_t n = nx * ny;
    std::unique_ptr<fftw_complex[], detail::FftwFree> buf(fftw_alloc_complex(n));
    std::unique_ptr<fftw_plan_s, detail::FftwPlanDestroy> plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan.reset(fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf.get(), buf.get(), FFTW_FORWARD,
                                    FFTW_ESTIMATE));
    }
    for (std::size_t c = 0; c < n; ++c) {
        buf[c][0] = field[c];
        buf[c][1] = 0.0;
    }
    fftw_execute(plan.get());
    std::vector<std::complex<double>> out(n);
    for (std::size_t c = 0; c < n; ++c) out[c] = {buf[c][0], buf[c][1]};
    return out;
}

/// Signed wavenumber index of DFT bin k on an n-point axis, in (-n/2, n/2].
inline long signed_wavenumber(std::size_t k, std::size_t n)
{
    return 2 * k <= n ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Negative Sobolev norm (sum_k (1 + |kappa_k|^2)^(-ell) |f_k|^2)^(1/2), where
/// f_k = sqrt(|box|) DFT_k / N are the discrete Fourier coefficients
/// normalized so that ell = 0 gives the L^2 norm, and kappa_k = 2 pi k / side
/// uses the physical box sides.
inline double dual_sobolev_norm(std::span<const double> field, int ell, const Grid& grid)
{
    if (ell < 0) throw DomainError("dual_sobolev_norm needs ell >= 0");
    if (field.size() != grid.num_cells()) throw DomainError("dual_sobolev_norm: field size does not match grid");
    const std::size_t nx = grid.nx(), ny = grid.ny();
    const auto F = dft2(field, nx, ny);
    const double N = static_cast<double>(grid.num_cells());
    double s = 0.0;
    for (std::size_t ky = 0; ky < ny; ++ky) {
        const double ky_phys = 2.0 * std::numbers::pi * static_cast<double>(signed_wavenumber(ky, ny)) / grid.ly();
        for (std::size_t kx = 0; kx < nx; ++kx) {
            const double kx_phys = 2.0 * std::numbers::pi * static_cast<double>(signed_wavenumber(kx, nx)) / grid.lx();
            const double w = std::pow(1.0 + kx_phys * kx_phys + ky_phys * ky_phys, -static_cast<double>(ell));
            s += w * std::norm(F[ky * nx + kx]);
        }
    }
    return std::sqrt(s * grid.box_volume()) / N;
}

/// Smooth scalar test function phi(t, x1, x2) with its spatial gradient.
struct ScalarTestFunction {
    std::function<double(double, double, double)> value;
    std::function<std::array<double, 2>(double, double, double)> gradient;
};

/// Vector test function (phi_1, phi_2); component i acts on m_i.
struct VectorTestFunction {
    std::array<ScalarTestFunction, 2> components;
};

struct ConsistencyErrors {
    double e1 = 0.0;
    double e2 = 0.0;
    double e3 = 0.0;
};

/// Weak-form defects of a discrete trajectory.
///
/// `traj` must hold a snapshot at t = 0 and after every step (see
/// SolveOptions::record_every_step); the solution is taken piecewise constant
/// in time, equal to snapshot k on (t_{k-1}, t_k].  Space integrals use the
/// cell-center midpoint rule.  Time integrals of d_t phi are exact on each
/// interval, phi(t_k) - phi(t_{k-1}); the flux terms use the right endpoint t_k.
///
///   e1 = | int int rho d_t phi + m . grad phi  +  int rho_0 phi(0) |
///   e2 = max_i | int int m_i d_t phi_i + (m_i m / rho) . grad phi_i + a rho^gamma d_i phi_i  +  int m_0,i phi_i(0) |
///   e3 = max_k max(0, int E(state_k) - int E(initial))
inline ConsistencyErrors consistency_residuals(const Trajectory& traj, const FieldSet& initial, const GasParams& gas,
                                               const ScalarTestFunction& phi, const VectorTestFunction& phivec)
{
    if (traj.snapshots.size() < 2 || traj.snapshots.front().t != 0.0)
        throw DomainError("consistency_residuals needs a trajectory recorded at t = 0 and every step");
    const Grid& g = initial.grid();
    const std::size_t n = g.num_cells();
    const double vol = g.cell_volume();
    std::vector<std::array<double, 2>> centers(n);
    for (std::size_t c = 0; c < n; ++c) centers[c] = g.center(c);

    double mass = 0.0;
    std::array<double, 2> mom{0.0, 0.0};
    for (std::size_t c = 0; c < n; ++c) {
        const auto [x, y] = centers[c];
        mass += initial.rho()[c] * phi.value(0.0, x, y);
        for (std::size_t i = 0; i < 2; ++i) mom[i] += initial.var(1 + i)[c] * phivec.components[i].value(0.0, x, y);
    }

    ConsistencyErrors err;
    const double E0 = total_energy(initial, gas);
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const double t0 = traj.snapshots[k - 1].t;
        const double t1 = traj.snapshots[k].t;
        const double dt = t1 - t0;
        const FieldSet& s = traj.snapshots[k].state;
        if (!(s.grid() == g)) throw TopologyError("consistency_residuals: trajectory grid differs from initial data");
        if (!(dt > 0.0)) throw DomainError("consistency_residuals: snapshot times must increase");
        for (std::size_t c = 0; c < n; ++c) {
            const auto [x, y] = centers[c];
            const double r = s.rho()[c];
            const std::array<double, 2> m{s.m1()[c], s.m2()[c]};
            const auto gp = phi.gradient(t1, x, y);
            mass += r * (phi.value(t1, x, y) - phi.value(t0, x, y)) + dt * (m[0] * gp[0] + m[1] * gp[1]);
            const double p = gas.pressure(r);
            for (std::size_t i = 0; i < 2; ++i) {
                const auto& f = phivec.components[i];
                const auto gf = f.gradient(t1, x, y);
                mom[i] += m[i] * (f.value(t1, x, y) - f.value(t0, x, y)) +
                          dt * (m[i] * (m[0] * gf[0] + m[1] * gf[1]) / r + p * gf[i]);
            }
        }
        err.e3 = std::max(err.e3, total_energy(s, gas) - E0);
    }
    err.e1 = std::abs(mass * vol);
    err.e2 = std::max(std::abs(mom[0] * vol), std::abs(mom[1] * vol));
    return err;
}

/// Dyadically nested grids on a common box, coarsest first.
class MeshLadder {
public:
    explicit MeshLadder(std::vector<Grid> grids) : grids_(std::move(grids))
    {
        if (grids_.empty()) throw TopologyError("mesh ladder needs at least one grid");
        for (std::size_t k = 1; k < grids_.size(); ++k) {
            const Grid& a = grids_[k - 1];
            const Grid& b = grids_[k];
            if (a.lx() != b.lx() || a.ly() != b.ly() || b.nx() != 2 * a.nx() || b.ny() != 2 * a.ny())
                throw TopologyError("mesh ladder levels must double the resolution on a common box");
        }
    }

    /// Square grids with the given cells per side on [0, side]^2.
    static MeshLadder from_cells(const std::vector<std::size_t>& cells, double side = 1.0)
    {
        std::vector<Grid> g;
        for (std::size_t n : cells) g.emplace_back(n, n, side, side);
        return MeshLadder(std::move(g));
    }

    std::size_t size() const noexcept { return grids_.size(); }
    const Grid& operator[](std::size_t k) const { return grids_.at(k); }
    const Grid& finest() const noexcept { return grids_.back(); }
    const std::vector<Grid>& grids() const noexcept { return grids_; }

    MeshLadder prefix(std::size_t k) const
    {
        if (k == 0 || k > grids_.size()) throw TopologyError("mesh ladder prefix out of range");
        return MeshLadder(std::vector<Grid>(grids_.begin(), grids_.begin() + static_cast<std::ptrdiff_t>(k)));
    }

private:
    std::vector<Grid> grids_;
};

/// Refinement factor from `coarse` to `fine` (a power of two), or TopologyError.
inline std::size_t refinement_ratio(const Grid& coarse, const Grid& fine)
{
    if (coarse.lx() != fine.lx() || coarse.ly() != fine.ly())
        throw TopologyError("grids do not share a computational box");
    if (fine.nx() % coarse.nx() != 0 || fine.ny() % coarse.ny() != 0)
        throw TopologyError("grid " + std::to_string(fine.nx()) + " is not a refinement of " + std::to_string(coarse.nx()));
    const std::size_t r = fine.nx() / coarse.nx();
    if (fine.ny() / coarse.ny() != r || (r & (r - 1)) != 0)
        throw TopologyError("grid refinement must be dyadic and isotropic");
    return r;
}

/// Constant injection of a cellwise array to a nested finer grid.
inline std::vector<double> inject_values(std::span<const double> coarse, const Grid& coarse_grid, const Grid& fine_grid)
{
    const std::size_t r = refinement_ratio(coarse_grid, fine_grid);
    std::vector<double> fine(fine_grid.num_cells());
    for (std::size_t c = 0; c < fine.size(); ++c)
        fine[c] = coarse[coarse_grid.cell(fine_grid.ix(c) / r, fine_grid.iy(c) / r)];
    return fine;
}

/// Cell average of a finer cellwise array over each coarse cell.
inline std::vector<double> restrict_values(std::span<const double> fine, const Grid& fine_grid, const Grid& coarse_grid)
{
    const std::size_t r = refinement_ratio(coarse_grid, fine_grid);
    std::vector<double> coarse(coarse_grid.num_cells(), 0.0);
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        const std::size_t i0 = coarse_grid.ix(c) * r, j0 = coarse_grid.iy(c) * r;
        double s = 0.0;
        for (std::size_t dj = 0; dj < r; ++dj)
            for (std::size_t di = 0; di < r; ++di) s += fine[fine_grid.cell(i0 + di, j0 + dj)];
        coarse[c] = s / static_cast<double>(r * r);
    }
    return coarse;
}

inline FieldSet inject_to_fine(const FieldSet& coarse, const Grid& fine_grid)
{
    const Grid& cg = coarse.grid();
    return FieldSet(fine_grid, inject_values(coarse.rho(), cg, fine_grid), inject_values(coarse.m1(), cg, fine_grid),
                    inject_values(coarse.m2(), cg, fine_grid));
}

inline FieldSet restrict_to_coarse(const FieldSet& fine, const Grid& coarse_grid)
{
    const Grid& fg = fine.grid();
    return FieldSet(coarse_grid, restrict_values(fine.rho(), fg, coarse_grid),
                    restrict_values(fine.m1(), fg, coarse_grid), restrict_values(fine.m2(), fg, coarse_grid));
}

/// Arithmetic mean of the members after injection to the finest member grid.
/// Members are accumulated in list order.
inline FieldSet cesaro_average(const std::vector<FieldSet>& solutions)
{
    if (solutions.empty()) throw DomainError("cesaro_average of an empty list");
    const Grid* finest = &solutions.front().grid();
    for (const auto& s : solutions)
        if (s.grid().nx() > finest->nx()) finest = &s.grid();
    const Grid fine = *finest;
    const std::size_t n = fine.num_cells();
    std::array<std::vector<double>, 3> acc;
    for (auto& a : acc) a.assign(n, 0.0);
    for (const auto& s : solutions) {
        for (std::size_t k = 0; k < 3; ++k) {
            const auto v = s.grid() == fine ? std::vector<double>(s.var(k).begin(), s.var(k).end())
                                            : inject_values(s.var(k), s.grid(), fine);
            for (std::size_t c = 0; c < n; ++c) acc[k][c] += v[c];
        }
    }
    const double inv = 1.0 / static_cast<double>(solutions.size());
    for (auto& a : acc)
        for (double& v : a) v *= inv;
    return FieldSet(fine, std::move(acc[0]), std::move(acc[1]), std::move(acc[2]));
}

} // namespace vfv
