#pragma once

// Implicit viscosity finite volume scheme for the isentropic Euler system.
//
// Per cell K and time level k (backward Euler, periodic box):
//
//   |K| (rho_K - rho_K^old)/dt + sum_sigma |sigma| F[rho, u] . n_K = 0
//   |K| (m_K - m_K^old)/dt     + sum_sigma |sigma| ( F[m, u] + <p> n - h^alpha [[u]]/h ) . n_K = 0
//
// with the diffusive upwind flux
//   F[r, u] = <r> <u>.n - (h^eps + |<u>.n| / 2) [[r]],   p = a rho^gamma.
//
// The pressure face term <p> n is the cellwise form of -int p div_h(phi); the
// viscous face term is h^alpha int grad_D u : grad_D phi with each face
// carrying the dual cell of measure h^2.
//
// The implicit system is solved by lagged-coefficient fixed-point iteration:
// the face transport velocities <u>.n are frozen at the previous iterate.
// The frozen continuity equation does not involve m, so each iterate solves
// the density system first and then the two momentum systems with the new
// density in the pressure and viscous terms.

#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/grid.hpp"
#include "vfv/linear.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace vfv {

struct SchemeParams {
    double alpha = 0.8;
    double eps_flux = 0.0;
    /// Time step; 0 selects h/2 on the grid being solved.
    double dt = 0.0;
    double t_final = 0.5;
    double picard_tol = 1e-10;
    int picard_max = 200;
    double linear_tol = 1e-12;
    int linear_max = 2000;
    /// Inner solves of a fixed-point iterate use max(linear_tol, linear_forcing * last increment);
    /// convergence is only accepted on an iterate solved at linear_tol.
    double linear_forcing = 1e-3;
    int max_halvings = 5;

    double dt_for(const Grid& g) const { return dt > 0.0 ? dt : 0.5 * g.h(); }

    bool operator==(const SchemeParams&) const = default;
};

struct Admissibility {
    bool ok = true;
    /// Upper bound on alpha for the given (gamma, eps, d).
    double alpha_bound = 0.0;
    std::string violated;

    explicit operator bool() const noexcept { return ok; }
};

/// Admissible (eps, alpha) band:
///   gamma in (1, 2): -1 < eps and 0 < alpha < 2 - (d/3 + 1 + eps)/gamma
///   gamma >= 2:      -1 < eps and 0 < alpha < 2 - d/gamma
/// plus dt >= 0, t_final > 0 and positive solver budgets.
inline Admissibility validate_params(const GasParams& gas, const SchemeParams& sp, int d = 2)
{
    Admissibility v;
    const double dd = static_cast<double>(d);
    v.alpha_bound = gas.gamma < 2.0 ? 2.0 - (dd / 3.0 + 1.0 + sp.eps_flux) / gas.gamma : 2.0 - dd / gas.gamma;
    auto fail = [&](std::string why) {
        if (v.ok) v.violated = std::move(why);
        v.ok = false;
    };
    if (!(gas.gamma > 1.0)) fail("gamma > 1");
    if (!(gas.a > 0.0)) fail("a > 0");
    if (!(sp.eps_flux > -1.0)) fail("eps_flux > -1");
    if (!(sp.alpha > 0.0)) fail("alpha > 0");
    if (!(sp.alpha < v.alpha_bound)) {
        fail(gas.gamma < 2.0 ? "alpha < 2 - (d/3 + 1 + eps)/gamma = " + std::to_string(v.alpha_bound)
                             : "alpha < 2 - d/gamma = " + std::to_string(v.alpha_bound));
    }
    if (!(sp.dt >= 0.0)) fail("dt >= 0");
    if (!(sp.t_final > 0.0)) fail("t_final > 0");
    if (!(sp.picard_tol > 0.0) || sp.picard_max < 1) fail("picard_tol > 0 and picard_max >= 1");
    if (!(sp.linear_tol > 0.0) || sp.linear_max < 1) fail("linear_tol > 0 and linear_max >= 1");
    if (sp.max_halvings < 0) fail("max_halvings >= 0");
    return v;
}

/// Diffusive upwind flux through one face given the in/out values of r and
/// the face-normal average velocity <u>.n.
inline double upwind_flux_value(double r_in, double r_out, double un_avg, double h, double eps_flux)
{
    return 0.5 * (r_in + r_out) * un_avg - (std::pow(h, eps_flux) + 0.5 * std::abs(un_avg)) * (r_out - r_in);
}

inline double upwind_flux(const FaceView& face, std::span<const double> r, const CellVector& u, double h,
                          double eps_flux)
{
    const double un = 0.5 * ((u.x[face.in_cell] + u.x[face.out_cell]) * face.normal[0] +
                             (u.y[face.in_cell] + u.y[face.out_cell]) * face.normal[1]);
    return upwind_flux_value(r[face.in_cell], r[face.out_cell], un, h, eps_flux);
}

inline CellVector velocity(const FieldSet& s)
{
    const std::size_t n = s.grid().num_cells();
    CellVector u(n);
    for (std::size_t c = 0; c < n; ++c) {
        u.x[c] = s.m1()[c] / s.rho()[c];
        u.y[c] = s.m2()[c] / s.rho()[c];
    }
    return u;
}

/// Cellwise residual of the implicit system, scaled by dt/|K| so that each
/// component is in the units of the unknown: [0] continuity, [1], [2] momentum.
inline std::array<CellScalar, 3> residual(const FieldSet& next, const FieldSet& prev, const GasParams& gas,
                                          const SchemeParams& sp)
{
    const Grid& g = next.grid();
    if (!(g == prev.grid())) throw TopologyError("residual: states live on different grids");
    if (!(next.min_density() > 0.0)) throw PositivityLoss("residual: non-positive density");
    const std::size_t n = g.num_cells();
    const double h = g.h();
    const double dt = sp.dt_for(g);
    const double lambda = dt * g.face_area() / g.cell_volume();
    const double mu = std::pow(h, sp.alpha);
    const CellVector u = velocity(next);
    CellScalar p(n);
    for (std::size_t c = 0; c < n; ++c) p[c] = gas.pressure(next.rho()[c]);

    std::array<CellScalar, 3> res;
    for (std::size_t k = 0; k < 3; ++k) {
        res[k].resize(n);
        for (std::size_t c = 0; c < n; ++c) res[k][c] = next.var(k)[c] - prev.var(k)[c];
    }
    for (std::size_t f = 0; f < g.num_faces(); ++f) {
        const FaceView face = g.face(f);
        const std::size_t a = face.in_cell;
        const std::size_t b = face.out_cell;
        const double un = 0.5 * ((u.x[a] + u.x[b]) * face.normal[0] + (u.y[a] + u.y[b]) * face.normal[1]);
        const double pavg = 0.5 * (p[a] + p[b]);
        std::array<double, 3> flux{
            upwind_flux_value(next.rho()[a], next.rho()[b], un, h, sp.eps_flux),
            upwind_flux_value(next.m1()[a], next.m1()[b], un, h, sp.eps_flux) + pavg * face.normal[0] -
                mu * (u.x[b] - u.x[a]) / h,
            upwind_flux_value(next.m2()[a], next.m2()[b], un, h, sp.eps_flux) + pavg * face.normal[1] -
                mu * (u.y[b] - u.y[a]) / h,
        };
        for (std::size_t k = 0; k < 3; ++k) {
            res[k][a] += lambda * flux[k];
            res[k][b] -= lambda * flux[k];
        }
    }
    return res;
}

inline double max_abs_residual(const std::array<CellScalar, 3>& r)
{
    double m = 0.0;
    for (const auto& comp : r)
        for (double v : comp) m = std::max(m, std::abs(v));
    return m;
}

struct StepReport {
    int picard_iters = 0;
    /// Final relative max-norm increment of the fixed-point iteration.
    double residual = 0.0;
    double mass_drift = 0.0;
    double energy_change = 0.0;
    int linear_iters = 0;
};

namespace detail {

/// Calls visit(c, east, west, north, south) with the periodic neighbours of
/// every cell in ascending order.
template <class Visit>
void for_each_cell(const Grid& g, Visit&& visit)
{
    const std::size_t nx = g.nx(), ny = g.ny(), n = g.num_cells();
    for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t row = j * nx;
        const std::size_t up = (j + 1 == ny) ? 0 : row + nx;
        const std::size_t down = (j == 0) ? n - nx : row - nx;
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t c = row + i;
            visit(c, (i + 1 == nx) ? row : c + 1, (i == 0) ? row + nx - 1 : c - 1, up + i, down + i);
        }
    }
}

/// Upwind transport part of the scaled operator: identity plus lambda times
/// the face fluxes of r with the face velocities <u>.n frozen at (rho, m1, m2).
inline linear::Stencil transport_stencil(const Grid& g, std::span<const double> rho, std::span<const double> m1,
                                         std::span<const double> m2, double lambda, double diffusion)
{
    const std::size_t n = g.num_cells();
    std::vector<double> ux(n), uy(n), ve(n), vn(n);
    for (std::size_t c = 0; c < n; ++c) {
        ux[c] = m1[c] / rho[c];
        uy[c] = m2[c] / rho[c];
    }
    for_each_cell(g, [&](std::size_t c, std::size_t e, std::size_t, std::size_t no, std::size_t) {
        ve[c] = 0.5 * (ux[c] + ux[e]);
        vn[c] = 0.5 * (uy[c] + uy[no]);
    });
    linear::Stencil A(g.nx(), g.ny());
    for_each_cell(g, [&](std::size_t c, std::size_t, std::size_t w, std::size_t, std::size_t so) {
        const double vE = ve[c], vW = ve[w], vN = vn[c], vS = vn[so];
        const double cE = diffusion + 0.5 * std::abs(vE), cW = diffusion + 0.5 * std::abs(vW);
        const double cN = diffusion + 0.5 * std::abs(vN), cS = diffusion + 0.5 * std::abs(vS);
        A.diag[c] = 1.0 + lambda * ((0.5 * vE + cE) + (-0.5 * vW + cW) + (0.5 * vN + cN) + (-0.5 * vS + cS));
        A.east[c] = lambda * (0.5 * vE - cE);
        A.west[c] = lambda * (-0.5 * vW - cW);
        A.north[c] = lambda * (0.5 * vN - cN);
        A.south[c] = lambda * (-0.5 * vS - cS);
    });
    return A;
}

inline void require_converged(const linear::SolveStats& st, const char* what)
{
    if (!st.converged)
        throw NonConvergence(std::string(what) + " solve stalled at relative residual " +
                             std::to_string(st.relative_residual));
}

} // namespace detail

/// One backward-Euler step of size sp.dt_for(grid), starting the fixed-point
/// iteration from the current state.
inline std::pair<FieldSet, StepReport> step(const FieldSet& state, const GasParams& gas, const SchemeParams& sp)
{
    const Grid& g = state.grid();
    const std::size_t n = g.num_cells();
    const double h = g.h();
    const double dt = sp.dt_for(g);
    const double lambda = dt * g.face_area() / g.cell_volume();
    const double diffusion = std::pow(h, sp.eps_flux);
    const double visc = lambda * std::pow(h, sp.alpha) / h;

    const auto old_rho = state.rho();
    const auto old_m1 = state.m1();
    const auto old_m2 = state.m2();
    std::vector<double> rho(old_rho.begin(), old_rho.end());
    std::vector<double> m1(old_m1.begin(), old_m1.end());
    std::vector<double> m2(old_m2.begin(), old_m2.end());
    std::vector<double> next_rho(rho), next_m1(m1), next_m2(m2), inv_rho(n), p(n), rhs(n);

    linear::Workspace ws;
    StepReport report;
    bool converged = false;
    double tol = std::max(sp.linear_tol, sp.linear_forcing);
    for (int it = 1; it <= sp.picard_max; ++it) {
        const linear::Stencil T = detail::transport_stencil(g, rho, m1, m2, lambda, diffusion);

        auto st = linear::bicgstab(T, old_rho, next_rho, tol, sp.linear_max, ws);
        report.linear_iters += st.iterations;
        detail::require_converged(st, "density");
        for (std::size_t c = 0; c < n; ++c) {
            if (!(next_rho[c] > 0.0))
                throw PositivityLoss("fixed-point iterate lost density positivity at cell " + std::to_string(c));
            inv_rho[c] = 1.0 / next_rho[c];
            p[c] = gas.pressure(next_rho[c]);
        }

        // Momentum operator: transport part plus viscosity acting on u = m / rho_new.
        linear::Stencil M = T;
        detail::for_each_cell(g, [&](std::size_t c, std::size_t e, std::size_t w, std::size_t no, std::size_t so) {
            M.diag[c] += 4.0 * visc * inv_rho[c];
            M.east[c] -= visc * inv_rho[e];
            M.west[c] -= visc * inv_rho[w];
            M.north[c] -= visc * inv_rho[no];
            M.south[c] -= visc * inv_rho[so];
        });

        detail::for_each_cell(g, [&](std::size_t c, std::size_t e, std::size_t w, std::size_t, std::size_t) {
            rhs[c] = old_m1[c] - 0.5 * lambda * (p[e] - p[w]);
        });
        st = linear::bicgstab(M, rhs, next_m1, tol, sp.linear_max, ws);
        report.linear_iters += st.iterations;
        detail::require_converged(st, "momentum");

        detail::for_each_cell(g, [&](std::size_t c, std::size_t, std::size_t, std::size_t no, std::size_t so) {
            rhs[c] = old_m2[c] - 0.5 * lambda * (p[no] - p[so]);
        });
        st = linear::bicgstab(M, rhs, next_m2, tol, sp.linear_max, ws);
        report.linear_iters += st.iterations;
        detail::require_converged(st, "momentum");

        double inc = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            inc = std::max({inc, std::abs(next_rho[c] - rho[c]), std::abs(next_m1[c] - m1[c]),
                            std::abs(next_m2[c] - m2[c])});
            scale = std::max({scale, std::abs(next_rho[c]), std::abs(next_m1[c]), std::abs(next_m2[c])});
        }
        rho = next_rho;
        m1 = next_m1;
        m2 = next_m2;
        report.picard_iters = it;
        report.residual = inc / scale;
        if (report.residual < sp.picard_tol && tol == sp.linear_tol) {
            converged = true;
            break;
        }
        tol = std::max(sp.linear_tol, sp.linear_forcing * report.residual);
    }
    if (!converged)
        throw NonConvergence("fixed-point iteration did not reach " + std::to_string(sp.picard_tol) + " in " +
                             std::to_string(sp.picard_max) + " iterations (last increment " +
                             std::to_string(report.residual) + ")");

    FieldSet next(g, std::move(rho), std::move(m1), std::move(m2));
    report.mass_drift = std::abs(next.integral(0) - state.integral(0));
    report.energy_change = total_energy(next, gas) - total_energy(state, gas);
    return {std::move(next), report};
}

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    double dt = 0.0;
    int halvings = 0;
    double energy = 0.0;
    StepReport report;
};

struct Snapshot {
    double t = 0.0;
    FieldSet state;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    std::vector<StepRecord> steps;
    double initial_energy = 0.0;

    const FieldSet& final_state() const { return snapshots.back().state; }
};

struct SolveOptions {
    /// Keep a snapshot after every accepted step (needed for weak-form residuals).
    bool record_every_step = false;
};

/// Marches from t = 0 to sp.t_final.  Steps are clipped so that every
/// requested snapshot time hits exactly; the final state is always recorded.
/// A step failing with NonConvergence or PositivityLoss is retried with half
/// the step size, at most sp.max_halvings times; later steps use the nominal
/// size again.
inline Trajectory solve(const FieldSet& initial, const GasParams& gas, const SchemeParams& sp,
                        std::vector<double> snapshot_times, SolveOptions opts = {})
{
    gas.validate();
    const Admissibility adm = validate_params(gas, sp);
    if (!adm) throw DomainError("inadmissible scheme parameters: " + adm.violated);
    for (double t : snapshot_times)
        if (t < 0.0 || t > sp.t_final) throw DomainError("snapshot time " + std::to_string(t) + " outside [0, t_final]");
    snapshot_times.push_back(sp.t_final);
    std::sort(snapshot_times.begin(), snapshot_times.end());
    snapshot_times.erase(std::unique(snapshot_times.begin(), snapshot_times.end()), snapshot_times.end());

    Trajectory traj;
    traj.initial_energy = total_energy(initial, gas);
    if (snapshot_times.front() == 0.0 || opts.record_every_step) traj.snapshots.push_back({0.0, initial});

    const double dt_nominal = sp.dt_for(initial.grid());
    FieldSet current = initial;
    double t = 0.0;
    std::size_t step_index = 0;
    for (double stop : snapshot_times) {
        if (stop == 0.0) continue;
        while (t < stop) {
            const double remaining = stop - t;
            const bool lands = remaining <= dt_nominal * (1.0 + 1e-9);
            double dt = lands ? remaining : dt_nominal;
            ++step_index;
            for (int halvings = 0;; ++halvings, dt *= 0.5) {
                SchemeParams local = sp;
                local.dt = dt;
                try {
                    auto [next, report] = step(current, gas, local);
                    t = (halvings == 0 && lands) ? stop : t + dt;
                    traj.steps.push_back({step_index, t, dt, halvings, total_energy(next, gas), report});
                    current = std::move(next);
                    break;
                } catch (const NonConvergence& e) {
                    if (halvings == sp.max_halvings) throw StepFailure(step_index, e.what());
                } catch (const PositivityLoss& e) {
                    if (halvings == sp.max_halvings) throw StepFailure(step_index, e.what());
                }
            }
            if (opts.record_every_step && t < stop) traj.snapshots.push_back({t, current});
        }
        traj.snapshots.push_back({stop, current});
    }
    return traj;
}

} // namespace vfv
