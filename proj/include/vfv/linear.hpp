#pragma once

// Five-point periodic stencil operators and a Jacobi-preconditioned BiCGSTAB
// solver for them.  Reductions use a fixed four-lane partial-sum layout, so
// results are bit-reproducible for identical inputs.

#include "vfv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vfv::linear {

/// Row c: diag[c] x[c] + east[c] x[E(c)] + west[c] x[W(c)] + north[c] x[N(c)] + south[c] x[S(c)]
/// on an nx-by-ny periodic grid in row-major order.
struct Stencil {
    Stencil(std::size_t nx, std::size_t ny)
        : nx(nx), ny(ny), diag(nx * ny, 0.0), east(nx * ny, 0.0), west(nx * ny, 0.0), north(nx * ny, 0.0),
          south(nx * ny, 0.0)
    {
    }

    std::size_t size() const noexcept { return nx * ny; }

    std::size_t nx, ny;
    std::vector<double> diag, east, west, north, south;

    void apply(const double* __restrict x, double* __restrict y) const
    {
        const std::size_t n = size();
        const double* d = diag.data();
        const double* e = east.data();
        const double* w = west.data();
        const double* no = north.data();
        const double* so = south.data();
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t row = j * nx;
            const double* xr = x + row;
            const double* xu = x + ((j + 1 == ny) ? 0 : row + nx);
            const double* xd = x + ((j == 0) ? n - nx : row - nx);
            const std::size_t last = nx - 1;
            {
                const std::size_t c = row;
                y[c] = d[c] * xr[0] + e[c] * xr[1] + w[c] * xr[last] + no[c] * xu[0] + so[c] * xd[0];
            }
            for (std::size_t i = 1; i < last; ++i) {
                const std::size_t c = row + i;
                y[c] = d[c] * xr[i] + e[c] * xr[i + 1] + w[c] * xr[i - 1] + no[c] * xu[i] + so[c] * xd[i];
            }
            {
                const std::size_t c = row + last;
                y[c] = d[c] * xr[last] + e[c] * xr[0] + w[c] * xr[last - 1] + no[c] * xu[last] + so[c] * xd[last];
            }
        }
    }

    void apply(std::span<const double> x, std::span<double> y) const { apply(x.data(), y.data()); }
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

namespace detail {

/// Four interleaved partial sums, combined as (l0 + l1) + (l2 + l3).
struct Lanes {
    double l[4] = {0.0, 0.0, 0.0, 0.0};
    void add(std::size_t i, double v) noexcept { l[i & 3] += v; }
    double sum() const noexcept { return (l[0] + l[1]) + (l[2] + l[3]); }
};

inline double dot(const double* __restrict a, const double* __restrict b, std::size_t n)
{
    Lanes acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(i, a[i] * b[i]);
    return acc.sum();
}

} // namespace detail

/// Scratch vectors reused across solves of the same size.
struct Workspace {
    std::vector<double> r, r0, p, v, s, t, ph, sh, inv_d;

    void resize(std::size_t n)
    {
        for (auto* w : {&r, &r0, &p, &v, &s, &t, &ph, &sh, &inv_d}) w->resize(n);
    }
};

/// Solves A x = b to ||b - A x||_2 <= tol ||b||_2.  `x` holds the initial guess.
inline SolveStats bicgstab(const Stencil& A, std::span<const double> b, std::span<double> x, double tol, int max_iter,
                           Workspace& ws)
{
    using detail::dot;
    using detail::Lanes;
    const std::size_t n = b.size();
    ws.resize(n);
    double* __restrict r = ws.r.data();
    double* __restrict r0 = ws.r0.data();
    double* __restrict p = ws.p.data();
    double* __restrict v = ws.v.data();
    double* __restrict s = ws.s.data();
    double* __restrict t = ws.t.data();
    double* __restrict ph = ws.ph.data();
    double* __restrict sh = ws.sh.data();
    double* __restrict inv_d = ws.inv_d.data();
    for (std::size_t i = 0; i < n; ++i) {
        inv_d[i] = 1.0 / A.diag[i];
        p[i] = 0.0;
        v[i] = 0.0;
    }

    SolveStats st;
    const double bnorm = std::sqrt(dot(b.data(), b.data(), n));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        st.converged = true;
        return st;
    }
    A.apply(x.data(), r);
    Lanes rr;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - r[i];
        r0[i] = r[i];
        rr.add(i, r[i] * r[i]);
    }
    st.relative_residual = std::sqrt(rr.sum()) / bnorm;
    if (st.relative_residual <= tol) {
        st.converged = true;
        return st;
    }
    double rho = rr.sum();
    double rho_prev = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        if (rho == 0.0) break;
        const double beta = (rho / rho_prev) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            ph[i] = inv_d[i] * p[i];
        }
        A.apply(ph, v);
        alpha = rho / dot(r0, v, n);
        Lanes ss;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = r[i] - alpha * v[i];
            sh[i] = inv_d[i] * s[i];
            ss.add(i, s[i] * s[i]);
        }
        st.iterations = it;
        const double snorm = std::sqrt(ss.sum());
        if (snorm / bnorm <= tol) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
            st.relative_residual = snorm / bnorm;
            st.converged = true;
            return st;
        }
        A.apply(sh, t);
        Lanes tt, ts;
        for (std::size_t i = 0; i < n; ++i) {
            tt.add(i, t[i] * t[i]);
            ts.add(i, t[i] * s[i]);
        }
        omega = tt.sum() > 0.0 ? ts.sum() / tt.sum() : 0.0;
        Lanes rn, r0r;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
            rn.add(i, r[i] * r[i]);
            r0r.add(i, r0[i] * r[i]);
        }
        st.relative_residual = std::sqrt(rn.sum()) / bnorm;
        if (st.relative_residual <= tol) {
            st.converged = true;
            return st;
        }
        if (omega == 0.0) break;
        rho_prev = rho;
        rho = r0r.sum();
    }
    // Report the true residual of the returned iterate.
    A.apply(x.data(), r);
    Lanes res;
    for (std::size_t i = 0; i < n; ++i) res.add(i, (b[i] - r[i]) * (b[i] - r[i]));
    st.relative_residual = std::sqrt(res.sum()) / bnorm;
    st.converged = st.relative_residual <= tol;
    return st;
}

inline SolveStats bicgstab(const Stencil& A, std::span<const double> b, std::span<double> x, double tol, int max_iter)
{
    Workspace ws;
    return bicgstab(A, b, x, tol, max_iter, ws);
}

} // namespace vfv::linear
