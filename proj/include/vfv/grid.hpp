#pragma once

// Periodic uniform square mesh on a rectangular box, its face topology, and
// the discrete average / jump / gradient / divergence operators.
//
// Cells are indexed row-major: cell(i, j) = j * nx + i, i along x.
// Every cell owns two faces: its east face (axis 0, normal +x) and its north
// face (axis 1, normal +y).  Face id = 2 * owner + axis, in_cell = owner,
// out_cell = the neighbour across the face (with periodic wrap).

#include "vfv/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vfv {

using CellScalar = std::vector<double>;

/// Two-component cellwise vector field stored as separate component arrays.
struct CellVector {
    std::vector<double> x;
    std::vector<double> y;

    CellVector() = default;
    explicit CellVector(std::size_t n, double vx = 0.0, double vy = 0.0) : x(n, vx), y(n, vy) {}
    CellVector(std::vector<double> cx, std::vector<double> cy) : x(std::move(cx)), y(std::move(cy)) {}

    std::size_t size() const noexcept { return x.size(); }
    bool operator==(const CellVector&) const = default;
};

/// Facewise vector field, indexed by face id.
struct FaceVector {
    std::vector<double> x;
    std::vector<double> y;
};

struct FaceView {
    std::size_t in_cell = 0;
    std::size_t out_cell = 0;
    std::array<double, 2> normal{1.0, 0.0};
    double area = 0.0;

    /// Normal component along `axis`; zero on the other axis.
    double n(int axis) const noexcept { return normal[static_cast<std::size_t>(axis)]; }

    FaceView reversed() const noexcept
    {
        return FaceView{out_cell, in_cell, {-normal[0], -normal[1]}, area};
    }
};

class Grid {
public:
    Grid(std::size_t nx, std::size_t ny, double lx = 1.0, double ly = 1.0)
        : nx_(nx), ny_(ny), lx_(lx), ly_(ly)
    {
        if (nx < 2 || ny < 2)
            throw DomainError("grid needs at least 2 cells per axis, got " + std::to_string(nx) + "x" +
                              std::to_string(ny));
        if (!(lx > 0.0) || !(ly > 0.0)) throw DomainError("grid box lengths must be positive");
        if (std::abs(lx * static_cast<double>(ny) - ly * static_cast<double>(nx)) >
            1e-12 * lx * static_cast<double>(ny))
            throw DomainError("grid cells must be square: lx/nx != ly/ny");
        h_ = lx / static_cast<double>(nx);
    }

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    double lx() const noexcept { return lx_; }
    double ly() const noexcept { return ly_; }
    double h() const noexcept { return h_; }
    std::size_t num_cells() const noexcept { return nx_ * ny_; }
    std::size_t num_faces() const noexcept { return 2 * nx_ * ny_; }
    double cell_volume() const noexcept { return h_ * h_; }
    double face_area() const noexcept { return h_; }
    double box_volume() const noexcept { return lx_ * ly_; }

    std::size_t cell(std::size_t i, std::size_t j) const noexcept { return j * nx_ + i; }
    std::size_t ix(std::size_t c) const noexcept { return c % nx_; }
    std::size_t iy(std::size_t c) const noexcept { return c / nx_; }

    std::size_t east(std::size_t c) const noexcept
    {
        const std::size_t i = ix(c);
        return i + 1 == nx_ ? c + 1 - nx_ : c + 1;
    }
    std::size_t west(std::size_t c) const noexcept
    {
        return ix(c) == 0 ? c + nx_ - 1 : c - 1;
    }
    std::size_t north(std::size_t c) const noexcept
    {
        return iy(c) + 1 == ny_ ? c + nx_ - num_cells() : c + nx_;
    }
    std::size_t south(std::size_t c) const noexcept
    {
        return iy(c) == 0 ? c + num_cells() - nx_ : c - nx_;
    }

    std::array<double, 2> center(std::size_t c) const noexcept
    {
        return {(static_cast<double>(ix(c)) + 0.5) * h_, (static_cast<double>(iy(c)) + 0.5) * h_};
    }

    FaceView face(std::size_t f) const noexcept
    {
        const std::size_t owner = f / 2;
        if (f % 2 == 0) return FaceView{owner, east(owner), {1.0, 0.0}, h_};
        return FaceView{owner, north(owner), {0.0, 1.0}, h_};
    }

    /// Cell index shifted by (di, dj) cells with periodic wrap.
    std::size_t shifted(std::size_t c, std::ptrdiff_t di, std::ptrdiff_t dj) const noexcept
    {
        const auto wrap = [](std::ptrdiff_t v, std::size_t n) {
            const auto m = static_cast<std::ptrdiff_t>(n);
            return static_cast<std::size_t>(((v % m) + m) % m);
        };
        return cell(wrap(static_cast<std::ptrdiff_t>(ix(c)) + di, nx_),
                    wrap(static_cast<std::ptrdiff_t>(iy(c)) + dj, ny_));
    }

    bool operator==(const Grid& o) const noexcept
    {
        return nx_ == o.nx_ && ny_ == o.ny_ && lx_ == o.lx_ && ly_ == o.ly_;
    }

private:
    std::size_t nx_;
    std::size_t ny_;
    double lx_;
    double ly_;
    double h_ = 0.0;
};

inline double average(const FaceView& face, std::span<const double> field)
{
    return 0.5 * (field[face.in_cell] + field[face.out_cell]);
}

/// Jump oriented with the stored normal: value on the out side minus the in side.
inline double jump(const FaceView& face, std::span<const double> field)
{
    return field[face.out_cell] - field[face.in_cell];
}

/// (div_h v)_K = (1/|K|) sum over faces of K of |sigma| <v> . n_outward.
inline CellScalar discrete_divergence(const Grid& grid, const CellVector& v)
{
    const std::size_t n = grid.num_cells();
    if (v.x.size() != n || v.y.size() != n) throw DomainError("vector field size does not match grid");
    CellScalar div(n, 0.0);
    const double scale = grid.face_area() / grid.cell_volume();
    for (std::size_t c = 0; c < n; ++c) {
        const double fe = 0.5 * (v.x[c] + v.x[grid.east(c)]);
        const double fw = 0.5 * (v.x[grid.west(c)] + v.x[c]);
        const double fn = 0.5 * (v.y[c] + v.y[grid.north(c)]);
        const double fs = 0.5 * (v.y[grid.south(c)] + v.y[c]);
        div[c] = scale * ((fe - fw) + (fn - fs));
    }
    return div;
}

/// (grad_D phi)_sigma = [[phi]] / h * n, indexed by face id.
inline FaceVector discrete_gradient(const Grid& grid, std::span<const double> field)
{
    if (field.size() != grid.num_cells()) throw DomainError("scalar field size does not match grid");
    FaceVector g{std::vector<double>(grid.num_faces(), 0.0), std::vector<double>(grid.num_faces(), 0.0)};
    const double inv_h = 1.0 / grid.h();
    for (std::size_t f = 0; f < grid.num_faces(); ++f) {
        const FaceView face = grid.face(f);
        const double d = jump(face, field) * inv_h;
        g.x[f] = d * face.normal[0];
        g.y[f] = d * face.normal[1];
    }
    return g;
}

/// Copy of `field` translated by (di, dj) cells: out[shift(c)] = field[c].
inline CellScalar shift_field(const Grid& grid, std::span<const double> field, std::ptrdiff_t di, std::ptrdiff_t dj)
{
    CellScalar out(field.size());
    for (std::size_t c = 0; c < field.size(); ++c) out[grid.shifted(c, di, dj)] = field[c];
    return out;
}

} // namespace vfv
