#include "vfv/linear.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace vfv;
using linear::Stencil;

namespace {

Stencil random_stencil(std::size_t nx, std::size_t ny, std::mt19937_64& gen, double dominance)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Stencil A(nx, ny);
    for (std::size_t c = 0; c < A.size(); ++c) {
        A.east[c] = d(gen);
        A.west[c] = d(gen);
        A.north[c] = d(gen);
        A.south[c] = d(gen);
        A.diag[c] = dominance + std::abs(A.east[c]) + std::abs(A.west[c]) + std::abs(A.north[c]) + std::abs(A.south[c]);
    }
    return A;
}

// Dense row-by-row product with explicit periodic index arithmetic.
std::vector<double> dense_apply(const Stencil& A, const std::vector<double>& x)
{
    const std::size_t nx = A.nx, ny = A.ny;
    std::vector<double> y(A.size(), 0.0);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t c = j * nx + i;
            y[c] = A.diag[c] * x[c] + A.east[c] * x[j * nx + (i + 1) % nx] + A.west[c] * x[j * nx + (i + nx - 1) % nx] +
                   A.north[c] * x[((j + 1) % ny) * nx + i] + A.south[c] * x[((j + ny - 1) % ny) * nx + i];
        }
    return y;
}

} // namespace

TEST(Linear, ApplyMatchesDenseProduct)
{
    std::mt19937_64 gen(1);
    for (auto [nx, ny] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 5}, {8, 4}, {17, 9}}) {
        const Stencil A = random_stencil(nx, ny, gen, 0.1);
        std::vector<double> x(A.size());
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (auto& v : x) v = d(gen);
        std::vector<double> y(A.size());
        A.apply(x, y);
        const auto ref = dense_apply(A, x);
        for (std::size_t c = 0; c < y.size(); ++c) EXPECT_NEAR(y[c], ref[c], 1e-14);
    }
}

TEST(Linear, BicgstabSolvesDominantSystem)
{
    std::mt19937_64 gen(2);
    const Stencil A = random_stencil(16, 12, gen, 0.5);
    std::vector<double> xtrue(A.size());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : xtrue) v = d(gen);
    std::vector<double> b(A.size());
    A.apply(xtrue, b);
    std::vector<double> x(A.size(), 0.0);
    const auto st = linear::bicgstab(A, b, x, 1e-13, 500);
    ASSERT_TRUE(st.converged);
    EXPECT_LE(st.relative_residual, 1e-13);
    for (std::size_t c = 0; c < x.size(); ++c) EXPECT_NEAR(x[c], xtrue[c], 1e-11);
}

TEST(Linear, ZeroRightHandSideGivesZero)
{
    std::mt19937_64 gen(3);
    const Stencil A = random_stencil(4, 4, gen, 1.0);
    std::vector<double> b(16, 0.0), x(16, 5.0);
    const auto st = linear::bicgstab(A, b, x, 1e-12, 10);
    EXPECT_TRUE(st.converged);
    for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Linear, ReportsNonConvergence)
{
    std::mt19937_64 gen(4);
    const Stencil A = random_stencil(32, 32, gen, 1e-3);
    std::vector<double> b(A.size(), 1.0), x(A.size(), 0.0);
    const auto st = linear::bicgstab(A, b, x, 1e-14, 1);
    EXPECT_FALSE(st.converged);
    EXPECT_GT(st.relative_residual, 1e-14);
}

TEST(Linear, WorkspaceReuseIsBitIdentical)
{
    std::mt19937_64 gen(5);
    const Stencil A = random_stencil(10, 10, gen, 0.2);
    std::vector<double> b(A.size());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : b) v = d(gen);
    linear::Workspace ws;
    std::vector<double> x1(A.size(), 0.0), x2(A.size(), 0.0), x3(A.size(), 0.0);
    linear::bicgstab(A, b, x1, 1e-12, 200, ws);
    linear::bicgstab(A, b, x2, 1e-12, 200, ws);
    linear::bicgstab(A, b, x3, 1e-12, 200);
    EXPECT_EQ(x1, x2);
    EXPECT_EQ(x1, x3);
}
