#include "vfv/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

using namespace vfv;

TEST(Io, FormatUses17SignificantDigits)
{
    EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
    EXPECT_EQ(io::fmt(1.0), "1");
    EXPECT_EQ(io::fmt(std::nan("")), "");
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double v = d(gen);
        EXPECT_EQ(std::strtod(io::fmt(v).c_str(), nullptr), v);
    }
}

TEST(Io, FieldRoundTripIsBitExact)
{
    const Grid g(6, 4, 1.5, 1.0);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> r(0.1, 2.0), m(-1.0, 1.0);
    std::vector<double> rho(24), m1(24), m2(24);
    for (std::size_t c = 0; c < 24; ++c) {
        rho[c] = r(gen);
        m1[c] = m(gen);
        m2[c] = m(gen);
    }
    const FieldSet f(g, rho, m1, m2);
    std::stringstream ss;
    io::write_field(ss, f);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, bytes.find('\n')), "EFLD1 6 4 1.5 1 3");
    EXPECT_EQ(bytes.size(), bytes.find('\n') + 1 + 24 * 3 * 8);
    // Little-endian, variable-major: first payload double is rho[0].
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + bytes.find('\n') + 1);
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    EXPECT_EQ(std::bit_cast<double>(u), rho[0]);
    EXPECT_EQ(io::read_field(ss), f);
}

TEST(Io, RejectsMalformedFields)
{
    std::stringstream bad("EFLD2 2 2 1 1 3\n");
    EXPECT_THROW(io::read_field(bad), IoError);
    std::stringstream vars("EFLD1 2 2 1 1 2\n");
    EXPECT_THROW(io::read_field(vars), IoError);
    std::stringstream truncated("EFLD1 2 2 1 1 3\nabc");
    EXPECT_THROW(io::read_field(truncated), IoError);
}

TEST(Io, ErrorTableCsv)
{
    const auto t = ErrorTable::build({5, 10}, {{4e-2, 1.0, 0.5}, {2e-2, 0.25, 0.5}});
    std::ostringstream os;
    io::write_error_table_csv(os, t);
    EXPECT_EQ(os.str(), "N,err_rho,ord_rho,err_m1,ord_m1,err_m2,ord_m2\n"
                        "5,0.040000000000000001,,1,,0.5,\n"
                        "10,0.02,1,0.25,2,0.5,0\n");
    const auto th = ErrorTable::build({5}, {{1.0, 2.0, 3.0}}, {0.03125});
    std::ostringstream oh;
    io::write_error_table_csv(oh, th);
    EXPECT_EQ(oh.str(), "h,N,err_rho,ord_rho,err_m1,ord_m1,err_m2,ord_m2\n0.03125,5,1,,2,,3,\n");
}

TEST(Io, PlotDataHasReferenceSlopes)
{
    const auto t = ErrorTable::build({10, 40}, {{1e-2, 1.0, 1.0}, {5e-3, 1.0, 1.0}});
    std::ostringstream os;
    io::write_plot_data(os, t);
    std::istringstream is(os.str());
    std::string header, r0, r1;
    std::getline(is, header);
    std::getline(is, r0);
    std::getline(is, r1);
    EXPECT_EQ(header, "log10_N,log10_err_rho,log10_err_m1,log10_err_m2,log10_slope_half,log10_slope_one");
    std::vector<double> v;
    std::istringstream rs(r1);
    for (std::string cell; std::getline(rs, cell, ',');) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 6u);
    EXPECT_NEAR(v[0], std::log10(40.0), 1e-15);
    EXPECT_NEAR(v[4], -2.0 - 0.5 * std::log10(4.0), 1e-14);
    EXPECT_NEAR(v[5], -2.0 - std::log10(4.0), 1e-14);
}

TEST(Io, StepsCsv)
{
    const GasParams gas;
    SchemeParams sp;
    sp.dt = 0.01;
    sp.t_final = 0.02;
    const auto traj = solve(FieldSet::uniform(Grid(4, 4), 1.0, 0.0, 0.0), gas, sp, {});
    std::ostringstream os;
    io::write_steps_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "step,t,picard_iters,residual,mass_drift,energy");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 2);
}
