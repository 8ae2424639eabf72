// vfv: command-line front end for the viscosity finite volume solver and its
// Monte Carlo experiments.
//
//   vfv solve       -c run.cfg [--set section.key=value ...]
//   vfv mc-e1       -c plan.cfg -o out/ -j 4
//   vfv norms       field.efld --q 1,2 --ell 4
//   vfv print-config -c run.cfg      (effective configuration after overrides)

#include "vfv/analysis.hpp"
#include "vfv/config.hpp"
#include "vfv/driver.hpp"
#include "vfv/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string output;
    std::size_t workers = 0;
};

void add_run_options(CLI::App* sub, RunArgs& a)
{
    sub->add_option("-c,--config", a.config_path, "configuration file (defaults apply to missing keys)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", a.sets, "override, e.g. --set grid.nx=128 (repeatable)");
    sub->add_option("-o,--output", a.output, "output directory (run.output)");
    sub->add_option("-j,--workers", a.workers, "worker threads (run.workers)")->check(CLI::PositiveNumber);
}

vfv::RunConfig load(const RunArgs& a, const char* kind)
{
    std::string text;
    if (!a.config_path.empty()) {
        std::ifstream is(a.config_path);
        if (!is) throw vfv::IoError("cannot read " + a.config_path);
        std::ostringstream ss;
        ss << is.rdbuf();
        text = ss.str();
    }
    std::vector<std::string> overrides = a.sets;
    if (kind) overrides.push_back(std::string("run.kind=") + kind);
    if (!a.output.empty()) overrides.push_back("run.output=" + a.output);
    if (a.workers) overrides.push_back("run.workers=" + std::to_string(a.workers));
    return vfv::parse_config(text, overrides);
}

int norms(const std::string& path, const std::vector<double>& qs, const std::vector<int>& ells)
{
    const vfv::FieldSet f = vfv::io::read_field(path);
    const char* names[] = {"rho", "m1", "m2"};
    std::cout << "var,norm,param,value\n";
    for (std::size_t k = 0; k < 3; ++k) {
        for (double q : qs)
            std::cout << names[k] << ",lq," << vfv::io::fmt(q) << ',' << vfv::io::fmt(vfv::lq_norm(f.var(k), f.grid(), q))
                      << '\n';
        for (int ell : ells)
            std::cout << names[k] << ",dual_sobolev," << ell << ','
                      << vfv::io::fmt(vfv::dual_sobolev_norm(f.var(k), ell, f.grid())) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Viscosity finite volume solver for the 2D isentropic Euler system, with Monte Carlo drivers"};
    app.require_subcommand(1);

    struct Mode {
        const char* name;
        const char* help;
        RunArgs args;
        CLI::App* sub = nullptr;
    };
    std::vector<Mode> modes{
        {"solve", "solve one initial state, write snapshots and the step log", {}},
        {"mc-e1", "statistical error E1 against a reference mean", {}},
        {"mc-e2", "statistical error E2 of Cesaro mesh averages", {}},
        {"total-error", "total error over (h, N) pairs against a fine reference", {}},
        {"consistency", "weak-form consistency defects over a set of resolutions", {}},
    };
    for (auto& m : modes) {
        m.sub = app.add_subcommand(m.name, m.help);
        add_run_options(m.sub, m.args);
    }

    RunArgs print_args;
    auto* print = app.add_subcommand("print-config", "print the effective configuration");
    add_run_options(print, print_args);

    std::string field_path;
    std::vector<double> qs{1.0, 2.0};
    std::vector<int> ells{4};
    auto* norm_cmd = app.add_subcommand("norms", "L^q and dual Sobolev norms of each variable of an EFLD1 field");
    norm_cmd->add_option("field", field_path, "EFLD1 file")->required()->check(CLI::ExistingFile);
    norm_cmd->add_option("--q", qs, "L^q exponents")->delimiter(',');
    norm_cmd->add_option("--ell", ells, "dual Sobolev orders")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (norm_cmd->parsed()) return norms(field_path, qs, ells);
        if (print->parsed()) {
            std::cout << vfv::serialize_config(load(print_args, nullptr));
            return 0;
        }
        for (auto& m : modes)
            if (m.sub->parsed()) return vfv::run(load(m.args, m.name));
    } catch (const vfv::Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << '\n';
        return 1;
    }
    return 1;
}
