// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 4 9      run a subset
//
// Exit status is 0 iff every selected criterion passes.

#include "vfv/analysis.hpp"
#include "vfv/driver.hpp"
#include "vfv/io.hpp"
#include "vfv/montecarlo.hpp"
#include "vfv/scheme.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace vfv;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [violated]");
        pass = pass && ok;
    }
};

std::string sci(double v)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", v);
    return b;
}

std::string fix(double v)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", v);
    return b;
}

FieldSet deterministic_kh(const Grid& g)
{
    KHDataSpec spec;
    spec.eps_perturb = 0.0;
    RandomStream s(0, 0);
    return sample_kh_data(spec, g, s);
}

// Desk-scale Monte Carlo plan shared by criteria 5, 6 and 8; the master seed is the library default.
SamplePlan desk_plan(std::size_t workers)
{
    SamplePlan p;
    p.sample_counts = {5, 10, 20, 40};
    p.repetitions = 5;
    p.n_ref = 40;
    p.scheme.t_final = 0.5;
    p.workers = workers;
    return p;
}

std::string table_csv(const ErrorTable& t)
{
    std::ostringstream os;
    io::write_error_table_csv(os, t);
    return os.str();
}

std::string errors_of(const std::vector<ErrorVector>& e, std::size_t k)
{
    std::string s;
    for (const auto& v : e) s += (s.empty() ? "" : ",") + sci(v[k]);
    return s;
}

Verdict constant_state()
{
    const GasParams gas;
    SchemeParams sp;
    const Grid g(64, 64);
    const FieldSet init = FieldSet::uniform(g, 1.0, 0.5, 0.0);
    sp.t_final = 100 * sp.dt_for(g);
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory traj = solve(init, gas, sp, {});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double dev = 0.0;
    for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t c = 0; c < g.num_cells(); ++c)
            dev = std::max(dev, std::abs(traj.final_state().var(v)[c] - init.var(v)[c]));
    Verdict r;
    r.check(traj.steps.size() == 100, "steps=" + std::to_string(traj.steps.size()));
    r.check(dev <= 1e-12, "max deviation " + sci(dev) + " <= 1e-12");
    r.check(secs <= 60.0, "runtime " + fix(secs) + " s <= 60 s");
    return r;
}

// Criteria 2 and 3 share one run.
struct KHRun {
    FieldSet init;
    Trajectory traj;
};

const KHRun& kh128()
{
    static const KHRun run = [] {
        const GasParams gas;
        SchemeParams sp;
        sp.t_final = 0.25;
        const Grid g(128, 128);
        FieldSet init = deterministic_kh(g);
        Trajectory traj = solve(init, gas, sp, {}, {.record_every_step = true});
        return KHRun{std::move(init), std::move(traj)};
    }();
    return run;
}

Verdict conservation_positivity()
{
    const KHRun& run = kh128();
    const double mass0 = run.init.integral(0);
    double mass = 0.0, mom = 0.0, min_rho = std::numeric_limits<double>::infinity();
    for (const auto& s : run.traj.snapshots) {
        mass = std::max(mass, std::abs(s.state.integral(0) - mass0) / mass0);
        for (std::size_t k = 1; k < 3; ++k)
            mom = std::max(mom, std::abs(s.state.integral(k) - run.init.integral(k)) / mass0);
        min_rho = std::min(min_rho, s.state.min_density());
    }
    Verdict r;
    r.check(mass <= 1e-9, "relative mass drift " + sci(mass) + " <= 1e-9");
    r.check(mom <= 1e-9, "relative momentum drift " + sci(mom) + " <= 1e-9");
    r.check(min_rho > 0.0, "min density over " + std::to_string(run.traj.steps.size()) + " steps " + sci(min_rho) + " > 0");
    return r;
}

Verdict energy_dissipation()
{
    const GasParams gas;
    const KHRun& run = kh128();
    const double E0 = run.traj.initial_energy;
    double worst = -std::numeric_limits<double>::infinity(), prev = E0;
    for (const auto& s : run.traj.steps) {
        worst = std::max(worst, (s.energy - prev) / E0);
        prev = s.energy;
    }
    const TestPair tp = standard_test_pair(0.25, 1.0, 1.0);
    const double e3 = consistency_residuals(run.traj, run.init, gas, tp.phi, tp.phivec).e3;
    Verdict r;
    r.check(worst <= 1e-8, "max relative per-step energy increase " + sci(worst) + " <= 1e-8");
    r.check(e3 <= 1e-8, "e3 " + sci(e3) + " <= 1e-8");
    return r;
}

Verdict consistency_refinement()
{
    RunConfig c;
    c.kh.eps_perturb = 0.0;
    c.seed = 0;
    c.sample_id = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = consistency_study(c, {32, 64, 128});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Verdict r;
    std::string e1s, e2s;
    bool dec1 = true, dec2 = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        e1s += (k ? "," : "") + sci(rows[k].errors.e1);
        e2s += (k ? "," : "") + sci(rows[k].errors.e2);
        if (k > 0) {
            dec1 = dec1 && rows[k].errors.e1 < rows[k - 1].errors.e1;
            dec2 = dec2 && rows[k].errors.e2 < rows[k - 1].errors.e2;
        }
    }
    r.check(dec1, "e1 strictly decreasing over h=1/32,1/64,1/128: " + e1s);
    r.check(dec2, "e2 strictly decreasing: " + e2s);
    r.check(secs <= 600.0, "runtime " + fix(secs) + " s <= 600 s");
    return r;
}

// E1 on the desk plan; shared by criteria 5, 6 and 8.
struct E1Run {
    std::vector<ErrorVector> errors;
    std::string csv;
    double seconds = 0.0;
};

E1Run e1_run(std::size_t workers)
{
    const SamplePlan p = desk_plan(workers);
    const Grid g(64, 64);
    const auto t0 = std::chrono::steady_clock::now();
    const FieldSet ref = reference_mean(p, g);
    E1Run run;
    run.errors = statistical_error_E1(p, g, ref);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.csv = table_csv(ErrorTable::build(p.sample_counts, run.errors));
    return run;
}

const E1Run& e1_serial()
{
    static const E1Run run = e1_run(1);
    return run;
}

Verdict statistical_convergence()
{
    const E1Run& run = e1_serial();
    const auto t = ErrorTable::build(desk_plan(1).sample_counts, run.errors);
    bool decreasing = true;
    for (std::size_t k = 1; k < run.errors.size(); ++k) decreasing = decreasing && run.errors[k][0] < run.errors[k - 1][0];
    double mean_order = 0.0;
    std::string orders;
    for (double o : t.orders(0)) {
        mean_order += o / 3.0;
        orders += (orders.empty() ? "" : ",") + fix(o);
    }
    Verdict r;
    r.check(decreasing, "E1(rho) decreasing in N=5,10,20,40: " + errors_of(run.errors, 0));
    r.check(mean_order >= 0.2 && mean_order <= 1.0, "mean order " + fix(mean_order) + " in [0.2,1.0] (" + orders + ")");
    r.check(run.seconds <= 1800.0, "runtime " + fix(run.seconds) + " s <= 1800 s");
    return r;
}

Verdict cesaro_benefit()
{
    const SamplePlan p = desk_plan(1);
    const E1Run& e1 = e1_serial();
    const MeshLadder ladder = MeshLadder::from_cells({16, 32, 64});
    const auto e2 = statistical_error_E2(p, ladder, reference_cesaro_mean(p, ladder));
    const MeshLadder one = MeshLadder::from_cells({64});
    const auto e2_one = statistical_error_E2(p, one, reference_cesaro_mean(p, one));
    Verdict r;
    for (std::size_t k = 0; k < 3; ++k) {
        bool ok = true;
        std::string ratios;
        for (std::size_t n = 0; n < e2.size(); ++n) {
            ok = ok && e2[n][k] <= 1.5 * e1.errors[n][k];
            ratios += (ratios.empty() ? "" : ",") + fix(e2[n][k] / e1.errors[n][k]);
        }
        const char* names[] = {"rho", "m1", "m2"};
        r.check(ok, std::string("E2/E1(") + names[k] + ") <= 1.5: " + ratios);
    }
    r.check(e2_one == e1.errors, "E2 with ladder {1/64} bitwise equal to E1");
    return r;
}

Verdict total_error()
{
    const SamplePlan p = desk_plan(1);
    const auto t0 = std::chrono::steady_clock::now();
    const TotalErrorResult res = total_error_study(p, {{32, 5}, {64, 10}, {128, 20}}, 256, true);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Verdict r;
    const char* names[] = {"rho", "m1", "m2"};
    for (const auto* t : {&res.e1, &*res.e2}) {
        const std::string label = t == &res.e1 ? "E1" : "E2";
        for (std::size_t k = 0; k < 3; ++k) {
            bool ok = true;
            std::string os;
            for (double o : t->orders(k)) {
                ok = ok && o >= 0.3 && o <= 1.6;
                os += (os.empty() ? "" : ",") + fix(o);
            }
            r.check(ok, label + " orders(" + names[k] + ") in [0.3,1.6]: " + os);
        }
    }
    r.check(secs <= 3600.0, "runtime " + fix(secs) + " s <= 3600 s");
    return r;
}

Verdict determinism()
{
    const std::size_t workers = std::max(2u, std::thread::hardware_concurrency());
    const E1Run& a = e1_serial();
    const E1Run b = e1_run(workers);
    Verdict r;
    r.check(a.csv == b.csv, "E1 CSV with 1 and " + std::to_string(workers) + " workers byte-identical");
    return r;
}

Verdict oracle_equivalence()
{
    const GasParams gas;
    SchemeParams sp;
    sp.dt = 0.05;
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> ur(0.5, 2.0), um(-1.0, 1.0), uf(-1.0, 1.0);

    // Scheme residual versus a dense, cell-by-cell assembly on 4x4.
    const Grid g(4, 4);
    const std::size_t n = g.num_cells();
    auto rnd_state = [&] {
        std::vector<double> r(n), a(n), b(n);
        for (std::size_t c = 0; c < n; ++c) {
            r[c] = ur(gen);
            a[c] = um(gen);
            b[c] = um(gen);
        }
        return FieldSet(g, r, a, b);
    };
    const FieldSet nw = rnd_state(), old = rnd_state();
    const auto res = residual(nw, old, gas, sp);
    const double h = g.h();
    double worst = 0.0;
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i) {
            const std::size_t K = j * 4 + i;
            const std::size_t nb[4] = {j * 4 + (i + 1) % 4, j * 4 + (i + 3) % 4, ((j + 1) % 4) * 4 + i, ((j + 3) % 4) * 4 + i};
            const double nrm[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            double acc[3] = {0, 0, 0};
            for (int d = 0; d < 4; ++d) {
                const std::size_t L = nb[d];
                const double uK[2] = {nw.m1()[K] / nw.rho()[K], nw.m2()[K] / nw.rho()[K]};
                const double uL[2] = {nw.m1()[L] / nw.rho()[L], nw.m2()[L] / nw.rho()[L]};
                const double un = 0.5 * ((uK[0] + uL[0]) * nrm[d][0] + (uK[1] + uL[1]) * nrm[d][1]);
                const double D = 1.0 + 0.5 * std::abs(un);
                const double p = 0.5 * (gas.pressure(nw.rho()[K]) + gas.pressure(nw.rho()[L]));
                acc[0] += 0.5 * (nw.rho()[K] + nw.rho()[L]) * un - D * (nw.rho()[L] - nw.rho()[K]);
                for (int a = 0; a < 2; ++a) {
                    const auto m = nw.var(1 + a);
                    acc[1 + a] += 0.5 * (m[K] + m[L]) * un - D * (m[L] - m[K]) + p * nrm[d][a] -
                                  std::pow(h, sp.alpha) * (uL[a] - uK[a]) / h;
                }
            }
            for (int k = 0; k < 3; ++k) {
                const double dense = nw.var(k)[K] - old.var(k)[K] + sp.dt / h * acc[k];
                worst = std::max(worst, std::abs(dense - res[k][K]));
            }
        }

    // Summation by parts on 100 random fields.
    const Grid sg(12, 10, 1.2, 1.0);
    double sbp = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> phi(sg.num_cells());
        CellVector psi(sg.num_cells());
        for (std::size_t c = 0; c < sg.num_cells(); ++c) {
            phi[c] = uf(gen);
            psi.x[c] = uf(gen);
            psi.y[c] = uf(gen);
        }
        const auto div = discrete_divergence(sg, psi);
        double lhs = 0.0, rhs = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < sg.num_cells(); ++c) {
            lhs += sg.cell_volume() * phi[c] * div[c];
            scale += sg.cell_volume() * std::abs(phi[c] * div[c]);
        }
        for (std::size_t f = 0; f < sg.num_faces(); ++f) {
            const FaceView fv = sg.face(f);
            rhs -= fv.area * jump(fv, phi) * (average(fv, psi.x) * fv.normal[0] + average(fv, psi.y) * fv.normal[1]);
        }
        sbp = std::max(sbp, std::abs(lhs - rhs) / scale);
    }
    Verdict r;
    r.check(worst <= 1e-13, "residual vs dense assembly max diff " + sci(worst) + " <= 1e-13");
    r.check(sbp <= 1e-12, "summation-by-parts relative defect " + sci(sbp) + " <= 1e-12");
    return r;
}

Verdict norm_evaluators()
{
    const Grid g(32, 32);
    double worst = 0.0;
    for (int kx : {0, 1, 2, 5})
        for (int ky : {1, 3}) {
            const double A = 1.3;
            std::vector<double> f(g.num_cells());
            for (std::size_t c = 0; c < f.size(); ++c) {
                const auto x = g.center(c);
                f[c] = A * std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * (kx * x[0] + ky * x[1]));
            }
            const double kap2 = 4.0 * std::numbers::pi * std::numbers::pi * (kx * kx + ky * ky);
            for (int ell = 1; ell <= 6; ++ell)
                worst = std::max(worst, std::abs(dual_sobolev_norm(f, ell, g) - A * std::pow(1.0 + kap2, -ell / 2.0)));
        }
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0), uq(1.0, 4.0);
    const Grid lg(16, 16);
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> a(lg.num_cells()), b(lg.num_cells()), s(lg.num_cells());
        for (std::size_t c = 0; c < a.size(); ++c) {
            a[c] = u(gen);
            b[c] = u(gen);
            s[c] = a[c] + b[c];
        }
        const double q = uq(gen);
        if (lq_norm(s, lg, q) > lq_norm(a, lg, q) + lq_norm(b, lg, q) + 1e-14) ++violations;
    }
    Verdict r;
    r.check(worst <= 1e-10, "single-mode dual norm max error " + sci(worst) + " <= 1e-10 for l=1..6");
    r.check(violations == 0, "L^q triangle inequality violations " + std::to_string(violations) + "/1000");
    return r;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "constant-state exactness", constant_state},
        {2, "conservation and positivity", conservation_positivity},
        {3, "energy dissipation", energy_dissipation},
        {4, "consistency refinement", consistency_refinement},
        {5, "statistical convergence", statistical_convergence},
        {6, "Cesaro benefit", cesaro_benefit},
        {7, "total-error study", total_error},
        {8, "determinism", determinism},
        {9, "oracle equivalence", oracle_equivalence},
        {10, "norm evaluators", norm_evaluators},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
