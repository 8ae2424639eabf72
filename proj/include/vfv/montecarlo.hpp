#pragma once

// Sample orchestration and the statistical error functionals.
//
// Sample ids: [0, n_ref) are reference samples; repetition l owns the block
// [offset + l * maxN, offset + (l + 1) * maxN) with offset = n_ref, and a run
// with N samples uses the first N ids of each block.  Every sample draws its
// data from RandomStream(master_seed, id), so results never depend on which
// worker solved which sample.  All sums run in ascending id order.

#include "vfv/analysis.hpp"
#include "vfv/error.hpp"
#include "vfv/fields.hpp"
#include "vfv/grid.hpp"
#include "vfv/random.hpp"
#include "vfv/scheme.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace vfv {

struct SamplePlan {
    std::uint64_t master_seed = 20240101;
    std::vector<std::size_t> sample_counts{5, 10, 20, 40, 80};
    std::size_t repetitions = 20;
    std::size_t n_ref = 100;
    /// First evaluation id; 0 means n_ref.  Anything below n_ref overlaps the reference ids.
    std::uint64_t evaluation_offset = 0;
    GasParams gas;
    SchemeParams scheme;
    KHDataSpec kh;
    std::size_t workers = 1;

    std::size_t max_count() const
    {
        return sample_counts.empty() ? 0 : *std::max_element(sample_counts.begin(), sample_counts.end());
    }

    std::uint64_t first_evaluation_id() const { return evaluation_offset == 0 ? n_ref : evaluation_offset; }

    std::uint64_t reference_id(std::size_t n) const { return n; }

    std::uint64_t evaluation_id(std::size_t rep, std::size_t n) const
    {
        return first_evaluation_id() + rep * max_count() + n;
    }

    void validate() const
    {
        if (sample_counts.empty()) throw PlanError("sample_counts is empty");
        for (std::size_t n : sample_counts)
            if (n < 1) throw PlanError("every sample count must be >= 1");
        if (repetitions < 1) throw PlanError("repetitions must be >= 1");
        if (n_ref < max_count()) throw PlanError("n_ref must be >= the largest sample count");
        if (first_evaluation_id() < n_ref) throw PlanError("evaluation sample ids overlap the reference ids");
        if (workers < 1) throw PlanError("workers must be >= 1");
        gas.validate();
        kh.validate();
        const Admissibility adm = validate_params(gas, scheme);
        if (!adm) throw DomainError("inadmissible scheme parameters: " + adm.violated);
    }

    bool operator==(const SamplePlan&) const = default;
};

/// Calls fn(i) for i in [0, n) on `workers` threads.  The first failing index
/// (lowest i) has its exception rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto body = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    }
    if (err) std::rethrow_exception(err);
}

/// Initial data of sample `id`.
inline FieldSet sample_initial(const SamplePlan& plan, std::uint64_t id, const Grid& grid)
{
    RandomStream stream(plan.master_seed, id);
    return sample_kh_data(plan.kh, grid, stream);
}

/// Solution at t_final of sample `id` on `grid`.  Failures are rethrown as SampleFailure.
inline FieldSet run_sample(const SamplePlan& plan, std::uint64_t id, const Grid& grid)
{
    try {
        return solve(sample_initial(plan, id, grid), plan.gas, plan.scheme, {}).final_state();
    } catch (const Error& e) {
        throw SampleFailure(static_cast<long long>(id), e.what());
    }
}

/// Cesàro average over the ladder of the solutions of sample `id`.
inline FieldSet run_cesaro_sample(const SamplePlan& plan, std::uint64_t id, const MeshLadder& ladder)
{
    std::vector<FieldSet> members;
    for (const Grid& g : ladder.grids()) members.push_back(run_sample(plan, id, g));
    return cesaro_average(members);
}

/// Cellwise mean, accumulated in list order.
inline FieldSet empirical_mean(const std::vector<FieldSet>& fields)
{
    if (fields.empty()) throw DomainError("empirical_mean of an empty list");
    const Grid& g = fields.front().grid();
    const std::size_t n = g.num_cells();
    std::array<std::vector<double>, 3> acc;
    for (auto& a : acc) a.assign(n, 0.0);
    for (const auto& f : fields) {
        if (!(f.grid() == g)) throw TopologyError("empirical_mean: fields live on different grids");
        for (std::size_t k = 0; k < 3; ++k) {
            const auto v = f.var(k);
            for (std::size_t c = 0; c < n; ++c) acc[k][c] += v[c];
        }
    }
    const double inv = 1.0 / static_cast<double>(fields.size());
    for (auto& a : acc)
        for (double& v : a) v *= inv;
    return FieldSet(g, std::move(acc[0]), std::move(acc[1]), std::move(acc[2]));
}

/// Per-variable values in the order (rho, m1, m2).
using ErrorVector = std::array<double, 3>;

/// ||mean(first N of batch) - reference||_{L^1} for each variable.
inline ErrorVector mean_l1_error(const std::vector<FieldSet>& batch, std::size_t N, const FieldSet& reference)
{
    if (N == 0 || N > batch.size()) throw PlanError("sample count exceeds the batch size");
    const Grid& g = reference.grid();
    const std::size_t n = g.num_cells();
    const double inv = 1.0 / static_cast<double>(N);
    ErrorVector err{};
    std::vector<double> acc(n);
    for (std::size_t k = 0; k < 3; ++k) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t s = 0; s < N; ++s) {
            if (!(batch[s].grid() == g)) throw TopologyError("sample and reference live on different grids");
            const auto v = batch[s].var(k);
            for (std::size_t c = 0; c < n; ++c) acc[c] += v[c];
        }
        const auto r = reference.var(k);
        for (std::size_t c = 0; c < n; ++c) acc[c] = acc[c] * inv - r[c];
        err[k] = lq_norm(acc, g, 1.0);
    }
    return err;
}

/// (1/L) sum_l ||mean of the first N samples of batch l - reference||_{L^1},
/// one entry per N in `counts`.  batches[l] holds repetition l in id order.
inline std::vector<ErrorVector> batch_errors(const std::vector<std::vector<FieldSet>>& batches,
                                             const std::vector<std::size_t>& counts, const FieldSet& reference)
{
    if (batches.empty()) throw PlanError("no repetitions");
    std::vector<ErrorVector> out;
    for (std::size_t N : counts) {
        ErrorVector sum{};
        for (const auto& batch : batches) {
            const ErrorVector e = mean_l1_error(batch, N, reference);
            for (std::size_t k = 0; k < 3; ++k) sum[k] += e[k];
        }
        for (double& v : sum) v /= static_cast<double>(batches.size());
        out.push_back(sum);
    }
    return out;
}

/// Solves ids[i] with `solver` on the plan's worker pool; results in id order.
template <class Solver>
std::vector<FieldSet> solve_samples(const SamplePlan& plan, const std::vector<std::uint64_t>& ids, Solver&& solver)
{
    std::vector<std::optional<FieldSet>> slots(ids.size());
    parallel_for(ids.size(), plan.workers, [&](std::size_t i) { slots[i].emplace(solver(ids[i])); });
    std::vector<FieldSet> out;
    out.reserve(ids.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline std::vector<std::uint64_t> reference_ids(const SamplePlan& plan)
{
    std::vector<std::uint64_t> ids(plan.n_ref);
    for (std::size_t n = 0; n < plan.n_ref; ++n) ids[n] = plan.reference_id(n);
    return ids;
}

/// Evaluation ids of all repetitions, each truncated to `per_rep` samples.
inline std::vector<std::uint64_t> evaluation_ids(const SamplePlan& plan, std::size_t per_rep)
{
    std::vector<std::uint64_t> ids;
    for (std::size_t l = 0; l < plan.repetitions; ++l)
        for (std::size_t n = 0; n < per_rep; ++n) ids.push_back(plan.evaluation_id(l, n));
    return ids;
}

inline std::vector<std::vector<FieldSet>> split_batches(std::vector<FieldSet> flat, std::size_t reps)
{
    const std::size_t per = flat.size() / reps;
    std::vector<std::vector<FieldSet>> out(reps);
    for (std::size_t l = 0; l < reps; ++l)
        for (std::size_t n = 0; n < per; ++n) out[l].push_back(std::move(flat[l * per + n]));
    return out;
}

/// Empirical mean of the n_ref reference samples on `grid`.
inline FieldSet reference_mean(const SamplePlan& plan, const Grid& grid)
{
    plan.validate();
    return empirical_mean(solve_samples(plan, reference_ids(plan), [&](std::uint64_t id) { return run_sample(plan, id, grid); }));
}

/// Empirical mean of the n_ref Cesàro-averaged reference samples.
inline FieldSet reference_cesaro_mean(const SamplePlan& plan, const MeshLadder& ladder)
{
    plan.validate();
    return empirical_mean(
        solve_samples(plan, reference_ids(plan), [&](std::uint64_t id) { return run_cesaro_sample(plan, id, ladder); }));
}

/// E1(N) for every N of the plan against `reference`.
inline std::vector<ErrorVector> statistical_error_E1(const SamplePlan& plan, const Grid& grid, const FieldSet& reference)
{
    plan.validate();
    auto flat = solve_samples(plan, evaluation_ids(plan, plan.max_count()),
                              [&](std::uint64_t id) { return run_sample(plan, id, grid); });
    return batch_errors(split_batches(std::move(flat), plan.repetitions), plan.sample_counts, reference);
}

/// E2(N): E1 with each sample replaced by its Cesàro average over `ladder`.
inline std::vector<ErrorVector> statistical_error_E2(const SamplePlan& plan, const MeshLadder& ladder,
                                                     const FieldSet& reference)
{
    plan.validate();
    auto flat = solve_samples(plan, evaluation_ids(plan, plan.max_count()),
                              [&](std::uint64_t id) { return run_cesaro_sample(plan, id, ladder); });
    return batch_errors(split_batches(std::move(flat), plan.repetitions), plan.sample_counts, reference);
}

/// log2(err_coarse / err_fine).
inline double observed_order(double err_coarse, double err_fine)
{
    if (!(err_coarse > 0.0) || !(err_fine > 0.0)) throw DomainError("observed_order needs positive errors");
    return std::log2(err_coarse / err_fine);
}

struct ErrorRow {
    std::optional<double> h; ///< set in total-error mode
    std::size_t N = 0;
    ErrorVector error{};
    /// Order against the previous row; NaN on the first row or where an error is zero.
    ErrorVector order{};
};

struct ErrorTable {
    std::vector<ErrorRow> rows;

    bool total_error_mode() const { return !rows.empty() && rows.front().h.has_value(); }

    /// Builds rows and fills orders between consecutive rows.
    static ErrorTable build(const std::vector<std::size_t>& counts, const std::vector<ErrorVector>& errors,
                            const std::vector<double>& hs = {})
    {
        if (counts.size() != errors.size() || (!hs.empty() && hs.size() != counts.size()))
            throw DomainError("error table columns differ in length");
        ErrorTable t;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t r = 0; r < counts.size(); ++r) {
            ErrorRow row;
            if (!hs.empty()) row.h = hs[r];
            row.N = counts[r];
            row.error = errors[r];
            for (std::size_t k = 0; k < 3; ++k) {
                const bool defined = r > 0 && errors[r - 1][k] > 0.0 && errors[r][k] > 0.0;
                row.order[k] = defined ? observed_order(errors[r - 1][k], errors[r][k]) : nan;
            }
            t.rows.push_back(row);
        }
        return t;
    }

    /// Orders of variable k between consecutive rows.
    std::vector<double> orders(std::size_t k) const
    {
        std::vector<double> o;
        for (std::size_t r = 1; r < rows.size(); ++r) o.push_back(rows[r].order[k]);
        return o;
    }

    bool operator==(const ErrorTable& other) const
    {
        if (rows.size() != other.rows.size()) return false;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& a = rows[r];
            const auto& b = other.rows[r];
            if (a.h != b.h || a.N != b.N || a.error != b.error) return false;
            for (std::size_t k = 0; k < 3; ++k)
                if (!(a.order[k] == b.order[k] || (std::isnan(a.order[k]) && std::isnan(b.order[k])))) return false;
        }
        return true;
    }
};

/// Mesh / sample-count pair of a total-error study; h = box side / cells.
struct MeshSamples {
    std::size_t cells = 0;
    std::size_t samples = 0;
    bool operator==(const MeshSamples&) const = default;
};

struct TotalErrorResult {
    ErrorTable e1;
    std::optional<ErrorTable> e2; ///< Cesàro mode only
};

/// Total error against a fine-mesh reference of n_ref samples.  Pair k is
/// evaluated with N(h_k) samples per repetition; coarse solutions are injected
/// to the reference grid.  In Cesàro mode each sample is additionally averaged
/// over the dyadic ladder from the coarsest pair mesh up to its own mesh, and
/// the E2 reference averages the ladder from the coarsest pair mesh up to the
/// reference mesh.  Solutions are computed once per (id, mesh) and shared
/// between both modes.  `side` is the box side length.
inline TotalErrorResult total_error_study(const SamplePlan& plan, const std::vector<MeshSamples>& pairs,
                                          std::size_t reference_cells, bool cesaro, double side = 1.0)
{
    if (pairs.empty()) throw PlanError("total-error study needs at least one (h, N) pair");
    for (std::size_t k = 1; k < pairs.size(); ++k)
        if (pairs[k].cells <= pairs[k - 1].cells) throw PlanError("pairs must be sorted by strictly decreasing h");
    if (reference_cells <= pairs.back().cells) throw PlanError("reference mesh must be finer than every pair");
    std::size_t max_n = 0;
    for (const auto& p : pairs) {
        if (p.samples < 1) throw PlanError("every pair needs at least one sample");
        max_n = std::max(max_n, p.samples);
    }
    SamplePlan sub = plan;
    sub.sample_counts = {max_n};
    sub.validate();

    // Every mesh that is solved on, coarsest first.
    std::vector<std::size_t> cells;
    for (std::size_t c = pairs.front().cells; c <= reference_cells; c *= 2) cells.push_back(c);
    const MeshLadder ladder = MeshLadder::from_cells(cells, side);
    const Grid& ref_grid = ladder.finest();
    if (ref_grid.nx() != reference_cells) throw TopologyError("reference mesh is not a dyadic refinement of the pairs");
    auto level_of = [&](std::size_t c) -> std::size_t {
        const auto it = std::find(cells.begin(), cells.end(), c);
        if (it == cells.end()) throw TopologyError("pair mesh " + std::to_string(c) + " is not on the dyadic ladder");
        return static_cast<std::size_t>(it - cells.begin());
    };
    for (const auto& p : pairs) level_of(p.cells);

    // Task list: (id, highest level needed).  Lower levels are solved too in Cesàro mode.
    struct Task {
        std::uint64_t id;
        std::size_t top;
        bool need_all;
    };
    std::vector<Task> tasks;
    for (std::size_t n = 0; n < plan.n_ref; ++n) tasks.push_back({sub.reference_id(n), cells.size() - 1, cesaro});
    std::map<std::uint64_t, std::size_t> eval_top;
    for (const auto& p : pairs)
        for (std::size_t l = 0; l < plan.repetitions; ++l)
            for (std::size_t n = 0; n < p.samples; ++n) {
                auto [it, fresh] = eval_top.emplace(sub.evaluation_id(l, n), level_of(p.cells));
                if (!fresh) it->second = std::max(it->second, level_of(p.cells));
            }
    for (const auto& [id, top] : eval_top) tasks.push_back({id, top, cesaro});

    // Per task: solutions at the levels it needs (others left empty).
    std::vector<std::vector<std::optional<FieldSet>>> sol(tasks.size());
    parallel_for(tasks.size(), plan.workers, [&](std::size_t i) {
        const Task& t = tasks[i];
        sol[i].resize(cells.size());
        if (t.need_all) {
            for (std::size_t lv = 0; lv <= t.top; ++lv) sol[i][lv].emplace(run_sample(sub, t.id, ladder[lv]));
        } else {
            // Pair meshes only.
            for (const auto& p : pairs) {
                const std::size_t lv = level_of(p.cells);
                if (lv <= t.top && !sol[i][lv]) sol[i][lv].emplace(run_sample(sub, t.id, ladder[lv]));
            }
            if (t.top == cells.size() - 1 && !sol[i][t.top]) sol[i][t.top].emplace(run_sample(sub, t.id, ladder[t.top]));
        }
    });
    std::map<std::uint64_t, std::size_t> task_of;
    for (std::size_t i = 0; i < tasks.size(); ++i) task_of[tasks[i].id] = i;

    auto plain = [&](std::size_t i, std::size_t lv) { return inject_to_fine(*sol[i][lv], ref_grid); };
    auto averaged = [&](std::size_t i, std::size_t lv) {
        std::vector<FieldSet> members;
        for (std::size_t k = 0; k <= lv; ++k) members.push_back(*sol[i][k]);
        return inject_to_fine(cesaro_average(members), ref_grid);
    };

    auto study = [&](auto&& value) {
        std::vector<FieldSet> refs;
        for (std::size_t n = 0; n < plan.n_ref; ++n) refs.push_back(value(task_of.at(sub.reference_id(n)), cells.size() - 1));
        const FieldSet reference = empirical_mean(refs);
        std::vector<ErrorVector> errs;
        std::vector<std::size_t> counts;
        std::vector<double> hs;
        for (const auto& p : pairs) {
            std::vector<std::vector<FieldSet>> batches(plan.repetitions);
            for (std::size_t l = 0; l < plan.repetitions; ++l)
                for (std::size_t n = 0; n < p.samples; ++n)
                    batches[l].push_back(value(task_of.at(sub.evaluation_id(l, n)), level_of(p.cells)));
            errs.push_back(batch_errors(batches, {p.samples}, reference).front());
            counts.push_back(p.samples);
            hs.push_back(side / static_cast<double>(p.cells));
        }
        return ErrorTable::build(counts, errs, hs);
    };

    TotalErrorResult res{study(plain), std::nullopt};
    if (cesaro) res.e2 = study(averaged);
    return res;
}

} // namespace vfv
