#include "dcsvm/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dcsvm/rng.hpp"

namespace dcsvm {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<int> thresholded_support(std::span<const double> alpha, double threshold) {
    std::vector<int> s;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > threshold) s.push_back(static_cast<int>(i));
    return s;
}

std::vector<int> exact_support(std::span<const double> alpha) {
    return thresholded_support(alpha, 0.0);
}

DualSolution direct_solve(const SparseDataset& data, const KernelSpec& spec, double C, double tol,
                          std::size_t cache_bytes) {
    KernelView view(data, spec, all_indices(data.n()), cache_bytes);
    SolverConfig scfg;
    scfg.C = C;
    scfg.tol = tol;
    scfg.cache_bytes = cache_bytes;
    return solve_dual(view, scfg);
}

// Independent subproblem solves from zero over a given partition.
std::vector<double> partition_solution(const SparseDataset& data, const KernelSpec& spec,
                                       const Partition& part, double C, double tol,
                                       std::size_t cache_bytes) {
    std::vector<std::vector<double>> cluster_alpha(static_cast<std::size_t>(part.k));
    for (int c = 0; c < part.k; ++c) {
        const auto& mem = part.members[static_cast<std::size_t>(c)];
        if (mem.empty()) continue;  // random partitions may leave clusters empty
        KernelView view(data, spec, mem, cache_bytes);
        SolverConfig scfg;
        scfg.C = C;
        scfg.tol = tol;
        scfg.cache_bytes = cache_bytes;
        cluster_alpha[static_cast<std::size_t>(c)] = solve_dual(view, scfg).alpha;
    }
    return concat_solutions(part, cluster_alpha, data.n());
}

Partition random_partition(int n, int k, std::mt19937_64& rng) {
    Partition part;
    part.k = k;
    part.assign.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        part.assign[static_cast<std::size_t>(i)] =
            static_cast<int>(draw_below(rng, static_cast<std::uint64_t>(k)));
    part.rebuild_members();
    return part;
}

Partition kmeans_partition(const SparseDataset& data, const KernelSpec& spec, int k, int m,
                           std::uint64_t seed) {
    const int n = data.n();
    std::vector<int> pool = all_indices(n);
    std::mt19937_64 rng(mix_seed(seed, 0xd1a6u));
    const int sample_n = std::min(n, std::max(m, k));
    std::vector<int> sample = sample_without_replacement(pool, sample_n, rng);
    std::sort(sample.begin(), sample.end());
    KernelCenters centers = kernel_kmeans(data, sample, spec, k, 100, mix_seed(seed, 0xd1a7u));
    return assign_all(data, centers, spec);
}

}  // namespace

std::vector<BoundReport> bound_sweep(const SparseDataset& data, const KernelSpec& spec, double C,
                                     std::span<const int> k_list, std::uint64_t seed,
                                     const DiagnosticsConfig& cfg) {
    const int n = data.n();
    if (n > cfg.guard)
        throw GuardError("bound_sweep: dataset exceeds the O(n^2) size guard");

    const DualSolution star = direct_solve(data, spec, C, cfg.solve_tol, cfg.cache_bytes);
    const double f_star = star.objective;
    const std::vector<int> s_star = exact_support(star.alpha);

    std::vector<BoundReport> reports;
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
        const int k = k_list[ki];
        const std::uint64_t trial_seed = mix_seed(seed, 0xb0u + ki);

        const Partition part = kmeans_partition(data, spec, k, cfg.m, trial_seed);
        const std::vector<double> alpha_bar =
            partition_solution(data, spec, part, C, cfg.solve_tol, cfg.cache_bytes);

        BoundReport r;
        r.k = k;
        r.d_pi = off_diag_mass(data, part, spec, cfg.guard);
        r.bound = 0.5 * C * C * r.d_pi;
        r.gap = full_objective(data, spec, alpha_bar) - f_star;

        std::vector<int> joint = exact_support(alpha_bar);
        joint.insert(joint.end(), s_star.begin(), s_star.end());
        std::sort(joint.begin(), joint.end());
        joint.erase(std::unique(joint.begin(), joint.end()), joint.end());
        r.refined_bound = 0.5 * C * C * restricted_mass(data, part, spec, joint, cfg.guard);

        std::mt19937_64 rng(mix_seed(trial_seed, 0xabcdu));
        const Partition rnd = random_partition(n, k, rng);
        const std::vector<double> alpha_rnd =
            partition_solution(data, spec, rnd, C, cfg.solve_tol, cfg.cache_bytes);
        r.random_gap = full_objective(data, spec, alpha_rnd) - f_star;

        const double slack = 1e-9 * std::max(1.0, std::fabs(f_star));
        if (r.gap < -slack)
            throw InvariantViolation("bound_sweep: gap below zero at k=" + std::to_string(k));
        if (r.gap > r.bound + slack)
            throw InvariantViolation("bound_sweep: gap exceeds bound at k=" + std::to_string(k));
        if (r.refined_bound > r.bound + slack)
            throw InvariantViolation("bound_sweep: refined bound exceeds bound at k=" +
                                     std::to_string(k));
        if (r.gap > r.refined_bound + slack)
            throw InvariantViolation("bound_sweep: gap exceeds refined bound at k=" +
                                     std::to_string(k));
        reports.push_back(r);
    }
    return reports;
}

std::vector<SVReport> sv_identification(const SparseDataset& data, const KernelSpec& spec, double C,
                                        const DCConfig& dc_config, const DiagnosticsConfig& cfg) {
    const int n = data.n();
    if (n > cfg.guard)
        throw GuardError("sv_identification: dataset exceeds the direct-solve size guard");

    const double sv_threshold = cfg.sv_threshold_scale * C;
    const DualSolution star = direct_solve(data, spec, C, cfg.reference_tol, cfg.cache_bytes);
    const std::vector<int> s_star = thresholded_support(star.alpha, sv_threshold);

    std::vector<LevelState> levels;
    TrainHooks hooks;
    hooks.keep_levels = true;
    hooks.levels = &levels;
    hooks.trace_objective = false;
    hooks.trace_kkt = false;
    DCConfig run = dc_config;
    run.solver.C = C;
    const DCModel model = train(data, spec, run, hooks);

    const auto report_for = [&](int level, int clusters, std::span<const double> alpha) {
        const std::vector<int> s_bar = thresholded_support(alpha, sv_threshold);
        std::vector<int> both;
        std::set_intersection(s_bar.begin(), s_bar.end(), s_star.begin(), s_star.end(),
                              std::back_inserter(both));
        SVReport r;
        r.level = level;
        r.clusters = clusters;
        r.precision = s_bar.empty() ? 1.0
                                    : static_cast<double>(both.size()) /
                                          static_cast<double>(s_bar.size());
        r.recall = s_star.empty() ? 1.0
                                  : static_cast<double>(both.size()) /
                                        static_cast<double>(s_star.size());
        return r;
    };

    std::vector<SVReport> reports;
    for (const LevelState& state : levels)
        reports.push_back(report_for(state.level, state.partition.k, state.alpha_bar));
    if (!model.early) reports.push_back(report_for(0, 1, model.alpha));
    return reports;
}

std::vector<TracePoint> relative_error_trace(const SparseDataset& data, const KernelSpec& spec,
                                             double C, const DCConfig& dc_config,
                                             const DiagnosticsConfig& cfg) {
    const int n = data.n();
    if (n > cfg.guard)
        throw GuardError("relative_error_trace: dataset exceeds the direct-solve size guard");

    const DualSolution star = direct_solve(data, spec, C, cfg.reference_tol, cfg.cache_bytes);
    const double f_ref = star.objective;
    const double denom = std::fabs(f_ref);

    std::vector<TracePoint> points;
    const auto t0 = std::chrono::steady_clock::now();
    const auto now_s = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainHooks hooks;
    hooks.trace_kkt = false;  // keep the clock honest; only objectives are needed
    hooks.on_level = [&](const TraceRow& row) {
        points.push_back({row.time_s, std::fabs(row.objective - f_ref) / denom});
    };
    hooks.final_observer.stride = cfg.observe_stride > 0
                                      ? cfg.observe_stride
                                      : std::max<long>(1000, static_cast<long>(n));
    hooks.final_observer.fn = [&](long, std::span<const double> alpha) {
        points.push_back({now_s(), std::fabs(full_objective(data, spec, alpha) - f_ref) / denom});
    };

    DCConfig run = dc_config;
    run.solver.C = C;
    train(data, spec, run, hooks);
    return points;
}

void bound_reports_csv(std::span<const BoundReport> reports, std::ostream& out) {
    out << "k,D_pi,bound,gap,refined_bound,random_gap\n";
    for (const BoundReport& r : reports) {
        out << r.k << ',' << fmt17(r.d_pi) << ',' << fmt17(r.bound) << ',' << fmt17(r.gap) << ','
            << fmt17(r.refined_bound) << ',' << fmt17(r.random_gap) << '\n';
    }
}

void sv_reports_csv(std::span<const SVReport> reports, std::ostream& out) {
    out << "level,clusters,precision,recall\n";
    for (const SVReport& r : reports)
        out << r.level << ',' << r.clusters << ',' << fmt17(r.precision) << ',' << fmt17(r.recall)
            << '\n';
}

void trace_points_csv(std::span<const TracePoint> points, std::ostream& out) {
    out << "# rel_error = |f(alpha) - f(alpha_ref)| / |f(alpha_ref)|\n";
    out << "time_s,rel_error\n";
    for (const TracePoint& p : points)
        out << fmt17(p.time_s) << ',' << fmt17(p.rel_error) << '\n';
}

void train_trace_csv(std::span<const TraceRow> rows, std::ostream& out) {
    out << "level,clusters,time_s,objective,kkt_violation,sv_count\n";
    for (const TraceRow& r : rows)
        out << r.level << ',' << r.clusters << ',' << fmt17(r.time_s) << ',' << fmt17(r.objective)
            << ',' << fmt17(r.kkt_violation) << ',' << r.sv_count << '\n';
}

}  // namespace dcsvm
