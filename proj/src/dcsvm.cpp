#include "dcsvm/dcsvm.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dcsvm/linalg.hpp"
#include "dcsvm/parallel.hpp"
#include "dcsvm/rng.hpp"

namespace dcsvm {

void DCConfig::validate(int n) const {
    if (k < 2) throw std::invalid_argument("dcsvm: k must be >= 2");
    if (l_max < 0) throw std::invalid_argument("dcsvm: l_max must be >= 0");
    if (m < 1) throw std::invalid_argument("dcsvm: m must be >= 1");
    if (workers < 1) throw std::invalid_argument("dcsvm: workers must be >= 1");
    solver.validate();
    long long clusters = 1;
    for (int l = 0; l < l_max; ++l) {
        clusters *= k;
        if (clusters > n)
            throw std::invalid_argument("dcsvm: k^l_max exceeds the dataset size");
    }
    if (early_stop_level && (*early_stop_level < 1 || *early_stop_level > l_max))
        throw std::invalid_argument("dcsvm: early_stop_level must be in [1, l_max]");
}

int default_early_level(int k, int l_max) {
    int best = 1;
    long long best_diff = std::numeric_limits<long long>::max();
    long long kl = 1;
    for (int l = 1; l <= l_max; ++l) {
        kl *= k;
        const long long diff = kl > 64 ? kl - 64 : 64 - kl;
        if (diff < best_diff) {
            best_diff = diff;
            best = l;
        }
        if (kl > 64) break;  // diffs only grow past this point
    }
    return best;
}

namespace {

std::vector<int> support_of(std::span<const double> alpha) {
    std::vector<int> s;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 0.0) s.push_back(static_cast<int>(i));
    return s;
}

long long ipow(int base, int exp) {
    long long v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

// Mean cross-kernel between two center definitions.
double center_cross(const SparseDataset& data, const KernelSpec& spec, const KernelCenters& centers,
                    const std::vector<int>& a, const std::vector<int>& b) {
    double s = 0.0;
    for (int pa : a) {
        const SparseVector& xa = data.samples[static_cast<std::size_t>(centers.sample[pa])];
        for (int pb : b)
            s += kernel_eval(spec, xa, data.samples[static_cast<std::size_t>(centers.sample[pb])]);
    }
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Clusters with fewer than two data points are folded into their nearest
// neighbor cluster so trivial QPs do not distort warm starts.
void merge_small_clusters(const SparseDataset& data, const KernelSpec& spec, Partition& part,
                          KernelCenters& centers) {
    while (part.k > 1) {
        int victim = -1;
        for (int c = 0; c < part.k; ++c) {
            if (part.members[static_cast<std::size_t>(c)].size() < 2) {
                victim = c;
                break;
            }
        }
        if (victim < 0) return;

        const auto& vmem = centers.center_members[static_cast<std::size_t>(victim)];
        int target = -1;
        double best_d = 0.0;
        for (int c = 0; c < part.k; ++c) {
            if (c == victim) continue;
            const auto& cmem = centers.center_members[static_cast<std::size_t>(c)];
            const double d = centers.self_term[static_cast<std::size_t>(victim)] +
                             centers.self_term[static_cast<std::size_t>(c)] -
                             2.0 * center_cross(data, spec, centers, vmem, cmem);
            if (target < 0 || d < best_d) {
                best_d = d;
                target = c;
            }
        }

        for (int i : part.members[static_cast<std::size_t>(victim)])
            part.assign[static_cast<std::size_t>(i)] = target;

        std::vector<int> merged = centers.center_members[static_cast<std::size_t>(target)];
        merged.insert(merged.end(), vmem.begin(), vmem.end());
        std::sort(merged.begin(), merged.end());
        double self = 0.0;
        for (int pa : merged) {
            const SparseVector& xa = data.samples[static_cast<std::size_t>(centers.sample[pa])];
            for (int pb : merged)
                self += kernel_eval(spec, xa,
                                    data.samples[static_cast<std::size_t>(centers.sample[pb])]);
        }
        self /= static_cast<double>(merged.size()) * static_cast<double>(merged.size());
        centers.center_members[static_cast<std::size_t>(target)] = std::move(merged);
        centers.self_term[static_cast<std::size_t>(target)] = self;

        centers.center_members.erase(centers.center_members.begin() + victim);
        centers.self_term.erase(centers.self_term.begin() + victim);
        for (int& a : part.assign)
            if (a > victim) --a;
        part.k -= 1;
        part.rebuild_members();
    }
}

#ifndef NDEBUG
// The concatenated solution must satisfy the optimality condition of the
// masked-kernel problem within the solver tolerance.
void assert_masked_kkt(const SparseDataset& data, const KernelSpec& spec, const Partition& part,
                       std::span<const double> alpha, double C, double tol) {
    for (int c = 0; c < part.k; ++c) {
        const auto& mem = part.members[static_cast<std::size_t>(c)];
        for (int i : mem) {
            double g = -1.0;
            for (int j : mem) {
                const double aj = alpha[static_cast<std::size_t>(j)];
                if (aj > 0.0) g += aj * q_entry(data, spec, i, j);
            }
            assert(coordinate_violation(g, alpha[static_cast<std::size_t>(i)], C) <=
                   tol + 1e-12);
        }
    }
}
#endif

}  // namespace

std::vector<double> concat_solutions(const Partition& part,
                                     const std::vector<std::vector<double>>& cluster_alpha, int n) {
    if (static_cast<int>(cluster_alpha.size()) != part.k)
        throw std::runtime_error("concat_solutions: missing cluster solutions");
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<char> covered(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < part.k; ++c) {
        const auto& mem = part.members[static_cast<std::size_t>(c)];
        const auto& a = cluster_alpha[static_cast<std::size_t>(c)];
        if (a.size() != mem.size())
            throw std::runtime_error("concat_solutions: cluster solution size mismatch");
        for (std::size_t p = 0; p < mem.size(); ++p) {
            alpha[static_cast<std::size_t>(mem[p])] = a[p];
            covered[static_cast<std::size_t>(mem[p])] = 1;
        }
    }
    for (int i = 0; i < n; ++i)
        if (!covered[static_cast<std::size_t>(i)])
            throw std::runtime_error("concat_solutions: clusters do not cover all samples");
    return alpha;
}

double full_objective(const SparseDataset& data, const KernelSpec& spec,
                      std::span<const double> alpha) {
    const std::vector<int> support = support_of(alpha);
    long double linear = 0.0L;
    for (double a : alpha) linear += a;
    long double quad = 0.0L;
    for (int i : support) {
        const double ai = alpha[static_cast<std::size_t>(i)];
        for (int j : support)
            quad += static_cast<long double>(ai * alpha[static_cast<std::size_t>(j)]) *
                    q_entry(data, spec, i, j);
    }
    return static_cast<double>(0.5L * quad - linear);
}

double full_kkt_violation(const SparseDataset& data, const KernelSpec& spec,
                          std::span<const double> alpha, double C) {
    const int n = data.n();
    const std::vector<int> support = support_of(alpha);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = -1.0;
        for (int j : support) g += alpha[static_cast<std::size_t>(j)] * q_entry(data, spec, i, j);
        worst = std::max(worst, coordinate_violation(g, alpha[static_cast<std::size_t>(i)], C));
    }
    return worst;
}

std::vector<int> screen_non_sv(const SparseDataset& data, const Partition& part,
                               std::span<const double> alpha_bar, const KernelSpec& spec, double C,
                               int guard) {
    const int n = data.n();
    if (n > guard)
        throw GuardError("screen_non_sv: dataset exceeds the exact-eigenvalue size guard");
    if (static_cast<int>(alpha_bar.size()) != n)
        throw std::invalid_argument("screen_non_sv: alpha length mismatch");
    if (!(C > 0.0)) throw std::invalid_argument("screen_non_sv: C must be > 0");
    spec.validate();

    const std::vector<double> kmat = dense_kernel_matrix(data, spec);
    const double sigma_n = std::max(0.0, smallest_eigenvalue(kmat, n));
    double k_max = 0.0;
    for (int i = 0; i < n; ++i)
        k_max = std::max(k_max, kmat[static_cast<std::size_t>(i) * n + i]);

    double d_pi = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (part.assign[static_cast<std::size_t>(i)] != part.assign[static_cast<std::size_t>(j)])
                d_pi += std::fabs(kmat[static_cast<std::size_t>(i) * n + j]);
    d_pi *= 2.0;

    double threshold;
    if (d_pi == 0.0) {
        threshold = 0.0;
    } else if (sigma_n > 0.0) {
        threshold = C * d_pi + C * std::sqrt(static_cast<double>(n)) * k_max * std::sqrt(d_pi / sigma_n);
    } else {
        threshold = std::numeric_limits<double>::infinity();
    }

    // Masked-kernel gradient restricted to each cluster's own block.
    std::vector<double> grad(static_cast<std::size_t>(n), -1.0);
    for (int c = 0; c < part.k; ++c) {
        const auto& mem = part.members[static_cast<std::size_t>(c)];
        for (int i : mem) {
            double g = -1.0;
            for (int j : mem) {
                const double aj = alpha_bar[static_cast<std::size_t>(j)];
                if (aj <= 0.0) continue;
                g += data.labels[static_cast<std::size_t>(i)] * data.labels[static_cast<std::size_t>(j)] *
                     aj * kmat[static_cast<std::size_t>(i) * n + j];
            }
            grad[static_cast<std::size_t>(i)] = g;
        }
    }

    std::vector<int> screened;
    for (int i = 0; i < n; ++i)
        if (alpha_bar[static_cast<std::size_t>(i)] == 0.0 && grad[static_cast<std::size_t>(i)] > threshold)
            screened.push_back(i);
    return screened;
}

DCModel train(const SparseDataset& data, const KernelSpec& spec, const DCConfig& config,
              const TrainHooks& hooks) {
    spec.validate();
    const int n = data.n();
    if (n < 1) throw std::invalid_argument("train: empty dataset");
    config.validate(n);
    bool has_pos = false, has_neg = false;
    for (int y : data.labels) (y > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train: both classes must be present");

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    DCModel out;
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);

    const auto emit_trace = [&](int level, int clusters, const double* obj, const double* kkt) {
        TraceRow row;
        row.level = level;
        row.clusters = clusters;
        row.time_s = elapsed();
        row.sv_count = static_cast<int>(support_of(alpha).size());
        if (obj) {
            row.objective = *obj;
        } else if (hooks.trace_objective) {
            row.objective = full_objective(data, spec, alpha);
        }
        if (kkt) {
            row.kkt_violation = *kkt;
        } else if (hooks.trace_kkt) {
            row.kkt_violation = full_kkt_violation(data, spec, alpha, config.solver.C);
        }
        out.trace.push_back(row);
        if (hooks.on_level) hooks.on_level(row);
    };

    // Wraps the caller's observer so it always sees a full-length alpha.
    std::vector<double> observer_scratch;
    const auto adapt_observer = [&](const std::vector<int>& view_idx) -> SolveObserver {
        if (!hooks.final_observer.fn || hooks.final_observer.stride <= 0) return {};
        observer_scratch = alpha;
        return SolveObserver{
            hooks.final_observer.stride,
            [&, view_idx](long it, std::span<const double> a) {
                for (std::size_t p = 0; p < view_idx.size(); ++p)
                    observer_scratch[static_cast<std::size_t>(view_idx[p])] = a[p];
                hooks.final_observer.fn(it, observer_scratch);
            }};
    };

    bool all_converged = true;
    std::optional<Partition> stop_partition;
    std::optional<KernelCenters> stop_centers;

    for (int l = config.l_max; l >= 1; --l) {
        const int kl = static_cast<int>(ipow(config.k, l));

        std::vector<int> pool;
        if (l == config.l_max) {
            pool = all_indices(n);
        } else {
            pool = support_of(alpha);
            if (static_cast<int>(pool.size()) < kl) pool = all_indices(n);
        }
        const int sample_n =
            std::min(static_cast<int>(pool.size()), std::max(config.m, kl));
        std::mt19937_64 rng(mix_seed(config.seed, 0x1e00u + static_cast<unsigned>(l)));
        std::vector<int> sample = sample_without_replacement(pool, sample_n, rng);
        std::sort(sample.begin(), sample.end());

        KernelCenters centers =
            kernel_kmeans(data, sample, spec, kl, 100,
                          mix_seed(config.seed, 0x2e00u + static_cast<unsigned>(l)));
        Partition part = assign_all(data, centers, spec, config.workers);
        merge_small_clusters(data, spec, part, centers);

        std::vector<std::vector<double>> cluster_alpha(static_cast<std::size_t>(part.k));
        std::vector<ClusterSummary> summaries(static_cast<std::size_t>(part.k));
        std::vector<char> cluster_converged(static_cast<std::size_t>(part.k), 0);
        parallel_for(0, part.k, config.workers, [&](int c) {
            const std::vector<int>& mem = part.members[static_cast<std::size_t>(c)];
            KernelView view(data, spec, mem, config.solver.cache_bytes);
            std::vector<double> init(mem.size());
            for (std::size_t p = 0; p < mem.size(); ++p)
                init[p] = alpha[static_cast<std::size_t>(mem[p])];
            DualSolution sol = solve_dual(view, config.solver, init);
            summaries[static_cast<std::size_t>(c)] =
                ClusterSummary{c,
                               static_cast<int>(mem.size()),
                               sol.objective,
                               sol.kkt_violation,
                               sol.iterations,
                               static_cast<int>(sol.support.size())};
            cluster_converged[static_cast<std::size_t>(c)] = sol.converged ? 1 : 0;
            cluster_alpha[static_cast<std::size_t>(c)] = std::move(sol.alpha);
        });
        for (char conv : cluster_converged)
            if (!conv) all_converged = false;

        alpha = concat_solutions(part, cluster_alpha, n);
#ifndef NDEBUG
        if (all_converged)
            assert_masked_kkt(data, spec, part, alpha, config.solver.C, config.solver.tol);
#endif

        if (hooks.keep_levels && hooks.levels) {
            LevelState state;
            state.level = l;
            state.partition = part;
            state.centers = centers;
            state.alpha_bar = alpha;
            state.support = support_of(alpha);
            state.cluster_solutions = summaries;
            hooks.levels->push_back(std::move(state));
        }
        emit_trace(l, part.k, nullptr, nullptr);

        if (config.early_stop_level && *config.early_stop_level == l) {
            stop_partition = std::move(part);
            stop_centers = std::move(centers);
            break;
        }
    }

    const std::vector<int> support = support_of(alpha);

    if (stop_partition) {
        out.early = true;
        out.stop_level = *config.early_stop_level;
        out.alpha = alpha;
        out.support = support;
        out.objective = out.trace.back().objective;
        out.kkt_violation = out.trace.back().kkt_violation;
        out.converged = all_converged;

        Model& m = out.model;
        m.spec = spec;
        m.C = config.solver.C;
        EarlyBlock eb;
        eb.center_members = stop_centers->center_members;
        eb.self_term = stop_centers->self_term;
        eb.sample_x.reserve(stop_centers->sample.size());
        for (int r : stop_centers->sample)
            eb.sample_x.push_back(data.samples[static_cast<std::size_t>(r)]);
        eb.cluster_sv.resize(static_cast<std::size_t>(stop_partition->k));
        for (std::size_t s = 0; s < support.size(); ++s) {
            const int row = support[s];
            m.coeff.push_back(data.labels[static_cast<std::size_t>(row)] *
                              alpha[static_cast<std::size_t>(row)]);
            m.sv.push_back(data.samples[static_cast<std::size_t>(row)]);
            const int c = stop_partition->assign[static_cast<std::size_t>(row)];
            eb.cluster_sv[static_cast<std::size_t>(c)].push_back(static_cast<int>(s));
        }
        m.early = std::move(eb);
        return out;
    }

    long conquer_iterations = 0;

    // Refinement: re-solve on the nonzero coordinates before the full solve.
    if (config.l_max >= 1 && !support.empty()) {
        KernelView view(data, spec, support, config.solver.cache_bytes);
        std::vector<double> init(support.size());
        for (std::size_t p = 0; p < support.size(); ++p)
            init[p] = alpha[static_cast<std::size_t>(support[p])];
        DualSolution sol = solve_dual(view, config.solver, init, adapt_observer(support));
        conquer_iterations += sol.iterations;
        if (!sol.converged) all_converged = false;
        for (std::size_t p = 0; p < support.size(); ++p)
            alpha[static_cast<std::size_t>(support[p])] = sol.alpha[p];
    }

    // Full problem, warm-started from the refined solution.
    {
        const std::vector<int> everything = all_indices(n);
        KernelView view(data, spec, everything, config.solver.cache_bytes);
        DualSolution sol = solve_dual(view, config.solver, alpha, adapt_observer(everything));
        conquer_iterations += sol.iterations;
        alpha = std::move(sol.alpha);
        out.objective = sol.objective;
        out.kkt_violation = sol.kkt_violation;
        out.converged = sol.converged && all_converged;
        emit_trace(0, 1, &sol.objective, &sol.kkt_violation);
    }
    out.iterations = conquer_iterations;
    out.alpha = alpha;
    out.support = support_of(alpha);

    Model& m = out.model;
    m.spec = spec;
    m.C = config.solver.C;
    for (int row : out.support) {
        m.coeff.push_back(data.labels[static_cast<std::size_t>(row)] *
                          alpha[static_cast<std::size_t>(row)]);
        m.sv.push_back(data.samples[static_cast<std::size_t>(row)]);
    }
    return out;
}

}  // namespace dcsvm
