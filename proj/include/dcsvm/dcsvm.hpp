#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dcsvm/clustering.hpp"
#include "dcsvm/model.hpp"
#include "dcsvm/solver.hpp"

namespace dcsvm {

struct DCConfig {
    int k = 4;                              // clusters multiply by k per level
    int l_max = 4;                          // deepest level; l_max+1 solve stages total
    int m = 1000;                           // kmeans sample size
    std::optional<int> early_stop_level;    // stop after this level's solves
    SolverConfig solver;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate(int n) const;  // throws std::invalid_argument
};

// Level picked by --early when no explicit level is given: cluster count
// closest to 64, clamped to [1, l_max].
int default_early_level(int k, int l_max);

struct ClusterSummary {
    int cluster = 0;
    int size = 0;
    double objective = 0.0;
    double kkt_violation = 0.0;
    long iterations = 0;
    int sv_count = 0;
};

struct LevelState {
    int level = 0;
    Partition partition;
    KernelCenters centers;
    std::vector<double> alpha_bar;       // length n
    std::vector<int> support;            // {i : alpha_bar_i > 0}
    std::vector<ClusterSummary> cluster_solutions;
};

struct TraceRow {
    int level = 0;
    int clusters = 0;
    double time_s = 0.0;
    double objective = 0.0;      // true-kernel objective of the current alpha
    double kkt_violation = 0.0;  // true-kernel violation of the current alpha
    int sv_count = 0;
};

struct DCModel {
    Model model;                     // prediction payload (and save_model input)
    bool early = false;
    int stop_level = 0;              // 0 = full solve
    std::vector<double> alpha;       // final dual vector over all training rows
    std::vector<int> support;        // global row ids, ascending
    double objective = 0.0;
    double kkt_violation = 0.0;
    long iterations = 0;             // coordinate updates in the final solve
    bool converged = false;
    std::vector<TraceRow> trace;
};

// Optional instrumentation for diagnostics and tests.
struct TrainHooks {
    bool keep_levels = false;
    std::vector<LevelState>* levels = nullptr;             // filled when keep_levels
    std::function<void(const TraceRow&)> on_level;         // after each level / stage
    SolveObserver final_observer;                          // inside refinement + final solve
    bool trace_objective = true;  // per-row true-kernel objective (costs O(|S|^2))
    bool trace_kkt = true;        // per-row true-kernel violation (costs O(n|S|))
};

// Multilevel divide (adaptive sampling + kernel kmeans + independent
// subproblem solves, warm-started from the level below), then refinement on
// the nonzero coordinates and a warm-started full solve. With
// early_stop_level set, stops after that level and packages the stopping
// partition for early prediction.
DCModel train(const SparseDataset& data, const KernelSpec& spec, const DCConfig& config,
              const TrainHooks& hooks = {});

// Concatenates per-cluster solutions into a full-length dual vector; the
// result is the exact optimum of the masked-kernel problem (checked against
// the solver tolerance in debug builds).
std::vector<double> concat_solutions(const Partition& part,
                                     const std::vector<std::vector<double>>& cluster_alpha, int n);

// Indices i with alpha_bar_i = 0 whose masked-kernel gradient exceeds the
// screening threshold; such points cannot be support vectors of the full
// problem. Needs the exact smallest kernel eigenvalue, so it is guarded.
std::vector<int> screen_non_sv(const SparseDataset& data, const Partition& part,
                               std::span<const double> alpha_bar, const KernelSpec& spec, double C,
                               int guard = 2000);

// True-kernel objective of a full-length alpha (support-only quadratic form).
double full_objective(const SparseDataset& data, const KernelSpec& spec,
                      std::span<const double> alpha);

// True-kernel KKT violation of a full-length alpha.
double full_kkt_violation(const SparseDataset& data, const KernelSpec& spec,
                          std::span<const double> alpha, double C);

}  // namespace dcsvm
