#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dcsvm/dcsvm.hpp"

namespace dcsvm {

// A report broke one of its hard inequalities (gap <= bound etc.).
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundReport {
    int k = 0;
    double d_pi = 0.0;
    double bound = 0.0;          // C^2 D(pi) / 2
    double gap = 0.0;            // f(alpha_bar) - f(alpha_star)
    double refined_bound = 0.0;  // C^2 D_{S* u S_bar}(pi) / 2
    double random_gap = 0.0;     // gap under a uniform random partition
};

struct SVReport {
    int level = 0;
    int clusters = 0;
    double precision = 0.0;
    double recall = 0.0;
};

struct TracePoint {
    double time_s = 0.0;
    double rel_error = 0.0;
};

struct DiagnosticsConfig {
    int m = 1000;                      // kmeans sample size
    int guard = 10000;                 // refuse O(n^2) work above this
    double reference_tol = 1e-8;       // direct-solve tolerance for the reference alpha
    double solve_tol = 1e-10;          // subproblem tolerance inside bound sweeps
    double sv_threshold_scale = 1e-8;  // alpha > scale*C counts as a support vector
    std::size_t cache_bytes = 100ull << 20;
    long observe_stride = 0;           // trace sampling inside the final solve; 0 = auto
};

// For each k: kernel-kmeans partition, independent subproblem solves, and the
// partition bound quantities, plus a uniform-random-partition baseline.
// Hard inequalities are enforced on every report.
std::vector<BoundReport> bound_sweep(const SparseDataset& data, const KernelSpec& spec, double C,
                                     std::span<const int> k_list, std::uint64_t seed,
                                     const DiagnosticsConfig& cfg = {});

// Precision/recall of each level's support set against a tight direct solve;
// one row per divide level plus a final row for the full solve.
std::vector<SVReport> sv_identification(const SparseDataset& data, const KernelSpec& spec, double C,
                                        const DCConfig& dc_config,
                                        const DiagnosticsConfig& cfg = {});

// (wall_time, |f - f_ref| / |f_ref|) sampled at level boundaries and
// periodically inside the conquer solves.
std::vector<TracePoint> relative_error_trace(const SparseDataset& data, const KernelSpec& spec,
                                             double C, const DCConfig& dc_config,
                                             const DiagnosticsConfig& cfg = {});

void bound_reports_csv(std::span<const BoundReport> reports, std::ostream& out);
void sv_reports_csv(std::span<const SVReport> reports, std::ostream& out);
void trace_points_csv(std::span<const TracePoint> points, std::ostream& out);
void train_trace_csv(std::span<const TraceRow> rows, std::ostream& out);

}  // namespace dcsvm
