#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dcsvm/kernel.hpp"

namespace dcsvm {

struct SolverConfig {
    double C = 1.0;
    double tol = 1e-3;
    long max_iter = 10'000'000;  // coordinate updates
    bool shrinking = true;
    std::size_t cache_bytes = 100ull << 20;

    void validate() const;  // throws std::invalid_argument
};

struct DualSolution {
    std::vector<double> alpha;
    double objective = 0.0;
    double kkt_violation = 0.0;
    std::vector<int> support;  // view-local indices with alpha > 0
    long iterations = 0;
    bool converged = false;
};

// Per-coordinate breach of the box-QP optimality condition.
inline double coordinate_violation(double grad, double alpha, double C) {
    if (alpha <= 0.0) return grad < 0.0 ? -grad : 0.0;
    if (alpha >= C) return grad > 0.0 ? grad : 0.0;
    return grad < 0.0 ? -grad : grad;
}

double kkt_violation(std::span<const double> gradient, std::span<const double> alpha, double C);

// f(alpha) = 1/2 a'Qa - e'a, recomputed from kernel evaluations over the
// support; zero coordinates contribute only through the linear term.
double objective_value(const KernelView& view, std::span<const double> alpha);

// Called after every `stride` coordinate updates with the running iterate.
struct SolveObserver {
    long stride = 0;
    std::function<void(long iterations, std::span<const double> alpha)> fn;
};

// Greedy (max-violation) coordinate descent on
//   min 1/2 a'Qa - e'a   s.t.  0 <= a <= C,
// warm-started from alpha_init (empty means zero). Gradient is maintained
// incrementally from the touched kernel rows; bound variables with
// persistently satisfied optimality conditions are shrunk from the active
// set and every convergence claim re-activates and rechecks all variables.
DualSolution solve_dual(KernelView& view, const SolverConfig& config,
                        std::span<const double> alpha_init = {},
                        const SolveObserver& observer = {});

}  // namespace dcsvm
