#include "dcsvm/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace dcsvm {

void SolverConfig::validate() const {
    if (!(C > 0.0)) throw std::invalid_argument("solver: C must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be > 0");
    if (max_iter < 0) throw std::invalid_argument("solver: max_iter must be >= 0");
}

double kkt_violation(std::span<const double> gradient, std::span<const double> alpha, double C) {
    double worst = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        worst = std::max(worst, coordinate_violation(gradient[i], alpha[i], C));
    return worst;
}

double objective_value(const KernelView& view, std::span<const double> alpha) {
    const int nv = view.size();
    std::vector<int> support;
    long double linear = 0.0L;
    for (int i = 0; i < nv; ++i) {
        const double a = alpha[static_cast<std::size_t>(i)];
        if (a > 0.0) support.push_back(i);
        linear += a;
    }
    long double quad = 0.0L;
    for (int i : support) {
        const double ai = alpha[static_cast<std::size_t>(i)];
        for (int j : support) {
            quad += static_cast<long double>(ai * alpha[static_cast<std::size_t>(j)]) * view.q(i, j);
        }
    }
    return static_cast<double>(0.5L * quad - linear);
}

namespace {

constexpr double kDiagFloor = 1e-12;

// g[j] for j in targets, rebuilt from scratch: sum_{p: a_p>0} a_p Q_pj - 1.
void rebuild_gradient(KernelView& view, std::span<const double> alpha,
                      std::span<const char> target, std::span<double> g) {
    const int nv = view.size();
    for (int j = 0; j < nv; ++j)
        if (target[static_cast<std::size_t>(j)]) g[static_cast<std::size_t>(j)] = -1.0;
    for (int p = 0; p < nv; ++p) {
        const double ap = alpha[static_cast<std::size_t>(p)];
        if (ap <= 0.0) continue;
        const std::span<const double> krow = view.row(p);
        const double scale = ap * view.label(p);
        for (int j = 0; j < nv; ++j) {
            if (!target[static_cast<std::size_t>(j)]) continue;
            g[static_cast<std::size_t>(j)] += scale * view.label(j) * krow[static_cast<std::size_t>(j)];
        }
    }
}

}  // namespace

DualSolution solve_dual(KernelView& view, const SolverConfig& config,
                        std::span<const double> alpha_init, const SolveObserver& observer) {
    config.validate();
    const int nv = view.size();
    if (nv == 0) throw std::invalid_argument("solve_dual: empty dataset view");
    const double C = config.C;

    std::vector<double> alpha(static_cast<std::size_t>(nv), 0.0);
    if (!alpha_init.empty()) {
        if (static_cast<int>(alpha_init.size()) != nv)
            throw std::invalid_argument("solve_dual: alpha_init length mismatch");
        for (int i = 0; i < nv; ++i) {
            const double a = alpha_init[static_cast<std::size_t>(i)];
            if (!(a >= 0.0) || !(a <= C))
                throw std::invalid_argument("solve_dual: alpha_init outside [0, C]");
            alpha[static_cast<std::size_t>(i)] = a;
        }
    }

    // Warm-start gradient: only columns with nonzero alpha contribute.
    std::vector<double> g(static_cast<std::size_t>(nv), -1.0);
    {
        std::vector<char> every(static_cast<std::size_t>(nv), 1);
        rebuild_gradient(view, alpha, every, g);
    }

    std::vector<char> active(static_cast<std::size_t>(nv), 1);
    std::vector<unsigned char> calm_passes(static_cast<std::size_t>(nv), 0);
    bool any_shrunk = false;
    long updates = 0;
    bool converged = false;
    const long pass_len = nv;
    long next_shrink_check = pass_len;

#ifndef NDEBUG
    long next_drift_check = 1000;
#endif

    for (;;) {
        int best = -1;
        double best_viol = 0.0;
        for (int i = 0; i < nv; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            const double v = coordinate_violation(g[static_cast<std::size_t>(i)],
                                                  alpha[static_cast<std::size_t>(i)], C);
            if (v > best_viol) {
                best_viol = v;
                best = i;
            }
        }

        if (best_viol <= config.tol) {
            if (any_shrunk) {
                // Re-activate everything and recheck before claiming convergence.
                std::vector<char> stale(static_cast<std::size_t>(nv), 0);
                for (int i = 0; i < nv; ++i)
                    if (!active[static_cast<std::size_t>(i)]) stale[static_cast<std::size_t>(i)] = 1;
                rebuild_gradient(view, alpha, stale, g);
                std::fill(active.begin(), active.end(), char{1});
                std::fill(calm_passes.begin(), calm_passes.end(), static_cast<unsigned char>(0));
                any_shrunk = false;
                continue;
            }
            converged = true;
            break;
        }

        if (updates >= config.max_iter) break;

        const int i = best;
        const double gi = g[static_cast<std::size_t>(i)];
        const double qii = view.diag(i);
        double anew;
        if (qii > kDiagFloor) {
            anew = std::clamp(alpha[static_cast<std::size_t>(i)] - gi / qii, 0.0, C);
        } else {
            // Objective is linear in this coordinate; jump to the better endpoint.
            anew = gi > 0.0 ? 0.0 : C;
        }
        const double delta = anew - alpha[static_cast<std::size_t>(i)];
        if (delta != 0.0) {
            alpha[static_cast<std::size_t>(i)] = anew;
            const std::span<const double> krow = view.row(i);
            const double scale = delta * view.label(i);
            for (int j = 0; j < nv; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                g[static_cast<std::size_t>(j)] +=
                    scale * view.label(j) * krow[static_cast<std::size_t>(j)];
            }
        }
        ++updates;

        if (observer.fn && observer.stride > 0 && updates % observer.stride == 0)
            observer.fn(updates, alpha);

#ifndef NDEBUG
        if (updates >= next_drift_check) {
            next_drift_check += 1000;
            std::vector<double> fresh(static_cast<std::size_t>(nv));
            rebuild_gradient(view, alpha, active, fresh);
            for (int j = 0; j < nv; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                assert(std::fabs(fresh[static_cast<std::size_t>(j)] -
                                 g[static_cast<std::size_t>(j)]) <= 1e-6);
            }
        }
#endif

        if (config.shrinking && updates >= next_shrink_check) {
            next_shrink_check += pass_len;
            for (int j = 0; j < nv; ++j) {
                const std::size_t sj = static_cast<std::size_t>(j);
                if (!active[sj]) continue;
                const double a = alpha[sj];
                const bool at_bound = (a <= 0.0 || a >= C);
                if (at_bound && coordinate_violation(g[sj], a, C) == 0.0) {
                    if (++calm_passes[sj] >= 2) {
                        active[sj] = 0;
                        any_shrunk = true;
                    }
                } else {
                    calm_passes[sj] = 0;
                }
            }
        }
    }

    DualSolution out;
    out.alpha = std::move(alpha);
    out.iterations = updates;
    out.converged = converged;
    if (!converged && any_shrunk) {
        // Report the true violation: bring stale gradients up to date first.
        std::vector<char> stale(static_cast<std::size_t>(nv), 0);
        for (int i = 0; i < nv; ++i)
            if (!active[static_cast<std::size_t>(i)]) stale[static_cast<std::size_t>(i)] = 1;
        rebuild_gradient(view, out.alpha, stale, g);
    }
    out.kkt_violation = kkt_violation(g, out.alpha, C);
    out.objective = objective_value(view, out.alpha);
    for (int i = 0; i < nv; ++i)
        if (out.alpha[static_cast<std::size_t>(i)] > 0.0) out.support.push_back(i);
    return out;
}

}  // namespace dcsvm
