#include "helpers.hpp"

#include <Eigen/Dense>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dcsvm/rng.hpp"
#include "test_paths.hpp"

namespace testutil {

using dcsvm::SparseDataset;
using dcsvm::SparseVector;

SparseVector dense_point(std::span<const double> values) {
    SparseVector x;
    for (std::size_t j = 0; j < values.size(); ++j)
        if (values[j] != 0.0) x.entries.push_back({static_cast<int>(j) + 1, values[j]});
    return x;
}

SparseDataset two_gaussians(int n, int dim, double separation, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(dcsvm::mix_seed(seed, 0x2a6du));
    SparseDataset data;
    data.dim = dim;
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (int i = 0; i < n; ++i) {
        const int blob = i % 2;
        for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] = sigma * dcsvm::draw_normal(rng);
        v[0] += (blob == 0 ? -0.5 : 0.5) * separation;
        data.samples.push_back(dense_point(v));
        data.labels.push_back(blob == 0 ? -1 : 1);
    }
    return data;
}

SparseDataset two_moons(int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(dcsvm::mix_seed(seed, 0x3a4fu));
    SparseDataset data;
    data.dim = 2;
    for (int i = 0; i < n; ++i) {
        const int moon = i % 2;
        const double t = 3.14159265358979323846 * dcsvm::draw_unit(rng);
        double vx, vy;
        if (moon == 0) {
            vx = std::cos(t);
            vy = std::sin(t);
        } else {
            vx = 1.0 - std::cos(t);
            vy = 0.5 - std::sin(t);
        }
        vx += noise * dcsvm::draw_normal(rng);
        vy += noise * dcsvm::draw_normal(rng);
        const double v[2] = {vx, vy};
        data.samples.push_back(dense_point(v));
        data.labels.push_back(moon == 0 ? 1 : -1);
    }
    return data;
}

SparseDataset random_sparse(int n, int dim, double density, std::uint64_t seed) {
    std::mt19937_64 rng(dcsvm::mix_seed(seed, 0x5c47u));
    SparseDataset data;
    data.dim = dim;
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SparseVector x;
        double score = 1e-9 * static_cast<double>(i);  // deterministic tie-break
        for (int j = 1; j <= dim; ++j) {
            if (dcsvm::draw_unit(rng) >= density) continue;
            const double v = dcsvm::draw_unit(rng);  // [0,1), like scaled data
            x.entries.push_back({j, v});
            score += std::sin(3.0 * v * static_cast<double>(1 + j % 4)) + 0.3 * v * v;
        }
        scores[static_cast<std::size_t>(i)] = score;
        data.samples.push_back(std::move(x));
    }
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[static_cast<std::size_t>(n / 2)];
    for (int i = 0; i < n; ++i)
        data.labels.push_back(scores[static_cast<std::size_t>(i)] > median ? 1 : -1);
    return data;
}

SparseDataset ijcnn_like(int n, std::uint64_t seed) {
    constexpr int kDim = 22;
    constexpr int kBlobs = 10;
    std::mt19937_64 rng(dcsvm::mix_seed(seed, 0x19c1u));

    std::vector<std::array<double, kDim>> centers(kBlobs);
    for (auto& c : centers)
        for (double& v : c) v = 0.15 + 0.7 * dcsvm::draw_unit(rng);
    // The rare positive blobs sit nearly on top of two negative blobs, which
    // yields the heavy class overlap (and large support set) of the original.
    for (int j = 0; j < kDim; ++j) {
        centers[0][static_cast<std::size_t>(j)] =
            std::clamp(centers[2][static_cast<std::size_t>(j)] + 0.05, 0.0, 1.0);
        centers[1][static_cast<std::size_t>(j)] =
            std::clamp(centers[3][static_cast<std::size_t>(j)] + 0.05, 0.0, 1.0);
    }

    SparseDataset data;
    data.dim = kDim;
    std::vector<double> v(kDim);
    for (int i = 0; i < n; ++i) {
        // Blobs 0 and 1 form the rare positive class (~10%).
        const double u = dcsvm::draw_unit(rng);
        int blob;
        if (u < 0.05) {
            blob = 0;
        } else if (u < 0.10) {
            blob = 1;
        } else {
            blob = 2 + static_cast<int>(dcsvm::draw_below(rng, kBlobs - 2));
        }
        for (int j = 0; j < kDim; ++j) {
            const double raw = centers[static_cast<std::size_t>(blob)][static_cast<std::size_t>(j)] +
                               0.14 * dcsvm::draw_normal(rng);
            v[static_cast<std::size_t>(j)] = std::clamp(raw, 0.0, 1.0);
        }
        int label = blob <= 1 ? 1 : -1;
        if (dcsvm::draw_unit(rng) < 0.10) label = -label;  // label noise -> bounded SVs
        data.samples.push_back(dense_point(v));
        data.labels.push_back(label);
    }
    return data;
}

SparseDataset checkerboard(int n, double sep, double sigma, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(dcsvm::mix_seed(seed, 0xcb0au));
    SparseDataset data;
    data.dim = 2;
    for (int i = 0; i < n; ++i) {
        const int bi = static_cast<int>(dcsvm::draw_below(rng, 4));
        const int bj = static_cast<int>(dcsvm::draw_below(rng, 4));
        const double v[2] = {bi * sep + sigma * dcsvm::draw_normal(rng),
                             bj * sep + sigma * dcsvm::draw_normal(rng)};
        int label = (bi + bj) % 2 == 0 ? 1 : -1;
        if (dcsvm::draw_unit(rng) < noise) label = -label;
        data.samples.push_back(dense_point(v));
        data.labels.push_back(label);
    }
    return data;
}

std::vector<double> dense_q(const SparseDataset& data, const dcsvm::KernelSpec& spec) {
    const int n = data.n();
    std::vector<double> q(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double v = data.labels[static_cast<std::size_t>(i)] *
                             data.labels[static_cast<std::size_t>(j)] *
                             kernel_eval(spec, data.samples[static_cast<std::size_t>(i)],
                                         data.samples[static_cast<std::size_t>(j)]);
            q[static_cast<std::size_t>(i) * n + j] = v;
            q[static_cast<std::size_t>(j) * n + i] = v;
        }
    }
    return q;
}

double oracle_objective(const std::vector<double>& q, int n, std::span<const double> alpha) {
    long double quad = 0.0L, linear = 0.0L;
    for (int i = 0; i < n; ++i) {
        const double ai = alpha[static_cast<std::size_t>(i)];
        linear += ai;
        if (ai == 0.0) continue;
        for (int j = 0; j < n; ++j)
            quad += static_cast<long double>(ai * alpha[static_cast<std::size_t>(j)]) *
                    q[static_cast<std::size_t>(i) * n + j];
    }
    return static_cast<double>(0.5L * quad - linear);
}

namespace {

double oracle_kkt(const std::vector<double>& g, const std::vector<double>& a, double C) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double v;
        if (a[i] <= 0.0)
            v = std::max(0.0, -g[i]);
        else if (a[i] >= C)
            v = std::max(0.0, g[i]);
        else
            v = std::fabs(g[i]);
        worst = std::max(worst, v);
    }
    return worst;
}

// Long-double accumulation keeps the evaluation noise of Q*a - e well below
// the violation target even for large C and kernel magnitudes.
void oracle_gradient(const std::vector<double>& q, int n, const std::vector<double>& a,
                     std::vector<double>& g) {
    for (int i = 0; i < n; ++i) {
        const double* row = q.data() + static_cast<std::size_t>(i) * n;
        long double acc = -1.0L;
        for (int j = 0; j < n; ++j) {
            const double aj = a[static_cast<std::size_t>(j)];
            if (aj != 0.0) acc += static_cast<long double>(aj) * row[j];
        }
        g[static_cast<std::size_t>(i)] = static_cast<double>(acc);
    }
}

// Exact minimization over the current free face with mixed-precision
// iterative refinement; returns false if nothing usable came out of it.
bool face_polish(const std::vector<double>& q, int n, double C, std::vector<double>& a) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
        const double ai = a[static_cast<std::size_t>(i)];
        if (ai > 0.0 && ai < C) free_idx.push_back(i);
    }
    if (free_idx.empty()) return false;
    const int nf = static_cast<int>(free_idx.size());

    Eigen::MatrixXd qff(nf, nf);
    std::vector<long double> rhs_ld(static_cast<std::size_t>(nf));
    Eigen::VectorXd rhs(nf);
    for (int r = 0; r < nf; ++r) {
        const int i = free_idx[static_cast<std::size_t>(r)];
        long double target = 1.0L;
        for (int j = 0; j < n; ++j) {
            const double aj = a[static_cast<std::size_t>(j)];
            if (aj >= C)  // bound block contribution
                target -= static_cast<long double>(aj) * q[static_cast<std::size_t>(i) * n + j];
        }
        rhs_ld[static_cast<std::size_t>(r)] = target;
        rhs(r) = static_cast<double>(target);
        for (int c = 0; c < nf; ++c)
            qff(r, c) = q[static_cast<std::size_t>(i) * n + free_idx[static_cast<std::size_t>(c)]];
    }
    // Minimum-norm solve handles singular faces.
    const auto cod = qff.completeOrthogonalDecomposition();
    Eigen::VectorXd sol = cod.solve(rhs);
    Eigen::VectorXd residual(nf);
    for (int round = 0; round < 3; ++round) {
        for (int r = 0; r < nf; ++r) {
            long double acc = rhs_ld[static_cast<std::size_t>(r)];
            for (int c = 0; c < nf; ++c)
                acc -= static_cast<long double>(qff(r, c)) * sol(c);
            residual(r) = static_cast<double>(acc);
        }
        sol += cod.solve(residual);
    }
    if (!sol.allFinite()) return false;

    std::vector<double> candidate = a;
    for (int r = 0; r < nf; ++r)
        candidate[static_cast<std::size_t>(free_idx[static_cast<std::size_t>(r)])] =
            std::clamp(sol(r), 0.0, C);
    if (oracle_objective(q, n, candidate) <= oracle_objective(q, n, a)) {
        a = std::move(candidate);
        return true;
    }
    return false;
}

}  // namespace

OracleResult pg_oracle(const std::vector<double>& q, int n, double C, double tol, long max_iter) {
    // Safe Lipschitz bound: infinity norm of Q.
    double lip = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::fabs(q[static_cast<std::size_t>(i) * n + j]);
        lip = std::max(lip, row);
    }
    if (lip <= 0.0) lip = 1.0;
    const double step = 1.0 / lip;

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    std::vector<double> y = x, x_prev = x;
    std::vector<double> g(static_cast<std::size_t>(n));
    double t_acc = 1.0;

    OracleResult out;
    long it = 0;
    long next_polish = 64;
    for (; it < max_iter; ++it) {
        oracle_gradient(q, n, y, g);
        for (int i = 0; i < n; ++i)
            x[static_cast<std::size_t>(i)] = std::clamp(
                y[static_cast<std::size_t>(i)] - step * g[static_cast<std::size_t>(i)], 0.0, C);

        // gradient-mapping adaptive restart
        double cross = 0.0;
        for (int i = 0; i < n; ++i)
            cross += (y[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) *
                     (x[static_cast<std::size_t>(i)] - x_prev[static_cast<std::size_t>(i)]);
        if (cross > 0.0) {
            t_acc = 1.0;
            y = x;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
            const double beta = (t_acc - 1.0) / t_next;
            for (int i = 0; i < n; ++i)
                y[static_cast<std::size_t>(i)] =
                    x[static_cast<std::size_t>(i)] +
                    beta * (x[static_cast<std::size_t>(i)] - x_prev[static_cast<std::size_t>(i)]);
            t_acc = t_next;
        }
        x_prev = x;

        if (it + 1 >= next_polish) {
            next_polish = std::min(2 * (it + 1), it + 1 + 4096);
            // active-set style rounds: polish, clip, refresh the face, repeat
            double kkt = 0.0;
            for (int round = 0; round < 8; ++round) {
                const bool moved = face_polish(q, n, C, x);
                oracle_gradient(q, n, x, g);
                kkt = oracle_kkt(g, x, C);
                if (kkt <= tol || !moved) break;
                // pull violating bound coordinates into the face
                bool changed = false;
                for (int i = 0; i < n; ++i) {
                    const double xi = x[static_cast<std::size_t>(i)];
                    const double gi = g[static_cast<std::size_t>(i)];
                    if ((xi <= 0.0 && gi < -tol) || (xi >= C && gi > tol)) {
                        x[static_cast<std::size_t>(i)] =
                            std::clamp(xi - step * gi, 0.0, C);
                        changed = true;
                    }
                }
                if (!changed) break;
            }
            if (kkt <= tol) {
                ++it;
                break;
            }
            y = x;
            x_prev = x;
            t_acc = 1.0;
        }
    }

    oracle_gradient(q, n, x, g);
    out.kkt_violation = oracle_kkt(g, x, C);
    out.objective = oracle_objective(q, n, x);
    out.alpha = std::move(x);
    out.iterations = it;
    return out;
}

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(kDcsvmBinary) + " " + args + " 2>/dev/null";
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testutil
