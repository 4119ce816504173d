#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcsvm/dataset.hpp"
#include "dcsvm/kernel.hpp"

namespace testutil {

// 1-based dense point; exact zeros are dropped.
dcsvm::SparseVector dense_point(std::span<const double> values);

// Two Gaussian blobs along the first axis, labeled by blob.
dcsvm::SparseDataset two_gaussians(int n, int dim, double separation, double sigma,
                                   std::uint64_t seed);

// Interleaved half-moons in 2-D.
dcsvm::SparseDataset two_moons(int n, double noise, std::uint64_t seed);

// Random sparse vectors with a nonlinear median-split labeling.
dcsvm::SparseDataset random_sparse(int n, int dim, double density, std::uint64_t seed);

// 22-feature blob mixture in [0,1] with ~10% positives and light label noise.
dcsvm::SparseDataset ijcnn_like(int n, std::uint64_t seed);

// 4x4 grid of blobs labeled like a checkerboard, with light label noise.
dcsvm::SparseDataset checkerboard(int n, double sep, double sigma, double noise,
                                  std::uint64_t seed);

// Dense Q (row-major), Q_ij = y_i y_j K(x_i, x_j).
std::vector<double> dense_q(const dcsvm::SparseDataset& data, const dcsvm::KernelSpec& spec);

struct OracleResult {
    std::vector<double> alpha;
    double objective = 0.0;
    double kkt_violation = 0.0;
    long iterations = 0;
};

// Dense-matrix box-QP reference solver: accelerated projected gradient with
// an exact free-face polish, run to a target KKT violation. Shares nothing
// with the library's coordinate-descent/caching/shrinking machinery.
OracleResult pg_oracle(const std::vector<double>& q, int n, double C, double tol = 1e-12,
                       long max_iter = 400000);

double oracle_objective(const std::vector<double>& q, int n, std::span<const double> alpha);

// CLI process helpers.
struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout only
};
CliResult run_cli(const std::string& args);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace testutil
