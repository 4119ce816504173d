#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dcsvm/kernel.hpp"

namespace dcsvm {

// Raised when an O(n^2)-cost operation is asked to run above its size guard.
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Partition {
    std::vector<int> assign;                // cluster id per sample
    int k = 0;
    std::vector<std::vector<int>> members;  // per cluster, ascending sample ids

    int n() const { return static_cast<int>(assign.size()); }
    void rebuild_members();  // from assign and k
};

// Kernel-space cluster centers defined by subsets of m sampled points.
struct KernelCenters {
    std::vector<int> sample;                       // dataset row ids of the sampled points
    std::vector<std::vector<int>> center_members;  // per cluster, ascending positions into sample
    std::vector<double> self_term;                 // (1/|V|^2) sum_{j,j'} K(x_j, x_j')

    int k() const { return static_cast<int>(center_members.size()); }
    int sample_size() const { return static_cast<int>(sample.size()); }
};

// ||phi(x) - m_c||^2 = K(x,x) - (2/|V_c|) sum_j K(x, x_j) + self_term_c.
// One expression shared by the kmeans loop, assign_all and early prediction
// so that assignments agree bitwise wherever the kernel values agree.
inline double center_distance_terms(double kxx, double cross, std::size_t size, double self) {
    const double inv = 1.0 / static_cast<double>(size);
    return kxx - 2.0 * inv * cross + self;
}

// kvals[j] = K(x, sample_j).
double center_distance(const KernelCenters& centers, int c, double kxx,
                       std::span<const double> kvals);
int nearest_center(const KernelCenters& centers, double kxx, std::span<const double> kvals);

// Lloyd-style kernel kmeans over the sampled points. Initialization is a
// seeded D^2-weighted draw of k distinct samples; clusters falling below
// max(1, m/(10k)) members are reseeded from the farthest point. Optionally
// records the clustering objective after every iteration.
KernelCenters kernel_kmeans(const SparseDataset& data, std::span<const int> sample_indices,
                            const KernelSpec& spec, int k, int max_iter = 100,
                            std::uint64_t seed = 1,
                            std::vector<double>* objective_history = nullptr);

// Nearest-center assignment of every dataset point; ties go to the lowest
// cluster id. Parallel over points when workers > 1.
Partition assign_all(const SparseDataset& data, const KernelCenters& centers,
                     const KernelSpec& spec, int workers = 1);

// D(pi): total |K(x_i, x_j)| over ordered pairs in different clusters.
// O(n^2); refuses above the guard.
double off_diag_mass(const SparseDataset& data, const Partition& part, const KernelSpec& spec,
                     int guard = 20000);

// Same sum restricted to pairs inside `subset`.
double restricted_mass(const SparseDataset& data, const Partition& part, const KernelSpec& spec,
                       std::span<const int> subset, int guard = 20000);

}  // namespace dcsvm
