#pragma once

#include <optional>
#include <vector>

#include "dcsvm/dataset.hpp"
#include "dcsvm/kernel.hpp"

namespace dcsvm {

// Per-cluster prediction payload for early-stopped models: the kernel-space
// centers (defined by sampled points) plus each cluster's support vectors.
struct EarlyBlock {
    std::vector<SparseVector> sample_x;            // features of the sampled points
    std::vector<std::vector<int>> center_members;  // per cluster, positions into sample_x
    std::vector<double> self_term;                 // per cluster
    std::vector<std::vector<int>> cluster_sv;      // per cluster, positions into sv/coeff

    int k() const { return static_cast<int>(center_members.size()); }
};

// Everything needed to predict: kernel, C, and support vectors with their
// coefficients y_i * alpha_i. The early block is present only for models
// stopped before the full solve.
struct Model {
    KernelSpec spec;
    double C = 1.0;
    std::vector<double> coeff;     // y_i * alpha_i, |coeff_i| <= C
    std::vector<SparseVector> sv;  // aligned with coeff
    std::optional<EarlyBlock> early;

    int sv_count() const { return static_cast<int>(sv.size()); }
};

struct Prediction {
    int label = 1;
    double decision_value = 0.0;
};

Prediction predict_exact(const Model& model, const SparseVector& x);

// Assigns x to its nearest kernel-space center and evaluates only that
// cluster's support vectors. Requires the early block.
Prediction predict_early(const Model& model, const SparseVector& x);

}  // namespace dcsvm
