#pragma once

#include <vector>

#include "dcsvm/kernel.hpp"

namespace dcsvm {

// Dense kernel matrix K_ij = K(x_i, x_j), row-major n*n.
std::vector<double> dense_kernel_matrix(const SparseDataset& data, const KernelSpec& spec);

// Smallest eigenvalue of a dense symmetric matrix (row-major n*n).
double smallest_eigenvalue(const std::vector<double>& sym, int n);

}  // namespace dcsvm
