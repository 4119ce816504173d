#include "dcsvm/linalg.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace dcsvm {

std::vector<double> dense_kernel_matrix(const SparseDataset& data, const KernelSpec& spec) {
    const int n = data.n();
    std::vector<double> k(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double v = kernel_eval(spec, data.samples[static_cast<std::size_t>(i)],
                                         data.samples[static_cast<std::size_t>(j)]);
            k[static_cast<std::size_t>(i) * n + j] = v;
            k[static_cast<std::size_t>(j) * n + i] = v;
        }
    }
    return k;
}

double smallest_eigenvalue(const std::vector<double>& sym, int n) {
    if (n < 1 || sym.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw std::invalid_argument("smallest_eigenvalue: bad dimensions");
    Eigen::Map<const Eigen::MatrixXd> m(sym.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("smallest_eigenvalue: eigensolver failed");
    return es.eigenvalues().minCoeff();
}

}  // namespace dcsvm
