#pragma once

#include <cstddef>
#include <list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcsvm/dataset.hpp"

namespace dcsvm {

struct KernelSpec {
    enum class Family { rbf, polynomial, linear };

    Family family = Family::rbf;
    double gamma = 1.0;  // rbf, polynomial
    int degree = 3;      // polynomial
    double coef0 = 0.0;  // polynomial

    void validate() const;  // throws std::invalid_argument
};

std::string family_name(KernelSpec::Family f);
KernelSpec::Family family_from_name(const std::string& name);  // throws on unknown tag

// Dot product of two index-sorted sparse vectors. Accumulation order is the
// merged index order, so the result is identical regardless of argument order.
double sparse_dot(const SparseVector& a, const SparseVector& b);

double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z);

// Q_ij = y_i y_j K(x_i, x_j). Throws std::out_of_range on bad indices.
double q_entry(const SparseDataset& data, const KernelSpec& spec, int i, int j);

// LRU cache of kernel rows keyed by row index. Rows larger than the capacity
// are never stored.
class KernelCache {
public:
    explicit KernelCache(std::size_t capacity_bytes) : capacity_(capacity_bytes) {}

    const std::vector<double>* find(int row);
    // Returns the stored row, or nullptr when it does not fit the capacity.
    const std::vector<double>* insert(int row, std::vector<double> values);
    void clear();

    std::size_t resident_bytes() const { return resident_; }
    std::size_t capacity_bytes() const { return capacity_; }
    long hits() const { return hits_; }
    long misses() const { return misses_; }

private:
    using Entry = std::pair<int, std::vector<double>>;
    std::size_t capacity_ = 0;
    std::size_t resident_ = 0;
    long hits_ = 0;
    long misses_ = 0;
    std::list<Entry> lru_;  // front = most recent
    std::unordered_map<int, std::list<Entry>::iterator> index_;
};

// Kernel evaluations over a fixed subset of dataset rows, with precomputed
// squared norms and a private row cache. Row i of the view corresponds to
// dataset row indices()[i]; all row/column arguments below are view-local.
class KernelView {
public:
    KernelView(const SparseDataset& data, const KernelSpec& spec, std::vector<int> indices,
               std::size_t cache_bytes);

    int size() const { return static_cast<int>(indices_.size()); }
    const std::vector<int>& indices() const { return indices_; }
    int label(int i) const { return data_->labels[static_cast<std::size_t>(indices_[i])]; }
    const SparseVector& sample(int i) const {
        return data_->samples[static_cast<std::size_t>(indices_[i])];
    }

    double diag(int i) const { return diag_[static_cast<std::size_t>(i)]; }
    double at(int i, int j) const;                      // K(x_i, x_j), direct
    double q(int i, int j) const { return label(i) * label(j) * at(i, j); }

    // Full kernel row over the view; served from the cache when resident.
    // The returned span is invalidated by the next row() call.
    std::span<const double> row(int i);

    // K(x_i, x_j) for j in active; identical to elementwise recomputation.
    void row_subset(int i, std::span<const int> active, std::span<double> out);

    long cache_hits() const { return cache_.hits(); }
    long cache_misses() const { return cache_.misses(); }

private:
    std::vector<double> compute_row(int i) const;

    const SparseDataset* data_;
    KernelSpec spec_;
    std::vector<int> indices_;
    std::vector<double> norms_;  // ||x_i||^2 per view row (rbf)
    std::vector<double> diag_;   // K(x_i, x_i) per view row
    KernelCache cache_;
    std::vector<double> scratch_;
};

}  // namespace dcsvm
