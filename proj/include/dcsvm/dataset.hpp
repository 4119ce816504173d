#pragma once

#include <numeric>
#include <vector>

namespace dcsvm {

struct SparseEntry {
    int index = 0;  // 1-based feature index
    double value = 0.0;
};

// Feature vector stored as strictly index-sorted nonzero entries.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const { return entries.empty(); }
    int max_index() const { return entries.empty() ? 0 : entries.back().index; }

    friend bool operator==(const SparseVector& a, const SparseVector& b) {
        if (a.entries.size() != b.entries.size()) return false;
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            if (a.entries[i].index != b.entries[i].index) return false;
            if (a.entries[i].value != b.entries[i].value) return false;
        }
        return true;
    }
};

// Labeled sample collection; labels are +1 / -1.
struct SparseDataset {
    std::vector<SparseVector> samples;
    std::vector<int> labels;
    int dim = 0;  // max feature index over all samples

    int n() const { return static_cast<int>(samples.size()); }

    friend bool operator==(const SparseDataset& a, const SparseDataset& b) {
        return a.samples == b.samples && a.labels == b.labels && a.dim == b.dim;
    }
};

inline std::vector<int> all_indices(int n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace dcsvm
