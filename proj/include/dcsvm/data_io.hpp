#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcsvm/dataset.hpp"
#include "dcsvm/model.hpp"

namespace dcsvm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// LIBSVM sparse text format: one "label idx:val idx:val ..." line per sample.
// Labels must be +1/-1; indices are 1-based and strictly increasing.
SparseDataset parse_libsvm(std::istream& in);
SparseDataset load_libsvm_file(const std::string& path);

void format_libsvm(const SparseDataset& data, std::ostream& out);

// Per-dimension affine map (v - min) / (max - min) fitted on a training set;
// absent entries count as zeros. Constant dimensions map to 0.
struct ScalingParams {
    std::vector<double> min;  // indexed by feature - 1
    std::vector<double> max;
};

std::pair<SparseDataset, ScalingParams> scale_features(const SparseDataset& data);
SparseDataset apply_scaling(const SparseDataset& data, const ScalingParams& params);

// Disjoint row split of sizes (ceil(fraction*n), rest), deterministic in seed.
std::pair<SparseDataset, SparseDataset> split(const SparseDataset& data, double fraction,
                                              std::uint64_t seed);

// Versioned line-oriented model text format; first line "dcsvm-model v1".
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

void write_model(const Model& model, std::ostream& out);
Model read_model(std::istream& in);

}  // namespace dcsvm
