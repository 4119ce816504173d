#include "dcsvm/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dcsvm {

void KernelSpec::validate() const {
    switch (family) {
        case Family::rbf:
            if (!(gamma > 0.0)) throw std::invalid_argument("rbf kernel requires gamma > 0");
            break;
        case Family::polynomial:
            if (!(gamma > 0.0)) throw std::invalid_argument("polynomial kernel requires gamma > 0");
            if (degree < 1) throw std::invalid_argument("polynomial kernel requires degree >= 1");
            break;
        case Family::linear:
            break;
    }
}

std::string family_name(KernelSpec::Family f) {
    switch (f) {
        case KernelSpec::Family::rbf: return "rbf";
        case KernelSpec::Family::polynomial: return "polynomial";
        case KernelSpec::Family::linear: return "linear";
    }
    return "rbf";
}

KernelSpec::Family family_from_name(const std::string& name) {
    if (name == "rbf") return KernelSpec::Family::rbf;
    if (name == "polynomial" || name == "poly") return KernelSpec::Family::polynomial;
    if (name == "linear") return KernelSpec::Family::linear;
    throw std::invalid_argument("unknown kernel family: " + name);
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    const auto& ea = a.entries;
    const auto& eb = b.entries;
    while (i < ea.size() && j < eb.size()) {
        if (ea[i].index == eb[j].index) {
            sum += ea[i].value * eb[j].value;
            ++i;
            ++j;
        } else if (ea[i].index < eb[j].index) {
            ++i;
        } else {
            ++j;
        }
    }
    return sum;
}

namespace {

double powi(double base, int times) {
    double tmp = base, ret = 1.0;
    for (int t = times; t > 0; t /= 2) {
        if (t % 2 == 1) ret *= tmp;
        tmp = tmp * tmp;
    }
    return ret;
}

double eval_from_parts(const KernelSpec& spec, double norm_x, double norm_z, double dot) {
    switch (spec.family) {
        case KernelSpec::Family::rbf: {
            double d2 = norm_x + norm_z - 2.0 * dot;
            if (d2 < 0.0) d2 = 0.0;  // roundoff for near-identical points
            return std::exp(-spec.gamma * d2);
        }
        case KernelSpec::Family::polynomial:
            return powi(spec.coef0 + spec.gamma * dot, spec.degree);
        case KernelSpec::Family::linear:
            return dot;
    }
    return 0.0;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z) {
    const double dot = sparse_dot(x, z);
    if (spec.family == KernelSpec::Family::rbf)
        return eval_from_parts(spec, sparse_dot(x, x), sparse_dot(z, z), dot);
    return eval_from_parts(spec, 0.0, 0.0, dot);
}

double q_entry(const SparseDataset& data, const KernelSpec& spec, int i, int j) {
    if (i < 0 || i >= data.n() || j < 0 || j >= data.n())
        throw std::out_of_range("q_entry: sample index out of range");
    const auto si = static_cast<std::size_t>(i);
    const auto sj = static_cast<std::size_t>(j);
    return data.labels[si] * data.labels[sj] * kernel_eval(spec, data.samples[si], data.samples[sj]);
}

const std::vector<double>* KernelCache::find(int row) {
    auto it = index_.find(row);
    if (it == index_.end()) {
        ++misses_;
        return nullptr;
    }
    ++hits_;
    lru_.splice(lru_.begin(), lru_, it->second);
    return &it->second->second;
}

const std::vector<double>* KernelCache::insert(int row, std::vector<double> values) {
    const std::size_t bytes = values.size() * sizeof(double);
    if (bytes > capacity_) return nullptr;  // never store rows that cannot fit
    auto it = index_.find(row);
    if (it != index_.end()) {
        resident_ -= it->second->second.size() * sizeof(double);
        lru_.erase(it->second);
        index_.erase(it);
    }
    while (resident_ + bytes > capacity_ && !lru_.empty()) {
        auto& victim = lru_.back();
        resident_ -= victim.second.size() * sizeof(double);
        index_.erase(victim.first);
        lru_.pop_back();
    }
    lru_.emplace_front(row, std::move(values));
    index_[row] = lru_.begin();
    resident_ += bytes;
    return &lru_.front().second;
}

void KernelCache::clear() {
    lru_.clear();
    index_.clear();
    resident_ = 0;
}

KernelView::KernelView(const SparseDataset& data, const KernelSpec& spec, std::vector<int> indices,
                       std::size_t cache_bytes)
    : data_(&data), spec_(spec), indices_(std::move(indices)), cache_(cache_bytes) {
    spec_.validate();
    const std::size_t nv = indices_.size();
    norms_.resize(nv);
    diag_.resize(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        const SparseVector& x = data_->samples[static_cast<std::size_t>(indices_[i])];
        norms_[i] = sparse_dot(x, x);
        diag_[i] = eval_from_parts(spec_, norms_[i], norms_[i], norms_[i]);
    }
}

double KernelView::at(int i, int j) const {
    const SparseVector& x = sample(i);
    const SparseVector& z = sample(j);
    return eval_from_parts(spec_, norms_[static_cast<std::size_t>(i)],
                           norms_[static_cast<std::size_t>(j)], sparse_dot(x, z));
}

std::vector<double> KernelView::compute_row(int i) const {
    const int nv = size();
    std::vector<double> row(static_cast<std::size_t>(nv));
    const SparseVector& x = sample(i);
    const double ni = norms_[static_cast<std::size_t>(i)];
    for (int j = 0; j < nv; ++j) {
        row[static_cast<std::size_t>(j)] =
            eval_from_parts(spec_, ni, norms_[static_cast<std::size_t>(j)], sparse_dot(x, sample(j)));
    }
    return row;
}

std::span<const double> KernelView::row(int i) {
    if (const std::vector<double>* hit = cache_.find(i)) return {hit->data(), hit->size()};
    std::vector<double> fresh = compute_row(i);
    if (fresh.size() * sizeof(double) <= cache_.capacity_bytes()) {
        const std::vector<double>* stored = cache_.insert(i, std::move(fresh));
        return {stored->data(), stored->size()};
    }
    scratch_ = std::move(fresh);
    return {scratch_.data(), scratch_.size()};
}

void KernelView::row_subset(int i, std::span<const int> active, std::span<double> out) {
    const std::span<const double> full = row(i);
    for (std::size_t p = 0; p < active.size(); ++p)
        out[p] = full[static_cast<std::size_t>(active[p])];
}

}  // namespace dcsvm
