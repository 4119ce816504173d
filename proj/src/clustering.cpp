#include "dcsvm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcsvm/parallel.hpp"
#include "dcsvm/rng.hpp"

namespace dcsvm {

void Partition::rebuild_members() {
    members.assign(static_cast<std::size_t>(k), {});
    for (int i = 0; i < n(); ++i) members[static_cast<std::size_t>(assign[i])].push_back(i);
}

double center_distance(const KernelCenters& centers, int c, double kxx,
                       std::span<const double> kvals) {
    const std::vector<int>& mem = centers.center_members[static_cast<std::size_t>(c)];
    double cross = 0.0;
    for (int j : mem) cross += kvals[static_cast<std::size_t>(j)];
    return center_distance_terms(kxx, cross, mem.size(), centers.self_term[static_cast<std::size_t>(c)]);
}

int nearest_center(const KernelCenters& centers, double kxx, std::span<const double> kvals) {
    int best = 0;
    double best_d = center_distance(centers, 0, kxx, kvals);
    for (int c = 1; c < centers.k(); ++c) {
        const double d = center_distance(centers, c, kxx, kvals);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

double self_term_of(const std::vector<int>& mem, const std::vector<double>& kmat, int m) {
    if (mem.empty()) return 0.0;
    double s = 0.0;
    for (int a : mem)
        for (int b : mem) s += kmat[static_cast<std::size_t>(a) * static_cast<std::size_t>(m) + b];
    const double inv = 1.0 / static_cast<double>(mem.size());
    return s * inv * inv;
}

}  // namespace

KernelCenters kernel_kmeans(const SparseDataset& data, std::span<const int> sample_indices,
                            const KernelSpec& spec, int k, int max_iter, std::uint64_t seed,
                            std::vector<double>* objective_history) {
    spec.validate();
    const int m = static_cast<int>(sample_indices.size());
    if (k < 1) throw std::invalid_argument("kernel_kmeans: k must be >= 1");
    if (m < k) throw std::invalid_argument("kernel_kmeans: sample smaller than k");
    if (objective_history) objective_history->clear();

    // Dense kernel matrix over the sample; O(m^2) space by construction.
    std::vector<double> kmat(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
        const SparseVector& xa = data.samples[static_cast<std::size_t>(sample_indices[a])];
        for (int b = 0; b < m; ++b) {
            kmat[static_cast<std::size_t>(a) * m + b] =
                kernel_eval(spec, xa, data.samples[static_cast<std::size_t>(sample_indices[b])]);
        }
    }
    const auto kat = [&](int a, int b) { return kmat[static_cast<std::size_t>(a) * m + b]; };

    // D^2-weighted init over distinct sample points.
    std::mt19937_64 rng(mix_seed(seed, 0x6b6d6e73ull));
    std::vector<int> seeds;
    std::vector<char> chosen(static_cast<std::size_t>(m), 0);
    std::vector<double> d2(static_cast<std::size_t>(m));
    {
        const int first = static_cast<int>(draw_below(rng, static_cast<std::uint64_t>(m)));
        seeds.push_back(first);
        chosen[static_cast<std::size_t>(first)] = 1;
        for (int p = 0; p < m; ++p)
            d2[static_cast<std::size_t>(p)] = kat(p, p) + kat(first, first) - 2.0 * kat(p, first);
        while (static_cast<int>(seeds.size()) < k) {
            double total = 0.0;
            for (int p = 0; p < m; ++p)
                if (!chosen[static_cast<std::size_t>(p)])
                    total += std::max(0.0, d2[static_cast<std::size_t>(p)]);
            int next = -1;
            if (total > 0.0) {
                const double target = draw_unit(rng) * total;
                double acc = 0.0;
                for (int p = 0; p < m; ++p) {
                    if (chosen[static_cast<std::size_t>(p)]) continue;
                    acc += std::max(0.0, d2[static_cast<std::size_t>(p)]);
                    if (acc >= target) {
                        next = p;
                        break;
                    }
                }
            }
            if (next < 0) {  // all remaining distances zero (duplicates): lowest unchosen
                for (int p = 0; p < m; ++p)
                    if (!chosen[static_cast<std::size_t>(p)]) {
                        next = p;
                        break;
                    }
            }
            seeds.push_back(next);
            chosen[static_cast<std::size_t>(next)] = 1;
            for (int p = 0; p < m; ++p) {
                const double d = kat(p, p) + kat(next, next) - 2.0 * kat(p, next);
                d2[static_cast<std::size_t>(p)] = std::min(d2[static_cast<std::size_t>(p)], d);
            }
        }
    }

    // Initial assignment: nearest seed point.
    std::vector<int> assign(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) {
        int best = 0;
        double best_d = kat(p, p) + kat(seeds[0], seeds[0]) - 2.0 * kat(p, seeds[0]);
        for (int c = 1; c < k; ++c) {
            const double d = kat(p, p) + kat(seeds[c], seeds[c]) - 2.0 * kat(p, seeds[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        assign[static_cast<std::size_t>(p)] = best;
    }

    const int min_size = std::max(1, m / (10 * k));
    std::vector<std::vector<int>> mem;
    std::vector<double> self_term(static_cast<std::size_t>(k));

    const auto rebuild = [&]() {
        mem.assign(static_cast<std::size_t>(k), {});
        for (int p = 0; p < m; ++p) mem[static_cast<std::size_t>(assign[p])].push_back(p);
    };
    rebuild();

    for (int iter = 0; iter < max_iter; ++iter) {
        bool reseeded = false;
        // Reseed undersized clusters with far points stolen from clusters that
        // can spare them; donors may not drop below the minimum themselves.
        for (int pass = 0; pass < k * min_size; ++pass) {
            int victim = -1;
            for (int c = 0; c < k; ++c)
                if (static_cast<int>(mem[static_cast<std::size_t>(c)].size()) < min_size) {
                    victim = c;
                    break;
                }
            if (victim < 0) break;
            for (int c = 0; c < k; ++c)
                if (!mem[static_cast<std::size_t>(c)].empty())
                    self_term[static_cast<std::size_t>(c)] =
                        self_term_of(mem[static_cast<std::size_t>(c)], kmat, m);
            int far = -1;
            double far_d = -1.0;
            for (int p = 0; p < m; ++p) {
                const int c = assign[static_cast<std::size_t>(p)];
                const auto& vc = mem[static_cast<std::size_t>(c)];
                if (c == victim || static_cast<int>(vc.size()) <= std::max(1, min_size)) continue;
                double cross = 0.0;
                for (int j : vc) cross += kat(p, j);
                const double d = center_distance_terms(kat(p, p), cross, vc.size(),
                                                       self_term[static_cast<std::size_t>(c)]);
                if (d > far_d) {
                    far_d = d;
                    far = p;
                }
            }
            if (far < 0) break;  // nothing left to steal
            assign[static_cast<std::size_t>(far)] = victim;
            rebuild();
            reseeded = true;
        }

        for (int c = 0; c < k; ++c)
            self_term[static_cast<std::size_t>(c)] =
                self_term_of(mem[static_cast<std::size_t>(c)], kmat, m);

        bool changed = false;
        std::vector<int> next(static_cast<std::size_t>(m));
        for (int p = 0; p < m; ++p) {
            int best = -1;
            double best_d = 0.0;
            for (int c = 0; c < k; ++c) {
                const auto& vc = mem[static_cast<std::size_t>(c)];
                if (vc.empty()) continue;  // refilled by the reseed step
                double cross = 0.0;
                for (int j : vc) cross += kat(p, j);
                const double d = center_distance_terms(kat(p, p), cross, vc.size(),
                                                       self_term[static_cast<std::size_t>(c)]);
                if (best < 0 || d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            next[static_cast<std::size_t>(p)] = best;
            if (best != assign[static_cast<std::size_t>(p)]) changed = true;
        }

        if (!changed && !reseeded) break;
        if (changed) {
            assign = next;
            rebuild();
        }
        if (objective_history) {
            for (int c = 0; c < k; ++c)
                self_term[static_cast<std::size_t>(c)] =
                    self_term_of(mem[static_cast<std::size_t>(c)], kmat, m);
            double obj = 0.0;
            for (int p = 0; p < m; ++p) {
                const auto& vc = mem[static_cast<std::size_t>(assign[p])];
                double cross = 0.0;
                for (int j : vc) cross += kat(p, j);
                obj += center_distance_terms(kat(p, p), cross, vc.size(),
                                             self_term[static_cast<std::size_t>(assign[p])]);
            }
            objective_history->push_back(obj);
        }
        if (!changed) break;
    }

    // Returned centers must never contain an empty cluster.
    for (;;) {
        int victim = -1;
        for (int c = 0; c < k; ++c)
            if (mem[static_cast<std::size_t>(c)].empty()) {
                victim = c;
                break;
            }
        if (victim < 0) break;
        for (int c = 0; c < k; ++c)
            self_term[static_cast<std::size_t>(c)] =
                self_term_of(mem[static_cast<std::size_t>(c)], kmat, m);
        int far = -1;
        double far_d = -1.0;
        for (int p = 0; p < m; ++p) {
            const int c = assign[static_cast<std::size_t>(p)];
            const auto& vc = mem[static_cast<std::size_t>(c)];
            if (vc.size() <= 1) continue;
            double cross = 0.0;
            for (int j : vc) cross += kat(p, j);
            const double d = center_distance_terms(kat(p, p), cross, vc.size(),
                                                   self_term[static_cast<std::size_t>(c)]);
            if (d > far_d) {
                far_d = d;
                far = p;
            }
        }
        assign[static_cast<std::size_t>(far)] = victim;
        rebuild();
    }

    KernelCenters out;
    out.sample.assign(sample_indices.begin(), sample_indices.end());
    out.center_members = mem;
    out.self_term.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        out.self_term[static_cast<std::size_t>(c)] =
            self_term_of(mem[static_cast<std::size_t>(c)], kmat, m);
    return out;
}

Partition assign_all(const SparseDataset& data, const KernelCenters& centers,
                     const KernelSpec& spec, int workers) {
    if (centers.k() < 1) throw std::invalid_argument("assign_all: no centers");
    spec.validate();
    const int n = data.n();
    const int m = centers.sample_size();
    Partition part;
    part.k = centers.k();
    part.assign.resize(static_cast<std::size_t>(n));

    parallel_for(0, n, workers, [&](int i) {
        const SparseVector& x = data.samples[static_cast<std::size_t>(i)];
        std::vector<double> kvals(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            kvals[static_cast<std::size_t>(j)] =
                kernel_eval(spec, x, data.samples[static_cast<std::size_t>(centers.sample[j])]);
        const double kxx = kernel_eval(spec, x, x);
        part.assign[static_cast<std::size_t>(i)] = nearest_center(centers, kxx, kvals);
    });

    part.rebuild_members();
    return part;
}

namespace {

void check_guard(int n, int guard, const char* what) {
    if (n > guard)
        throw GuardError(std::string(what) +
                         ": dataset exceeds the O(n^2) size guard; use a sampled estimate");
}

}  // namespace

double off_diag_mass(const SparseDataset& data, const Partition& part, const KernelSpec& spec,
                     int guard) {
    check_guard(data.n(), guard, "off_diag_mass");
    const int n = data.n();
    long double sum = 0.0L;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (part.assign[static_cast<std::size_t>(i)] == part.assign[static_cast<std::size_t>(j)])
                continue;
            sum += std::fabs(kernel_eval(spec, data.samples[static_cast<std::size_t>(i)],
                                         data.samples[static_cast<std::size_t>(j)]));
        }
    }
    return static_cast<double>(2.0L * sum);  // ordered-pair convention
}

double restricted_mass(const SparseDataset& data, const Partition& part, const KernelSpec& spec,
                       std::span<const int> subset, int guard) {
    check_guard(static_cast<int>(subset.size()), guard, "restricted_mass");
    std::vector<int> s(subset.begin(), subset.end());
    std::sort(s.begin(), s.end());
    long double sum = 0.0L;
    for (std::size_t a = 0; a < s.size(); ++a) {
        const int i = s[a];
        for (std::size_t b = a + 1; b < s.size(); ++b) {
            const int j = s[b];
            if (part.assign[static_cast<std::size_t>(i)] == part.assign[static_cast<std::size_t>(j)])
                continue;
            sum += std::fabs(kernel_eval(spec, data.samples[static_cast<std::size_t>(i)],
                                         data.samples[static_cast<std::size_t>(j)]));
        }
    }
    return static_cast<double>(2.0L * sum);
}

}  // namespace dcsvm
