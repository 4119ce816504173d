#include "dcsvm/model.hpp"

#include <stdexcept>
#include <vector>

#include "dcsvm/clustering.hpp"

namespace dcsvm {

Prediction predict_exact(const Model& model, const SparseVector& x) {
    double dv = 0.0;
    for (int i = 0; i < model.sv_count(); ++i)
        dv += model.coeff[static_cast<std::size_t>(i)] *
              kernel_eval(model.spec, x, model.sv[static_cast<std::size_t>(i)]);
    return {dv >= 0.0 ? 1 : -1, dv};
}

Prediction predict_early(const Model& model, const SparseVector& x) {
    if (!model.early)
        throw std::invalid_argument("predict_early: model carries no early-prediction block");
    const EarlyBlock& eb = *model.early;

    std::vector<double> kvals(eb.sample_x.size());
    for (std::size_t j = 0; j < eb.sample_x.size(); ++j)
        kvals[j] = kernel_eval(model.spec, x, eb.sample_x[j]);
    const double kxx = kernel_eval(model.spec, x, x);

    int best = 0;
    double best_d = 0.0;
    for (int c = 0; c < eb.k(); ++c) {
        const std::vector<int>& mem = eb.center_members[static_cast<std::size_t>(c)];
        double cross = 0.0;
        for (int j : mem) cross += kvals[static_cast<std::size_t>(j)];
        const double d =
            center_distance_terms(kxx, cross, mem.size(), eb.self_term[static_cast<std::size_t>(c)]);
        if (c == 0 || d < best_d) {
            best_d = d;
            best = c;
        }
    }

    double dv = 0.0;
    for (int s : eb.cluster_sv[static_cast<std::size_t>(best)])
        dv += model.coeff[static_cast<std::size_t>(s)] *
              kernel_eval(model.spec, x, model.sv[static_cast<std::size_t>(s)]);
    return {dv >= 0.0 ? 1 : -1, dv};
}

}  // namespace dcsvm
