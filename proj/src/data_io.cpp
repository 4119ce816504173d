#include "dcsvm/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dcsvm/rng.hpp"

namespace dcsvm {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + tok.size() && !tok.empty();
}

bool parse_int(const std::string& tok, long& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtol(begin, &end, 10);
    return end == begin + tok.size() && !tok.empty();
}

[[noreturn]] void fail_line(long line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

SparseDataset parse_libsvm(std::istream& in) {
    SparseDataset data;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line

        double label_value = 0.0;
        if (!parse_double(tok, label_value)) fail_line(line_no, "non-numeric label '" + tok + "'");
        int label;
        if (label_value == 1.0) {
            label = 1;
        } else if (label_value == -1.0) {
            label = -1;
        } else {
            fail_line(line_no, "label must be +1 or -1, got '" + tok + "'");
        }

        SparseVector x;
        int prev_index = 0;
        while (ls >> tok) {
            const std::size_t colon = tok.find(':');
            if (colon == std::string::npos)
                fail_line(line_no, "expected idx:val, got '" + tok + "'");
            long idx = 0;
            double val = 0.0;
            if (!parse_int(tok.substr(0, colon), idx) || idx <= 0)
                fail_line(line_no, "bad feature index in '" + tok + "'");
            if (!parse_double(tok.substr(colon + 1), val))
                fail_line(line_no, "non-numeric value in '" + tok + "'");
            if (idx <= prev_index)
                fail_line(line_no, "feature indices must be strictly increasing (index " +
                                       std::to_string(idx) + ")");
            prev_index = static_cast<int>(idx);
            x.entries.push_back({static_cast<int>(idx), val});
        }

        data.dim = std::max(data.dim, x.max_index());
        data.samples.push_back(std::move(x));
        data.labels.push_back(label);
    }
    return data;
}

SparseDataset load_libsvm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_libsvm(in);
}

void format_libsvm(const SparseDataset& data, std::ostream& out) {
    for (int i = 0; i < data.n(); ++i) {
        out << (data.labels[static_cast<std::size_t>(i)] > 0 ? "+1" : "-1");
        for (const SparseEntry& e : data.samples[static_cast<std::size_t>(i)].entries)
            out << ' ' << e.index << ':' << fmt17(e.value);
        out << '\n';
    }
}

std::pair<SparseDataset, ScalingParams> scale_features(const SparseDataset& data) {
    if (data.n() < 1) throw std::invalid_argument("scale_features: empty dataset");
    const int d = data.dim;
    ScalingParams params;
    params.min.assign(static_cast<std::size_t>(d), 0.0);
    params.max.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<int> seen(static_cast<std::size_t>(d), 0);
    for (const SparseVector& x : data.samples) {
        for (const SparseEntry& e : x.entries) {
            const std::size_t f = static_cast<std::size_t>(e.index - 1);
            if (seen[f] == 0) {
                params.min[f] = e.value;
                params.max[f] = e.value;
            } else {
                params.min[f] = std::min(params.min[f], e.value);
                params.max[f] = std::max(params.max[f], e.value);
            }
            ++seen[f];
        }
    }
    // Dimensions absent from some rows also take the implied zeros.
    for (int f = 0; f < d; ++f) {
        if (seen[static_cast<std::size_t>(f)] < data.n()) {
            params.min[static_cast<std::size_t>(f)] = std::min(params.min[static_cast<std::size_t>(f)], 0.0);
            params.max[static_cast<std::size_t>(f)] = std::max(params.max[static_cast<std::size_t>(f)], 0.0);
        }
    }
    return {apply_scaling(data, params), std::move(params)};
}

SparseDataset apply_scaling(const SparseDataset& data, const ScalingParams& params) {
    const int d = static_cast<int>(params.min.size());
    SparseDataset out;
    out.labels = data.labels;
    out.samples.reserve(data.samples.size());
    for (const SparseVector& x : data.samples) {
        SparseVector sx;
        std::size_t p = 0;
        for (int f = 1; f <= d; ++f) {
            double v = 0.0;
            if (p < x.entries.size() && x.entries[p].index == f) {
                v = x.entries[p].value;
                ++p;
            }
            const double lo = params.min[static_cast<std::size_t>(f - 1)];
            const double hi = params.max[static_cast<std::size_t>(f - 1)];
            const double range = hi - lo;
            const double scaled = range > 0.0 ? (v - lo) / range : 0.0;
            if (scaled != 0.0) sx.entries.push_back({f, scaled});
        }
        // Features beyond the fitted dimensions pass through unscaled.
        for (; p < x.entries.size(); ++p)
            if (x.entries[p].index > d) sx.entries.push_back(x.entries[p]);
        out.dim = std::max(out.dim, sx.max_index());
        out.samples.push_back(std::move(sx));
    }
    out.dim = std::max(out.dim, d);
    return out;
}

std::pair<SparseDataset, SparseDataset> split(const SparseDataset& data, double fraction,
                                              std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split: fraction must be in (0, 1)");
    const int n = data.n();
    std::vector<int> order = all_indices(n);
    std::mt19937_64 rng(mix_seed(seed, 0x73706c69ull));
    shuffle_values(order, rng);
    const int n1 = static_cast<int>(std::ceil(fraction * static_cast<double>(n)));

    std::vector<int> first(order.begin(), order.begin() + n1);
    std::vector<int> second(order.begin() + n1, order.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());

    const auto take = [&](const std::vector<int>& rows) {
        SparseDataset part;
        part.dim = data.dim;
        for (int r : rows) {
            part.samples.push_back(data.samples[static_cast<std::size_t>(r)]);
            part.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
        }
        return part;
    };
    return {take(first), take(second)};
}

namespace {

constexpr const char* kMagic = "dcsvm-model v1";

void write_sparse(const SparseVector& x, std::ostream& out) {
    bool first = true;
    for (const SparseEntry& e : x.entries) {
        if (!first) out << ' ';
        out << e.index << ':' << fmt17(e.value);
        first = false;
    }
}

SparseVector read_sparse(std::istringstream& ls, long line_no) {
    SparseVector x;
    std::string tok;
    int prev = 0;
    while (ls >> tok) {
        const std::size_t colon = tok.find(':');
        if (colon == std::string::npos) fail_line(line_no, "expected idx:val in model file");
        long idx = 0;
        double val = 0.0;
        if (!parse_int(tok.substr(0, colon), idx) || idx <= prev)
            fail_line(line_no, "bad feature index in model file");
        if (!parse_double(tok.substr(colon + 1), val))
            fail_line(line_no, "bad feature value in model file");
        prev = static_cast<int>(idx);
        x.entries.push_back({static_cast<int>(idx), val});
    }
    return x;
}

}  // namespace

void write_model(const Model& model, std::ostream& out) {
    out << kMagic << '\n';
    out << "kernel:" << family_name(model.spec.family) << '\n';
    if (model.spec.family != KernelSpec::Family::linear)
        out << "gamma:" << fmt17(model.spec.gamma) << '\n';
    if (model.spec.family == KernelSpec::Family::polynomial) {
        out << "degree:" << model.spec.degree << '\n';
        out << "coef0:" << fmt17(model.spec.coef0) << '\n';
    }
    out << "cost:" << fmt17(model.C) << '\n';
    out << "nsv:" << model.sv_count() << '\n';
    if (model.early) {
        out << "early:" << model.early->k() << '\n';
        out << "sample:" << model.early->sample_x.size() << '\n';
    }
    out << "endheader\n";
    if (model.early) {
        const EarlyBlock& eb = *model.early;
        for (const SparseVector& x : eb.sample_x) {
            out << "point:";
            if (!x.entries.empty()) out << ' ';
            write_sparse(x, out);
            out << '\n';
        }
        for (int c = 0; c < eb.k(); ++c) {
            out << "cluster:" << c << ' ' << fmt17(eb.self_term[static_cast<std::size_t>(c)]) << ' '
                << eb.center_members[static_cast<std::size_t>(c)].size();
            for (int p : eb.center_members[static_cast<std::size_t>(c)]) out << ' ' << p;
            out << '\n';
        }
        for (int c = 0; c < eb.k(); ++c) {
            out << "svcluster:" << c << ' ' << eb.cluster_sv[static_cast<std::size_t>(c)].size();
            for (int s : eb.cluster_sv[static_cast<std::size_t>(c)]) out << ' ' << s;
            out << '\n';
        }
    }
    out << "SV\n";
    for (int i = 0; i < model.sv_count(); ++i) {
        out << fmt17(model.coeff[static_cast<std::size_t>(i)]);
        if (!model.sv[static_cast<std::size_t>(i)].entries.empty()) out << ' ';
        write_sparse(model.sv[static_cast<std::size_t>(i)], out);
        out << '\n';
    }
}

Model read_model(std::istream& in) {
    std::string line;
    long line_no = 0;
    const auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(std::string("truncated model file: ") + what);
        ++line_no;
    };

    next_line("missing header");
    if (line != kMagic) throw ParseError("model version mismatch: expected '" + std::string(kMagic) + "'");

    Model model;
    long nsv = -1;
    long early_k = 0;
    long sample_n = 0;
    bool saw_kernel = false;
    for (;;) {
        next_line("header");
        if (line == "endheader") break;
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) fail_line(line_no, "expected key:value in model header");
        const std::string key = line.substr(0, colon);
        const std::string value = line.substr(colon + 1);
        if (key == "kernel") {
            model.spec.family = family_from_name(value);
            saw_kernel = true;
        } else if (key == "gamma") {
            if (!parse_double(value, model.spec.gamma)) fail_line(line_no, "bad gamma");
        } else if (key == "degree") {
            long d;
            if (!parse_int(value, d) || d < 1) fail_line(line_no, "bad degree");
            model.spec.degree = static_cast<int>(d);
        } else if (key == "coef0") {
            if (!parse_double(value, model.spec.coef0)) fail_line(line_no, "bad coef0");
        } else if (key == "cost") {
            if (!parse_double(value, model.C) || !(model.C > 0.0)) fail_line(line_no, "bad cost");
        } else if (key == "nsv") {
            if (!parse_int(value, nsv) || nsv < 0) fail_line(line_no, "bad nsv");
        } else if (key == "early") {
            if (!parse_int(value, early_k) || early_k < 1) fail_line(line_no, "bad early cluster count");
        } else if (key == "sample") {
            if (!parse_int(value, sample_n) || sample_n < 1) fail_line(line_no, "bad sample size");
        } else {
            fail_line(line_no, "unknown model header key '" + key + "'");
        }
    }
    if (!saw_kernel) throw ParseError("model file missing kernel header");
    if (nsv < 0) throw ParseError("model file missing nsv header");

    if (early_k > 0) {
        EarlyBlock eb;
        eb.center_members.resize(static_cast<std::size_t>(early_k));
        eb.self_term.resize(static_cast<std::size_t>(early_k));
        eb.cluster_sv.resize(static_cast<std::size_t>(early_k));
        for (long p = 0; p < sample_n; ++p) {
            next_line("early-prediction sample points");
            if (line.rfind("point:", 0) != 0) fail_line(line_no, "expected point: line");
            std::istringstream ls(line.substr(line.find(':') + 1));
            eb.sample_x.push_back(read_sparse(ls, line_no));
        }
        for (long c = 0; c < early_k; ++c) {
            next_line("cluster definitions");
            std::istringstream ls(line);
            std::string head;
            long id = -1, cnt = -1;
            double self = 0.0;
            ls >> head;
            if (head.rfind("cluster:", 0) != 0 || !parse_int(head.substr(8), id) || id != c)
                fail_line(line_no, "expected cluster:" + std::to_string(c));
            if (!(ls >> self >> cnt) || cnt < 1) fail_line(line_no, "bad cluster definition");
            eb.self_term[static_cast<std::size_t>(c)] = self;
            for (long j = 0; j < cnt; ++j) {
                long pos;
                if (!(ls >> pos) || pos < 0 || pos >= sample_n)
                    fail_line(line_no, "bad cluster member position");
                eb.center_members[static_cast<std::size_t>(c)].push_back(static_cast<int>(pos));
            }
        }
        for (long c = 0; c < early_k; ++c) {
            next_line("per-cluster support vector lists");
            std::istringstream ls(line);
            std::string head;
            long id = -1, cnt = -1;
            ls >> head;
            if (head.rfind("svcluster:", 0) != 0 || !parse_int(head.substr(10), id) || id != c)
                fail_line(line_no, "expected svcluster:" + std::to_string(c));
            if (!(ls >> cnt) || cnt < 0) fail_line(line_no, "bad svcluster count");
            for (long j = 0; j < cnt; ++j) {
                long pos;
                if (!(ls >> pos) || pos < 0 || pos >= nsv)
                    fail_line(line_no, "bad svcluster position");
                eb.cluster_sv[static_cast<std::size_t>(c)].push_back(static_cast<int>(pos));
            }
        }
        model.early = std::move(eb);
    }

    next_line("SV marker");
    if (line != "SV") fail_line(line_no, "expected SV marker");
    for (long i = 0; i < nsv; ++i) {
        next_line("support vectors");
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) fail_line(line_no, "empty support vector line");
        double coeff;
        if (!parse_double(tok, coeff)) fail_line(line_no, "bad coefficient");
        if (std::fabs(coeff) > model.C * (1.0 + 1e-12))
            fail_line(line_no, "coefficient exceeds cost bound");
        model.coeff.push_back(coeff);
        model.sv.push_back(read_sparse(ls, line_no));
    }

    if (model.early) {
        // Cluster blocks must partition the support vectors.
        std::vector<int> owner(static_cast<std::size_t>(nsv), -1);
        for (int c = 0; c < model.early->k(); ++c) {
            for (int s : model.early->cluster_sv[static_cast<std::size_t>(c)]) {
                if (owner[static_cast<std::size_t>(s)] != -1)
                    throw ParseError("support vector assigned to two clusters");
                owner[static_cast<std::size_t>(s)] = c;
            }
        }
        for (long i = 0; i < nsv; ++i)
            if (owner[static_cast<std::size_t>(i)] == -1)
                throw ParseError("support vector missing from cluster blocks");
    }
    return model;
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_model(model, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return read_model(in);
}

}  // namespace dcsvm
