#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcsvm/data_io.hpp"
#include "dcsvm/dcsvm.hpp"
#include "dcsvm/diagnostics.hpp"

namespace {

using namespace dcsvm;

// Flag-combination problems detected after CLI11 parsing; mapped to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string kernel = "rbf";
    double gamma = 0.0;
    int degree = 3;
    double coef0 = 0.0;
    double cost = 1.0;
    double epsilon = 1e-3;
    int levels = 5;
    int branch = 4;
    int sample = 1000;
    bool early = false;
    int workers = 0;  // 0: take DCSVM_WORKERS, else 1
    std::uint64_t seed = 1;
    double cache_mb = 100.0;
};

void add_kernel_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--kernel", o.kernel, "kernel family: rbf, poly, linear")
        ->default_str("rbf");
    cmd->add_option("--gamma", o.gamma, "kernel gamma (required for rbf and poly)");
    cmd->add_option("--degree", o.degree, "polynomial degree")->default_val(3);
    cmd->add_option("--coef0", o.coef0, "polynomial coef0")->default_val(0.0);
    cmd->add_option("--cost", o.cost, "C, the box constraint")->default_val(1.0);
    cmd->add_option("--epsilon", o.epsilon, "stopping tolerance")->default_val(1e-3);
}

void add_dc_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--levels", o.levels, "number of levels (l_max + 1)")->default_val(5);
    cmd->add_option("--branch", o.branch, "clusters multiply by this per level")->default_val(4);
    cmd->add_option("--sample", o.sample, "kmeans sample size m")->default_val(1000);
    cmd->add_option("--workers", o.workers, "max concurrent subproblem solves");
    cmd->add_option("--seed", o.seed, "random seed")->default_val(1);
    cmd->add_option("--cache-mb", o.cache_mb, "kernel cache size in MB")->default_val(100.0);
}

KernelSpec make_spec(const CommonOpts& o, bool gamma_given) {
    KernelSpec spec;
    spec.family = family_from_name(o.kernel);
    if (spec.family != KernelSpec::Family::linear && !gamma_given)
        throw UsageError("--gamma is required for the " + o.kernel + " kernel");
    spec.gamma = o.gamma;
    spec.degree = o.degree;
    spec.coef0 = o.coef0;
    spec.validate();
    return spec;
}

int resolve_workers(const CommonOpts& o) {
    if (o.workers > 0) return o.workers;
    if (const char* env = std::getenv("DCSVM_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 1;
}

DCConfig make_dc_config(const CommonOpts& o) {
    DCConfig cfg;
    cfg.k = o.branch;
    cfg.l_max = o.levels - 1;
    cfg.m = o.sample;
    cfg.seed = o.seed;
    cfg.workers = resolve_workers(o);
    cfg.solver.C = o.cost;
    cfg.solver.tol = o.epsilon;
    cfg.solver.cache_bytes = static_cast<std::size_t>(o.cache_mb * 1024.0 * 1024.0);
    if (o.early) {
        if (cfg.l_max < 1) throw UsageError("--early needs at least 2 levels");
        cfg.early_stop_level = default_early_level(cfg.k, cfg.l_max);
    }
    return cfg;
}

std::vector<int> parse_ks(const std::string& arg) {
    std::vector<int> ks;
    std::istringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            const int k = std::stoi(tok);
            if (k < 1) throw std::invalid_argument("k");
            ks.push_back(k);
        } catch (const std::exception&) {
            throw UsageError("--ks expects positive integers, got '" + tok + "'");
        }
    }
    if (ks.empty()) throw UsageError("--ks must name at least one cluster count");
    return ks;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

int run_train(const std::string& data_path, const std::string& model_path, const CommonOpts& o,
              bool gamma_given) {
    const KernelSpec spec = make_spec(o, gamma_given);
    const DCConfig cfg = make_dc_config(o);
    const SparseDataset data = load_libsvm_file(data_path);
    const DCModel dc = train(data, spec, cfg);
    save_model(dc.model, model_path);
    std::cout << "objective=" << dc.objective << " sv_count=" << dc.model.sv_count()
              << " time_s=" << (dc.trace.empty() ? 0.0 : dc.trace.back().time_s);
    if (dc.early)
        std::cout << " early_stop_level=" << dc.stop_level << " clusters="
                  << (dc.model.early ? dc.model.early->k() : 0);
    if (!dc.converged) std::cout << " converged=no";
    std::cout << '\n';
    return 0;
}

int run_predict(const std::string& test_path, const std::string& model_path,
                const std::string& out_path, bool early_predict) {
    const Model model = load_model(model_path);
    const SparseDataset test = load_libsvm_file(test_path);

    bool use_early = early_predict;
    if (use_early && !model.early) {
        std::cerr << "warning: model has no early-prediction block; using exact prediction\n";
        use_early = false;
    }
    if (!early_predict && model.early)
        std::cerr << "warning: early model predicted without --early-predict; "
                     "using exact prediction over all stored support vectors\n";

    int model_dim = 0;
    for (const SparseVector& x : model.sv) model_dim = std::max(model_dim, x.max_index());
    if (test.dim > model_dim)
        std::cerr << "warning: test data uses feature indices beyond the model's feature space\n";

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file_out = open_output(out_path);
        out = &file_out;
    }
    long correct = 0;
    for (int i = 0; i < test.n(); ++i) {
        const Prediction p = use_early ? predict_early(model, test.samples[static_cast<std::size_t>(i)])
                                       : predict_exact(model, test.samples[static_cast<std::size_t>(i)]);
        *out << p.label << '\n';
        if (p.label == test.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    if (test.n() > 0) {
        char line[96];
        std::snprintf(line, sizeof(line), "Accuracy: %.2f%% (%ld/%d)\n",
                      100.0 * static_cast<double>(correct) / test.n(), correct, test.n());
        std::cout << line;
    }
    return 0;
}

int run_bench(const std::string& data_path, const std::string& out_path, const CommonOpts& o,
              bool gamma_given, bool rel_error) {
    const KernelSpec spec = make_spec(o, gamma_given);
    const DCConfig cfg = make_dc_config(o);
    const SparseDataset data = load_libsvm_file(data_path);
    std::ofstream out = open_output(out_path);
    if (rel_error) {
        DiagnosticsConfig dcfg;
        dcfg.cache_bytes = cfg.solver.cache_bytes;
        const std::vector<TracePoint> points = relative_error_trace(data, spec, o.cost, cfg, dcfg);
        trace_points_csv(points, out);
        std::cout << "trace_points=" << points.size() << '\n';
    } else {
        const DCModel dc = train(data, spec, cfg);
        train_trace_csv(dc.trace, out);
        std::cout << "objective=" << dc.objective << " sv_count=" << dc.model.sv_count()
                  << " levels=" << dc.trace.size() << '\n';
    }
    return 0;
}

int run_bound_check(const std::string& data_path, const std::string& out_path, const CommonOpts& o,
                    bool gamma_given, const std::vector<int>& ks) {
    const KernelSpec spec = make_spec(o, gamma_given);
    const SparseDataset data = load_libsvm_file(data_path);
    DiagnosticsConfig dcfg;
    dcfg.m = o.sample;
    const std::vector<BoundReport> reports = bound_sweep(data, spec, o.cost, ks, o.seed, dcfg);
    std::ofstream out = open_output(out_path);
    bound_reports_csv(reports, out);
    std::cout << "bound_reports=" << reports.size() << '\n';
    return 0;
}

int run_sv_report(const std::string& data_path, const std::string& out_path, const CommonOpts& o,
                  bool gamma_given) {
    const KernelSpec spec = make_spec(o, gamma_given);
    const DCConfig cfg = make_dc_config(o);
    const SparseDataset data = load_libsvm_file(data_path);
    DiagnosticsConfig dcfg;
    dcfg.m = o.sample;
    const std::vector<SVReport> reports = sv_identification(data, spec, o.cost, cfg, dcfg);
    std::ofstream out = open_output(out_path);
    sv_reports_csv(reports, out);
    std::cout << "sv_reports=" << reports.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dcsvm: divide-and-conquer kernel SVM trainer"};
    app.require_subcommand(1);

    CommonOpts o;

    std::string data_path, model_path, test_path, out_path;
    bool early_predict = false;
    bool rel_error = false;
    std::string ks_arg = "8,16,32,64,128";

    CLI::App* c_train = app.add_subcommand("train", "train a model");
    c_train->add_option("data", data_path, "training file (LIBSVM format)")->required();
    c_train->add_option("-o,--output", model_path, "model output path")->required();
    add_kernel_flags(c_train, o);
    add_dc_flags(c_train, o);
    c_train->add_flag("--early", o.early, "stop at the early-prediction level");

    CLI::App* c_predict = app.add_subcommand("predict", "predict labels with a model");
    c_predict->add_option("test", test_path, "test file (LIBSVM format)")->required();
    c_predict->add_option("model", model_path, "model file")->required();
    c_predict->add_option("-o,--output", out_path, "predictions output path (default stdout)");
    c_predict->add_flag("--early-predict", early_predict, "use the early-prediction block");

    CLI::App* c_bench = app.add_subcommand("bench", "train and emit a convergence trace CSV");
    c_bench->add_option("data", data_path, "training file")->required();
    c_bench->add_option("-o,--output", out_path, "trace CSV output path")->required();
    add_kernel_flags(c_bench, o);
    add_dc_flags(c_bench, o);
    c_bench->add_flag("--early", o.early, "stop at the early-prediction level");
    c_bench->add_flag("--rel-error", rel_error,
                      "emit (time_s, rel_error) against a tight direct solve instead");

    CLI::App* c_bound = app.add_subcommand("bound-check", "partition bound report CSV");
    c_bound->add_option("data", data_path, "training file")->required();
    c_bound->add_option("-o,--output", out_path, "CSV output path")->required();
    add_kernel_flags(c_bound, o);
    c_bound->add_option("--ks", ks_arg, "comma-separated cluster counts to sweep");
    c_bound->add_option("--sample", o.sample, "kmeans sample size m")->default_val(1000);
    c_bound->add_option("--seed", o.seed, "random seed")->default_val(1);

    CLI::App* c_svrep = app.add_subcommand("sv-report", "per-level SV precision/recall CSV");
    c_svrep->add_option("data", data_path, "training file")->required();
    c_svrep->add_option("-o,--output", out_path, "CSV output path")->required();
    add_kernel_flags(c_svrep, o);
    add_dc_flags(c_svrep, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto has_gamma = [](CLI::App* cmd) { return cmd->count("--gamma") > 0; };

    try {
        if (c_train->parsed()) return run_train(data_path, model_path, o, has_gamma(c_train));
        if (c_predict->parsed()) return run_predict(test_path, model_path, out_path, early_predict);
        if (c_bench->parsed()) return run_bench(data_path, out_path, o, has_gamma(c_bench), rel_error);
        if (c_bound->parsed())
            return run_bound_check(data_path, out_path, o, has_gamma(c_bound), parse_ks(ks_arg));
        if (c_svrep->parsed()) return run_sv_report(data_path, out_path, o, has_gamma(c_svrep));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const GuardError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
