#include <stdexcept>
#include <algorithm>
#include <filesystem>
#include <sstream>

#include "dcsvm/data_io.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "test_paths.hpp"

using namespace dcsvm;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    fs::create_directories(kTestTmpDir);
    return std::string(kTestTmpDir) + "/" + name;
}

std::string make_train_file(const std::string& name, int n, std::uint64_t seed) {
    const SparseDataset data = testutil::two_moons(n, 0.12, seed);
    std::ostringstream out;
    format_libsvm(data, out);
    const std::string path = tmp_path(name);
    testutil::write_file(path, out.str());
    return path;
}

}  // namespace

TEST_CASE("cli train writes a loadable model and prints a summary") {
    const std::string data = make_train_file("cli_train.svm", 120, 1);
    const std::string model = tmp_path("cli_train.model");
    const auto r = testutil::run_cli("train --kernel rbf --gamma 2 --cost 4 --levels 3 --branch 2 "
                                     "--seed 7 " +
                                     data + " -o " + model);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("objective=") != std::string::npos);
    CHECK(r.output.find("sv_count=") != std::string::npos);
    const Model m = load_model(model);
    CHECK(m.sv_count() > 0);
    CHECK(!m.early.has_value());
}

TEST_CASE("cli train --early notes the stopping level and stores the block") {
    const std::string data = make_train_file("cli_early.svm", 200, 2);
    const std::string model = tmp_path("cli_early.model");
    const auto r = testutil::run_cli("train --kernel rbf --gamma 2 --cost 4 --levels 4 --branch 4 "
                                     "--seed 7 --early " +
                                     data + " -o " + model);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("early_stop_level=") != std::string::npos);
    const Model m = load_model(model);
    CHECK(m.early.has_value());
}

TEST_CASE("cli flag errors exit with code 2") {
    const std::string data = make_train_file("cli_flags.svm", 40, 3);
    // missing --gamma for rbf
    auto r = testutil::run_cli("train --kernel rbf --levels 2 --branch 2 " + data + " -o " +
                               tmp_path("never.model"));
    CHECK(r.exit_code == 2);
    // unknown flag
    r = testutil::run_cli("train --no-such-flag " + data + " -o " + tmp_path("never.model"));
    CHECK(r.exit_code == 2);
    // missing subcommand arguments
    r = testutil::run_cli("predict");
    CHECK(r.exit_code == 2);
}

TEST_CASE("cli runtime failures exit with code 1") {
    const auto r = testutil::run_cli("train --kernel rbf --gamma 1 /no/such/file -o " +
                                     tmp_path("never.model"));
    CHECK(r.exit_code == 1);
}

TEST_CASE("cli predict prints accuracy and labels") {
    const std::string data = make_train_file("cli_pred_train.svm", 150, 4);
    const std::string test = make_train_file("cli_pred_test.svm", 50, 5);
    const std::string model = tmp_path("cli_pred.model");
    const std::string preds = tmp_path("cli_pred.out");

    auto r = testutil::run_cli("train --kernel rbf --gamma 2 --cost 8 --levels 2 --branch 2 "
                               "--seed 3 " +
                               data + " -o " + model);
    REQUIRE(r.exit_code == 0);

    r = testutil::run_cli("predict " + test + " " + model + " -o " + preds);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Accuracy: ") != std::string::npos);
    CHECK(r.output.find("% (") != std::string::npos);

    std::istringstream lines(testutil::read_file(preds));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        CHECK((line == "1" || line == "-1"));
        ++count;
    }
    CHECK(count == 50);
}

TEST_CASE("cli predict on an empty test file emits nothing and exits 0") {
    const std::string data = make_train_file("cli_empty_train.svm", 60, 6);
    const std::string model = tmp_path("cli_empty.model");
    const std::string empty = tmp_path("cli_empty.svm");
    const std::string preds = tmp_path("cli_empty.out");
    testutil::write_file(empty, "");

    auto r = testutil::run_cli("train --kernel rbf --gamma 2 --levels 2 --branch 2 " + data +
                               " -o " + model);
    REQUIRE(r.exit_code == 0);
    r = testutil::run_cli("predict " + empty + " " + model + " -o " + preds);
    CHECK(r.exit_code == 0);
    CHECK(testutil::read_file(preds).empty());
    CHECK(r.output.find("Accuracy") == std::string::npos);
}

TEST_CASE("cli early model falls back to exact prediction without the flag") {
    const std::string data = make_train_file("cli_fallback_train.svm", 200, 7);
    const std::string test = make_train_file("cli_fallback_test.svm", 30, 8);
    const std::string model = tmp_path("cli_fallback.model");

    auto r = testutil::run_cli("train --kernel rbf --gamma 2 --levels 4 --branch 4 --early " +
                               data + " -o " + model);
    REQUIRE(r.exit_code == 0);
    // without --early-predict: still works (warning goes to stderr)
    r = testutil::run_cli("predict " + test + " " + model);
    CHECK(r.exit_code == 0);
    // with the flag
    r = testutil::run_cli("predict --early-predict " + test + " " + model);
    CHECK(r.exit_code == 0);
}

TEST_CASE("cli bound-check emits one row per k and exits 0") {
    const std::string data = make_train_file("cli_bound.svm", 90, 9);
    const std::string csv = tmp_path("cli_bound.csv");
    const auto r = testutil::run_cli("bound-check --kernel rbf --gamma 1 --cost 2 --ks 2,4 "
                                     "--seed 5 " +
                                     data + " -o " + csv);
    CHECK(r.exit_code == 0);
    std::istringstream lines(testutil::read_file(csv));
    std::string line;
    int rows = 0;
    std::getline(lines, line);
    CHECK(line == "k,D_pi,bound,gap,refined_bound,random_gap");
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("cli guard refusal exits with code 3") {
    // 10001 one-feature rows trips the O(n^2) guard before any heavy work
    std::ostringstream big;
    for (int i = 0; i < 10001; ++i) big << (i % 2 == 0 ? "+1" : "-1") << " 1:" << (i % 7) << "\n";
    const std::string data = tmp_path("cli_guard.svm");
    testutil::write_file(data, big.str());
    const auto r = testutil::run_cli("bound-check --kernel rbf --gamma 1 --ks 2 " + data + " -o " +
                                     tmp_path("cli_guard.csv"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("cli bench writes the training trace with the fixed header") {
    const std::string data = make_train_file("cli_bench.svm", 100, 10);
    const std::string csv = tmp_path("cli_bench.csv");
    const auto r = testutil::run_cli("bench --kernel rbf --gamma 2 --levels 3 --branch 2 "
                                     "--seed 2 " +
                                     data + " -o " + csv);
    CHECK(r.exit_code == 0);
    const std::string text = testutil::read_file(csv);
    CHECK(text.rfind("level,clusters,time_s,objective,kkt_violation,sv_count\n", 0) == 0);
    // levels 2, 1 and the final solve
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("cli sv-report emits the per-level table") {
    const std::string data = make_train_file("cli_svrep.svm", 120, 11);
    const std::string csv = tmp_path("cli_svrep.csv");
    const auto r = testutil::run_cli("sv-report --kernel rbf --gamma 2 --cost 4 --levels 3 "
                                     "--branch 2 --seed 2 " +
                                     data + " -o " + csv);
    CHECK(r.exit_code == 0);
    const std::string text = testutil::read_file(csv);
    CHECK(text.rfind("level,clusters,precision,recall\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("cli outputs are byte-identical across reruns") {
    const std::string data = make_train_file("cli_det.svm", 130, 12);
    const std::string m1 = tmp_path("cli_det1.model");
    const std::string m2 = tmp_path("cli_det2.model");
    const std::string flags = "train --kernel rbf --gamma 2 --cost 4 --levels 3 --branch 2 --seed 9 ";
    REQUIRE(testutil::run_cli(flags + data + " -o " + m1).exit_code == 0);
    REQUIRE(testutil::run_cli(flags + data + " -o " + m2).exit_code == 0);
    CHECK(testutil::read_file(m1) == testutil::read_file(m2));
}
