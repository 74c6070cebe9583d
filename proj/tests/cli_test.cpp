// End-to-end tests that drive the installed binary. The harness passes the
// binary path after `--bin`.

#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

namespace {

std::string g_bin;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    const std::string out_path = "cli_stdout.txt";
    const std::string err_path = "cli_stderr.txt";
    const std::string command =
        g_bin + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testutil::read_file(out_path);
    result.err = testutil::read_file(err_path);
    return result;
}

int count_lines(const std::string& path) {
    std::ifstream in(path);
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++lines;
    }
    return lines;
}

}  // namespace

TEST_CASE("simulate writes loadable files and is seed-deterministic") {
    auto first = run_cli(
        "simulate --tasks 40 --annotators 8 --choices 3 --redundancy 4 "
        "--law uniform:0.5,0.9 --out-answers cli_sim_a.txt "
        "--out-truths cli_sim_t.txt --seed 9");
    REQUIRE(first.exit_code == 0);
    CHECK(first.out.find("config: command = simulate") != std::string::npos);
    CHECK(count_lines("cli_sim_a.txt") == 160);
    CHECK(count_lines("cli_sim_t.txt") == 40);

    run_cli(
        "simulate --tasks 40 --annotators 8 --choices 3 --redundancy 4 "
        "--law uniform:0.5,0.9 --out-answers cli_sim_a2.txt "
        "--out-truths cli_sim_t2.txt --seed 9");
    CHECK(testutil::read_file("cli_sim_a.txt") ==
          testutil::read_file("cli_sim_a2.txt"));
    CHECK(testutil::read_file("cli_sim_t.txt") ==
          testutil::read_file("cli_sim_t2.txt"));
}

TEST_CASE("train writes a checkpoint and echoes overrides") {
    run_cli(
        "simulate --tasks 60 --annotators 10 --choices 2 --redundancy 5 "
        "--law uniform:0.55,0.95 --out-answers cli_tr_a.txt "
        "--out-truths cli_tr_t.txt --seed 4");
    auto result = run_cli(
        "train --answers cli_tr_a.txt --truths cli_tr_t.txt --out cli_model.bin "
        "--lr 0.01 --max-epochs 8 --seed 12");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(result.out.find("config: lr = 0.01") != std::string::npos);
    CHECK(std::filesystem::exists("cli_model.bin"));
    const std::string history = testutil::read_file("cli_model.bin.history.txt");
    CHECK(history.find("epoch\ttrain_loss\tval_loss") != std::string::npos);
    CHECK(count_lines("cli_model.bin.history.txt") >= 3);  // header + >=1 epoch

    // identical seed, identical bytes
    run_cli(
        "train --answers cli_tr_a.txt --truths cli_tr_t.txt --out cli_model2.bin "
        "--lr 0.01 --max-epochs 8 --seed 12");
    CHECK(testutil::read_file("cli_model.bin") ==
          testutil::read_file("cli_model2.bin"));

    // different seed, different bytes
    run_cli(
        "train --answers cli_tr_a.txt --truths cli_tr_t.txt --out cli_model3.bin "
        "--lr 0.01 --max-epochs 8 --seed 13");
    CHECK(testutil::read_file("cli_model.bin") !=
          testutil::read_file("cli_model3.bin"));
}

TEST_CASE("infer covers every annotated task and keeps the model unchanged") {
    const std::string model_before = testutil::read_file("cli_model.bin");
    auto result = run_cli(
        "infer --answers cli_tr_a.txt --model cli_model.bin --out cli_preds.txt");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(count_lines("cli_preds.txt") == 60);
    CHECK(testutil::read_file("cli_model.bin") == model_before);
}

TEST_CASE("infer handles unseen annotators and empty inputs") {
    // same label alphabet, brand-new annotators
    testutil::write_file("cli_unseen.txt", "t0 newbie 0\nt0 visitor 1\nt1 newbie 1\n");
    auto result = run_cli(
        "infer --answers cli_unseen.txt --model cli_model.bin --out cli_up.txt");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(count_lines("cli_up.txt") == 2);

    testutil::write_file("cli_empty.txt", "");
    result = run_cli(
        "infer --answers cli_empty.txt --model cli_model.bin --out cli_ep.txt");
    REQUIRE(result.exit_code == 0);
    CHECK(count_lines("cli_ep.txt") == 0);
}

TEST_CASE("infer rejects label alphabets the model was not trained on") {
    testutil::write_file("cli_badlab.txt", "t0 w0 yes\nt0 w1 no\n");
    auto result = run_cli(
        "infer --answers cli_badlab.txt --model cli_model.bin --out cli_bp.txt");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("not part of the model") != std::string::npos);
}

TEST_CASE("unknown flags are rejected") {
    auto result = run_cli("train --answers a --truths b --out c --frobnicate 3");
    CHECK(result.exit_code != 0);
}

TEST_CASE("benchmark grid produces one row per dataset/method/fold") {
    run_cli(
        "simulate --tasks 80 --annotators 12 --choices 2 --redundancy 5 "
        "--law uniform:0.6,0.9 --out-answers cli_bm_a.txt "
        "--out-truths cli_bm_t.txt --seed 2");
    testutil::write_file("cli_grid.cfg",
                         "seed = 3\n"
                         "folds = 4\n"
                         "methods = mv, ds\n"
                         "[dataset clismoke]\n"
                         "answers = cli_bm_a.txt\n"
                         "truths = cli_bm_t.txt\n");
    auto result = run_cli(
        "benchmark --config cli_grid.cfg --out cli_results.csv --out-dir "
        "cli_bench --quiet");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(count_lines("cli_results.csv") == 9);  // header + 2 methods x 4 folds
    CHECK(result.out.find("clismoke") != std::string::npos);
    // prediction dumps exist for auditability
    CHECK(std::filesystem::exists("cli_bench/preds/clismoke_mv_fold0.preds"));
}

TEST_CASE("unknown benchmark methods become error rows and a nonzero exit") {
    testutil::write_file("cli_grid_bad.cfg",
                         "methods = mv, glad\n"
                         "[dataset clismoke]\n"
                         "answers = cli_bm_a.txt\n"
                         "truths = cli_bm_t.txt\n");
    auto result = run_cli(
        "benchmark --config cli_grid_bad.cfg --out cli_results_bad.csv "
        "--out-dir cli_bench --quiet");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("glad") != std::string::npos);
    CHECK(result.err.find("available methods") != std::string::npos);
    CHECK(std::filesystem::exists("cli_results_bad.csv.errors.txt"));
    // the mv rows still made it into the results
    CHECK(count_lines("cli_results_bad.csv") == 5);
}

TEST_CASE("perfect annotators give majority vote a perfect end-to-end score") {
    run_cli(
        "simulate --tasks 60 --annotators 9 --choices 2 --redundancy 3 "
        "--law fixed:1.0 --out-answers cli_pf_a.txt --out-truths cli_pf_t.txt "
        "--seed 6");
    testutil::write_file("cli_grid_pf.cfg",
                         "methods = mv\n"
                         "[dataset perfect]\n"
                         "answers = cli_pf_a.txt\n"
                         "truths = cli_pf_t.txt\n");
    auto result = run_cli(
        "benchmark --config cli_grid_pf.cfg --out cli_results_pf.csv "
        "--out-dir cli_bench --quiet");
    REQUIRE(result.exit_code == 0);
    std::ifstream csv("cli_results_pf.csv");
    std::string line;
    std::getline(csv, line);  // header
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream fields(line);
        std::string token;
        for (int i = 0; i < 4; ++i) std::getline(fields, token, ',');
        CHECK(std::stod(token) == 1.0);  // accuracy column
    }
    CHECK(rows == 4);
}

TEST_CASE("redundancy sweep writes per-level rows") {
    auto result = run_cli(
        "redundancy --answers cli_bm_a.txt --truths cli_bm_t.txt --levels 1,5 "
        "--methods mv --out cli_red.csv --seed 3 --quiet");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(count_lines("cli_red.csv") == 9);  // header + 2 levels x 4 folds
    const std::string csv = testutil::read_file("cli_red.csv");
    CHECK(csv.find("cli_bm_a,mv,1,") != std::string::npos);
    CHECK(csv.find("cli_bm_a,mv,5,") != std::string::npos);
}

int main(int argc, char** argv) {
    std::vector<char*> pass;
    for (int i = 0; i < argc; ++i) {
        if (std::string(argv[i]) == "--bin" && i + 1 < argc) {
            g_bin = argv[++i];
            continue;
        }
        pass.push_back(argv[i]);
    }
    if (g_bin.empty()) {
        std::fprintf(stderr, "usage: cli_tests --bin <path-to-superla>\n");
        return 2;
    }
    doctest::Context context(static_cast<int>(pass.size()), pass.data());
    return context.run();
}
