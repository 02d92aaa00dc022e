#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "nmu/datasets.hpp"
#include "nmu/matrix.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(NMUKIT_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    std::array<char, 512> buf{};
    while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("nmukit_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("gen-swimmer writes the 220x256 matrix deterministically") {
    const auto dir = temp_dir("gen");
    const auto p1 = dir / "sw1.mat";
    const auto p2 = dir / "sw2.mat";
    CHECK(run_cli("gen-swimmer " + p1.string()).exit_code == 0);
    CHECK(run_cli("gen-swimmer " + p2.string()).exit_code == 0);

    const std::string body = slurp(p1);
    CHECK(body.substr(0, 8) == "220 256\n");
    CHECK(body == slurp(p2));

    const nmu::Mat m = nmu::load_matrix(p1.string());
    for (double x : m.data()) CHECK((x == 0.0 || x == 1.0));
    fs::remove_all(dir);
}

TEST_CASE("factorize nmf writes factors and a run record") {
    const auto dir = temp_dir("fact");
    std::mt19937_64 rng(3);
    const nmu::Mat m = testutil::random_mat(12, 10, rng, 0.0, 1.0);
    nmu::save_matrix(m, (dir / "m.mat").string());

    const auto res = run_cli("factorize " + (dir / "m.mat").string() +
                             " --method nmf --rank 2 --seed 4 --sweeps 50 --out-dir " +
                             (dir / "out").string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "V.mat"));
    CHECK(fs::exists(dir / "out" / "W.mat"));

    const std::string csv = slurp(dir / "out" / "run.csv");
    CHECK(csv.find("method,rank,seed") == 0);
    CHECK(csv.find("nmf,2,4,50") != std::string::npos);

    // deterministic given the seed
    const auto res2 = run_cli("factorize " + (dir / "m.mat").string() +
                              " --method nmf --rank 2 --seed 4 --sweeps 50 --out-dir " +
                              (dir / "out2").string());
    CHECK(res2.exit_code == 0);
    CHECK(slurp(dir / "out" / "V.mat") == slurp(dir / "out2" / "V.mat"));
    fs::remove_all(dir);
}

TEST_CASE("factorize rnmu emits per-stage factors and a monotone residual trace") {
    const auto dir = temp_dir("rnmu");
    std::mt19937_64 rng(8);
    const nmu::Mat m = testutil::random_sparse_mat(10, 9, 0.3, rng);
    nmu::save_matrix(m, (dir / "m.mat").string());

    const auto res = run_cli("factorize " + (dir / "m.mat").string() +
                             " --method rnmu --rank 3 --seed 2 --maxiter 40 --out-dir " +
                             (dir / "out").string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "factor_01.mat"));
    CHECK(fs::exists(dir / "out" / "factor_02.mat"));
    CHECK(fs::exists(dir / "out" / "factor_03.mat"));

    const std::string trace = slurp(dir / "out" / "residual_sparsity.csv");
    std::istringstream lines(trace);
    std::string line;
    std::getline(lines, line);  // header
    double prev = -1.0;
    while (std::getline(lines, line)) {
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        const double s = std::stod(line.substr(comma + 1));
        CHECK(s >= prev - 1e-9);
        prev = s;
    }
    fs::remove_all(dir);
}

TEST_CASE("factorize gnmu on the swimmer lands in the expected bands") {
    const auto dir = temp_dir("swim");
    REQUIRE(run_cli("gen-swimmer " + (dir / "sw.mat").string()).exit_code == 0);
    const auto res = run_cli("factorize " + (dir / "sw.mat").string() +
                             " --method gnmu --rank 8 --seed 1 --out-dir " +
                             (dir / "out").string());
    CHECK(res.exit_code == 0);

    // error_plain and s_v from the printed record row
    std::istringstream lines(res.output);
    std::string line, row;
    while (std::getline(lines, line))
        if (line.rfind("gnmu,", 0) == 0) row = line;
    REQUIRE(!row.empty());
    std::vector<std::string> f;
    std::istringstream cells(row);
    while (std::getline(cells, line, ',')) f.push_back(line);
    REQUIRE(f.size() >= 14);
    const double plain = std::stod(f[6]);
    const double s_v = std::stod(f[9]);
    const double viol = std::stod(f[13]);
    CHECK(plain > 30.0);
    CHECK(plain < 70.0);
    CHECK(s_v >= 85.0);
    CHECK(viol <= 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("factorize snmf accepts sparsity targets") {
    const auto dir = temp_dir("snmf");
    std::mt19937_64 rng(5);
    const nmu::Mat m = testutil::random_mat(10, 8, rng, 0.0, 1.0);
    nmu::save_matrix(m, (dir / "m.mat").string());

    const auto res = run_cli("factorize " + (dir / "m.mat").string() +
                             " --method snmf --rank 2 --seed 1 --sweeps 60 "
                             "--target-sv 0.5 --target-sw 0.3 --out-dir " +
                             (dir / "out").string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("snmf,2,1,60") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("metrics reports on existing factors") {
    const auto dir = temp_dir("metrics");
    std::mt19937_64 rng(6);
    const nmu::Mat v = testutil::random_mat(6, 2, rng, 0.1, 1.0);
    const nmu::Mat w = testutil::random_mat(2, 5, rng, 0.1, 1.0);
    const nmu::Mat m = nmu::matmul(v, w);
    nmu::save_matrix(m, (dir / "m.mat").string());
    nmu::save_matrix(v, (dir / "v.mat").string());
    nmu::save_matrix(w, (dir / "w.mat").string());

    const auto res = run_cli("metrics " + (dir / "m.mat").string() + " " +
                             (dir / "v.mat").string() + " " + (dir / "w.mat").string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("error_plain") != std::string::npos);
    CHECK(res.output.find("0.00,0.00") != std::string::npos);  // exact factorization
    fs::remove_all(dir);
}

TEST_CASE("repair subcommand restores feasibility") {
    const auto dir = temp_dir("repair");
    std::mt19937_64 rng(7);
    const nmu::Mat m = testutil::random_mat(8, 6, rng, 0.0, 1.0);
    const nmu::Mat v = testutil::random_mat(8, 2, rng, 0.5, 1.5);
    const nmu::Mat w = testutil::random_mat(2, 6, rng, 0.5, 1.5);
    nmu::save_matrix(m, (dir / "m.mat").string());
    nmu::save_matrix(v, (dir / "v.mat").string());
    nmu::save_matrix(w, (dir / "w.mat").string());

    const auto res = run_cli("repair " + (dir / "m.mat").string() + " " +
                             (dir / "v.mat").string() + " " + (dir / "w.mat").string() +
                             " --out-dir " + (dir / "out").string());
    CHECK(res.exit_code == 0);

    const nmu::Mat vr = nmu::load_matrix((dir / "out" / "V_repaired.mat").string());
    const nmu::Mat prod = nmu::matmul(vr, w);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(prod.data()[i] <= m.data()[i] + 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("mosaic subcommand writes a P2 grid") {
    const auto dir = temp_dir("mosaic");
    std::mt19937_64 rng(9);
    const nmu::Mat v = testutil::random_mat(12, 4, rng, 0.0, 1.0);
    nmu::save_matrix(v, (dir / "v.mat").string());

    const auto res = run_cli("mosaic " + (dir / "v.mat").string() + " " +
                             (dir / "out.pgm").string() +
                             " --height 3 --width 4 --grid-cols 2");
    CHECK(res.exit_code == 0);
    CHECK(slurp(dir / "out.pgm").substr(0, 3) == "P2\n");
    fs::remove_all(dir);
}

TEST_CASE("compare runs all four methods and keeps the best seed") {
    const auto dir = temp_dir("compare");
    std::mt19937_64 rng(10);
    const nmu::Mat m = testutil::random_sparse_mat(12, 10, 0.3, rng);
    nmu::save_matrix(m, (dir / "m.mat").string());

    const auto res = run_cli("compare " + (dir / "m.mat").string() +
                             " --rank 2 --seeds 1,2 --sweeps 80 --maxiter 40 "
                             "--refit-sweeps 30 --out-dir " +
                             (dir / "out").string());
    CHECK(res.exit_code == 0);

    const std::string csv = slurp(dir / "out" / "compare.csv");
    for (const char* method : {"nmf", "gnmu", "rnmu", "snmf"})
        CHECK(csv.find(method) != std::string::npos);

    // improved <= plain per row, and the table pick equals the per-cell minimum
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        std::istringstream f(line);
        std::string method, seed, plain, improved;
        std::getline(f, method, ',');
        std::getline(f, seed, ',');
        std::getline(f, plain, ',');
        std::getline(f, improved, ',');
        // values carry two decimals; allow one rounding step of slack
        CHECK(std::stod(improved) <= std::stod(plain) + 0.011);

        const std::string cells = slurp(dir / "out" / "cells.csv");
        std::istringstream cl(cells);
        std::string cline;
        std::getline(cl, cline);
        double best_cell = 1e300;
        while (std::getline(cl, cline)) {
            if (cline.rfind(method + ",", 0) != 0) continue;
            best_cell = std::min(best_cell, std::stod(cline.substr(cline.rfind(',') + 1)));
        }
        CHECK(std::stod(plain) == Catch::Approx(best_cell).margin(5e-3));
    }
    CHECK(rows == 4);
    fs::remove_all(dir);
}

TEST_CASE("config file fills defaults but explicit flags win") {
    const auto dir = temp_dir("config");
    std::mt19937_64 rng(12);
    nmu::save_matrix(testutil::random_mat(10, 8, rng, 0.0, 1.0), (dir / "m.mat").string());
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "[factorize]\nrank=3\nsweeps=25\n";
    }

    const auto from_cfg = run_cli("--config " + (dir / "run.ini").string() + " factorize " +
                                  (dir / "m.mat").string() + " --method nmf --seed 1 --out-dir " +
                                  (dir / "o1").string());
    CHECK(from_cfg.exit_code == 0);
    CHECK(from_cfg.output.find("nmf,3,1,25") != std::string::npos);

    const auto flag_wins = run_cli("--config " + (dir / "run.ini").string() + " factorize " +
                                   (dir / "m.mat").string() +
                                   " --method nmf --seed 1 --rank 2 --out-dir " +
                                   (dir / "o2").string());
    CHECK(flag_wins.exit_code == 0);
    CHECK(flag_wins.output.find("nmf,2,1,25") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("NMUKIT_SEED provides the default seed") {
    const auto dir = temp_dir("envseed");
    std::mt19937_64 rng(13);
    nmu::save_matrix(testutil::random_mat(8, 6, rng, 0.0, 1.0), (dir / "m.mat").string());
    const std::string cmd = "NMUKIT_SEED=7 " + std::string(NMUKIT_BIN) + " factorize " +
                            (dir / "m.mat").string() +
                            " --method nmf --rank 2 --sweeps 10 --out-dir " +
                            (dir / "o").string() + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 512> buf{};
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    pclose(pipe);
    CHECK(out.find("nmf,2,7,10") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("bad method yields a nonzero exit and a machine-readable error") {
    const auto dir = temp_dir("bad");
    std::mt19937_64 rng(11);
    nmu::save_matrix(testutil::random_mat(4, 3, rng), (dir / "m.mat").string());
    const auto res =
        run_cli("factorize " + (dir / "m.mat").string() + " --method pca --rank 2");
    CHECK(res.exit_code != 0);

    const auto res2 = run_cli("factorize " + (dir / "missing.mat").string() + " --rank 2");
    CHECK(res2.exit_code != 0);
    CHECK(res2.output.find("error:") != std::string::npos);
    fs::remove_all(dir);
}
