// nmukit — command line front end for the NMU/NMF toolkit.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmu/nmu.hpp"

namespace fs = std::filesystem;

namespace {

struct RunRecord {
    std::string method;
    std::size_t rank = 0;
    std::uint64_t seed = 0;
    int budget = 0;  // sweeps (nmf/snmf) or outer iterations (gnmu/rnmu)
    int t_inner = 0;
    double threshold = 1e-3;
    nmu::SparsityReport rep;
    std::optional<double> max_violation;  // NMU methods only
    double wall_seconds = 0.0;
};

std::string pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

std::string opt_pct(const std::optional<double>& x) { return x ? pct(*x) : std::string(); }

std::string sci(const std::optional<double>& x) {
    if (!x) return {};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", *x);
    return buf;
}

const char* kRecordHeader =
    "method,rank,seed,budget,t_inner,threshold,error_plain,error_scaled,error_improved,"
    "s_v,s_w,sh_v,sh_w,max_violation,wall_seconds";

std::string record_row(const RunRecord& r) {
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", r.wall_seconds);
    char thr[32];
    std::snprintf(thr, sizeof(thr), "%g", r.threshold);
    std::string row;
    row += r.method;
    row += ',' + std::to_string(r.rank);
    row += ',' + std::to_string(r.seed);
    row += ',' + std::to_string(r.budget);
    row += ',' + std::to_string(r.t_inner);
    row += ',' + std::string(thr);
    row += ',' + pct(r.rep.error_plain);
    row += ',' + pct(r.rep.error_scaled);
    row += ',' + opt_pct(r.rep.error_improved);
    row += ',' + pct(r.rep.s_v);
    row += ',' + pct(r.rep.s_w);
    row += ',' + pct(r.rep.sh_v);
    row += ',' + pct(r.rep.sh_w);
    row += ',' + sci(r.max_violation);
    row += ',' + std::string(wall);
    return row;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct FactorizeOptions {
    std::string in_path;
    std::string method = "nmf";
    std::size_t rank = 8;
    std::uint64_t seed = 1;
    std::optional<int> maxiter;
    int sweeps = 600;
    int t_inner = 2;
    double threshold = 1e-3;
    double target_sv = 0.0;
    double target_sw = 0.0;
    bool no_repair = false;
    bool repair_w = false;
    int refit_sweeps = 0;
    std::string out_dir = ".";
};

// Runs one (method, seed) cell and returns the factors plus a filled record.
std::pair<nmu::FactorPair, RunRecord> run_method(const nmu::Mat& m, const FactorizeOptions& o,
                                                 nmu::ResidualStack* stack_out = nullptr) {
    RunRecord rec;
    rec.method = o.method;
    rec.rank = o.rank;
    rec.seed = o.seed;
    rec.t_inner = o.t_inner;
    rec.threshold = o.threshold;

    nmu::FactorPair pair;
    const auto t0 = std::chrono::steady_clock::now();
    if (o.method == "nmf") {
        rec.budget = o.sweeps;
        rec.t_inner = 0;
        pair = nmu::nmf(m, o.rank, o.sweeps, o.seed);
    } else if (o.method == "gnmu" || o.method == "rnmu") {
        nmu::LnmuConfig cfg;
        cfg.rank = o.rank;
        cfg.maxiter = o.maxiter;
        cfg.t_inner = o.t_inner;
        cfg.seed = o.seed;
        cfg.repair = !o.no_repair;
        cfg.repair_w = o.repair_w;
        if (o.method == "gnmu") {
            rec.budget = o.maxiter.value_or(240);
            auto res = nmu::gnmu(m, cfg);
            pair = std::move(res.pair);
            rec.max_violation = res.max_violation;
        } else {
            rec.budget = o.maxiter.value_or(180);
            auto [p, stack] = nmu::rnmu(m, cfg);
            pair = std::move(p);
            rec.max_violation = nmu::max_violation(m, pair);
            if (stack_out) *stack_out = std::move(stack);
        }
    } else if (o.method == "snmf") {
        rec.budget = o.sweeps;
        rec.t_inner = 0;
        nmu::SnmfConfig cfg;
        cfg.rank = o.rank;
        cfg.sweeps = o.sweeps;
        cfg.target_sv = o.target_sv;
        cfg.target_sw = o.target_sw;
        cfg.seed = o.seed;
        cfg.threshold_ratio = o.threshold;
        pair = nmu::adaptive_snmf(m, cfg).pair;
    } else {
        throw std::runtime_error("unknown method '" + o.method + "'");
    }

    rec.rep = nmu::report(m, pair.v, pair.w, o.threshold);
    if (o.refit_sweeps > 0) {
        const nmu::FactorPair improved = nmu::refit_on_pattern(m, pair, o.refit_sweeps, o.threshold);
        rec.rep.error_improved = nmu::relative_error(m, improved.v, improved.w);
        pair = improved;
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(pair), std::move(rec)};
}

int cmd_gen_swimmer(const std::string& out_path) {
    const nmu::ImageStack stack = nmu::gen_swimmer();
    nmu::save_matrix(stack.matrix, out_path);
    std::cout << "wrote " << out_path << " (" << stack.matrix.rows() << "x"
              << stack.matrix.cols() << ", " << stack.count << " images of " << stack.height
              << "x" << stack.width << ")\n";
    return 0;
}

int cmd_factorize(const FactorizeOptions& o) {
    const nmu::Mat m = nmu::load_matrix(o.in_path);
    fs::create_directories(o.out_dir);

    nmu::ResidualStack stack;
    auto [pair, rec] = run_method(m, o, &stack);

    nmu::save_matrix(pair.v, (fs::path(o.out_dir) / "V.mat").string());
    nmu::save_matrix(pair.w, (fs::path(o.out_dir) / "W.mat").string());
    write_lines(fs::path(o.out_dir) / "run.csv", {kRecordHeader, record_row(rec)});

    if (o.method == "rnmu") {
        // one file per extracted stage: the m entries of v_k, then the n of w_k
        for (std::size_t k = 0; k < stack.factors.size(); ++k) {
            const auto& [vk, wk] = stack.factors[k];
            nmu::Mat stacked(vk.rows() + wk.cols(), 1);
            for (std::size_t i = 0; i < vk.rows(); ++i) stacked(i, 0) = vk(i, 0);
            for (std::size_t j = 0; j < wk.cols(); ++j) stacked(vk.rows() + j, 0) = wk(0, j);
            char name[32];
            std::snprintf(name, sizeof(name), "factor_%02zu.mat", k + 1);
            nmu::save_matrix(stacked, (fs::path(o.out_dir) / name).string());
        }
        std::vector<std::string> trace{"stage,residual_sparsity"};
        for (std::size_t k = 0; k < stack.residuals.size(); ++k)
            trace.push_back(std::to_string(k) + ',' +
                            pct(100.0 * nmu::plain_sparsity(stack.residuals[k], 0.0)));
        write_lines(fs::path(o.out_dir) / "residual_sparsity.csv", trace);
    }

    std::cout << kRecordHeader << '\n' << record_row(rec) << '\n';
    return 0;
}

int cmd_metrics(const std::string& m_path, const std::string& v_path,
                const std::string& w_path, double threshold) {
    const nmu::Mat m = nmu::load_matrix(m_path);
    const nmu::Mat v = nmu::load_matrix(v_path);
    const nmu::Mat w = nmu::load_matrix(w_path);
    const auto rep = nmu::report(m, v, w, threshold);
    std::cout << "error_plain,error_scaled,s_v,s_w,sh_v,sh_w,max_violation\n"
              << pct(rep.error_plain) << ',' << pct(rep.error_scaled) << ',' << pct(rep.s_v)
              << ',' << pct(rep.s_w) << ',' << pct(rep.sh_v) << ',' << pct(rep.sh_w) << ','
              << sci(nmu::max_violation(m, nmu::FactorPair{v, w})) << '\n';
    return 0;
}

int cmd_repair(const std::string& m_path, const std::string& v_path, const std::string& w_path,
               bool repair_w, const std::string& out_dir) {
    const nmu::Mat m = nmu::load_matrix(m_path);
    nmu::FactorPair pair{nmu::load_matrix(v_path), nmu::load_matrix(w_path)};
    const double before = nmu::max_violation(m, pair);
    pair = nmu::repair_underapprox(m, pair, repair_w);
    const double after = nmu::max_violation(m, pair);

    fs::create_directories(out_dir);
    nmu::save_matrix(pair.v, (fs::path(out_dir) / "V_repaired.mat").string());
    if (repair_w) nmu::save_matrix(pair.w, (fs::path(out_dir) / "W_repaired.mat").string());
    std::printf("max_violation: before %.3e, after %.3e\n", before, after);
    return 0;
}

int cmd_mosaic(const std::string& v_path, std::size_t height, std::size_t width,
               std::size_t grid_cols, const std::string& out_path) {
    const nmu::Mat v = nmu::load_matrix(v_path);
    nmu::write_pgm_mosaic(v, height, width, grid_cols, out_path);
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int cmd_compare(const FactorizeOptions& base, const std::vector<std::uint64_t>& seeds,
                int refit_sweeps) {
    const nmu::Mat m = nmu::load_matrix(base.in_path);
    fs::create_directories(base.out_dir);

    const std::vector<std::string> methods{"nmf", "gnmu", "rnmu", "snmf"};
    std::vector<std::string> cell_rows{"method,seed,error_plain"};
    std::vector<RunRecord> table;
    std::vector<std::string> failures;
    double gnmu_sv = 0.0, gnmu_sw = 0.0;
    bool have_gnmu = false;

    for (const auto& method : methods) {
        std::optional<RunRecord> best;
        nmu::FactorPair best_pair;
        for (std::uint64_t seed : seeds) {
            FactorizeOptions o = base;
            o.method = method;
            o.seed = seed;
            if (method == "snmf" && have_gnmu) {
                // the paper's protocol: sNMF chases the sparsity G-NMU achieved
                o.target_sv = gnmu_sv / 100.0;
                o.target_sw = gnmu_sw / 100.0;
            }
            try {
                auto [pair, rec] = run_method(m, o);
                cell_rows.push_back(method + ',' + std::to_string(seed) + ',' +
                                    pct(rec.rep.error_plain));
                if (!best || rec.rep.error_plain < best->rep.error_plain) {
                    best = rec;
                    best_pair = pair;
                }
            } catch (const std::exception& e) {
                failures.push_back(method + " seed " + std::to_string(seed) + ": " + e.what());
            }
        }
        if (!best) {
            failures.push_back(method + ": no successful run");
            continue;
        }
        if (method == "gnmu") {
            gnmu_sv = best->rep.s_v;
            gnmu_sw = best->rep.s_w;
            have_gnmu = true;
        }
        if (refit_sweeps > 0) {
            const nmu::FactorPair improved =
                nmu::refit_on_pattern(m, best_pair, refit_sweeps, base.threshold);
            best->rep.error_improved = nmu::relative_error(m, improved.v, improved.w);
        }
        nmu::save_matrix(best_pair.v,
                         (fs::path(base.out_dir) / ("V_" + method + ".mat")).string());
        nmu::save_matrix(best_pair.w,
                         (fs::path(base.out_dir) / ("W_" + method + ".mat")).string());
        table.push_back(*best);
    }

    std::vector<std::string> csv{"method,best_seed,error_plain,error_improved,s_v,s_w,sh_v,sh_w"};
    std::printf("%-6s %10s %10s %8s %8s %8s %8s\n", "method", "plain", "improved", "s(V)",
                "s(W)", "sh(V)", "sh(W)");
    for (const auto& r : table) {
        csv.push_back(r.method + ',' + std::to_string(r.seed) + ',' + pct(r.rep.error_plain) +
                      ',' + opt_pct(r.rep.error_improved) + ',' + pct(r.rep.s_v) + ',' +
                      pct(r.rep.s_w) + ',' + pct(r.rep.sh_v) + ',' + pct(r.rep.sh_w));
        std::printf("%-6s %10s %10s %8s %8s %8s %8s\n", r.method.c_str(),
                    pct(r.rep.error_plain).c_str(), opt_pct(r.rep.error_improved).c_str(),
                    pct(r.rep.s_v).c_str(), pct(r.rep.s_w).c_str(), pct(r.rep.sh_v).c_str(),
                    pct(r.rep.sh_w).c_str());
    }
    write_lines(fs::path(base.out_dir) / "compare.csv", csv);
    write_lines(fs::path(base.out_dir) / "cells.csv", cell_rows);

    for (const auto& f : failures) std::cerr << "error: " << f << '\n';
    return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nmukit — nonnegative matrix underapproximation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file (flags take precedence)");

    std::string gen_out;
    auto* gen = app.add_subcommand("gen-swimmer", "write the swimmer dataset as a matrix file");
    gen->add_option("out", gen_out, "output matrix path")->required();

    FactorizeOptions fo;
    auto* fact = app.add_subcommand("factorize", "run one factorization method");
    fact->add_option("input", fo.in_path, "input matrix file")->required();
    fact->add_option("--method", fo.method, "nmf | gnmu | rnmu | snmf")
        ->check(CLI::IsMember({"nmf", "gnmu", "rnmu", "snmf"}));
    fact->add_option("--rank", fo.rank, "factorization rank");
    fact->add_option("--seed", fo.seed, "rng seed")->envname("NMUKIT_SEED");
    int fact_maxiter = -1;
    fact->add_option("--maxiter", fact_maxiter,
                     "outer iterations for gnmu/rnmu (defaults 240/180)");
    fact->add_option("--sweeps", fo.sweeps, "HALS sweeps for nmf/snmf (default 600)");
    fact->add_option("--t-inner", fo.t_inner, "HALS sweeps per multiplier update (default 2)");
    fact->add_option("--threshold", fo.threshold, "zero-rounding ratio (default 1e-3)");
    fact->add_option("--target-sv", fo.target_sv, "snmf sparsity target for V, in [0,1]");
    fact->add_option("--target-sw", fo.target_sw, "snmf sparsity target for W, in [0,1]");
    fact->add_flag("--no-repair", fo.no_repair, "skip the feasibility repair (gnmu/rnmu)");
    fact->add_flag("--repair-w", fo.repair_w, "also repair W during the feasibility repair");
    fact->add_option("--refit-sweeps", fo.refit_sweeps,
                     "masked refit sweeps for the improved error (0 = off)");
    fact->add_option("--out-dir", fo.out_dir, "output directory (default .)");

    FactorizeOptions co;
    std::vector<std::uint64_t> seeds;
    int compare_refit = 100;
    int compare_maxiter = -1;
    auto* comp = app.add_subcommand("compare", "run every method, keep the best seed each");
    comp->add_option("input", co.in_path, "input matrix file")->required();
    comp->add_option("--rank", co.rank, "factorization rank");
    comp->add_option("--seeds", seeds, "seed list (default 1..10)")->delimiter(',');
    comp->add_option("--sweeps", co.sweeps, "HALS sweeps for nmf/snmf (default 600)");
    comp->add_option("--maxiter", compare_maxiter,
                     "outer iterations for gnmu/rnmu (defaults 240/180)");
    comp->add_option("--t-inner", co.t_inner, "HALS sweeps per multiplier update");
    comp->add_option("--threshold", co.threshold, "zero-rounding ratio (default 1e-3)");
    comp->add_flag("--no-repair", co.no_repair, "skip the feasibility repair (gnmu/rnmu)");
    comp->add_option("--refit-sweeps", compare_refit,
                     "refit sweeps for the improved column (default 100)");
    comp->add_option("--out-dir", co.out_dir, "output directory (default .)");

    std::string met_m, met_v, met_w;
    double met_threshold = 1e-3;
    auto* met = app.add_subcommand("metrics", "report errors and sparsity of existing factors");
    met->add_option("matrix", met_m, "input matrix file")->required();
    met->add_option("v", met_v, "V factor file")->required();
    met->add_option("w", met_w, "W factor file")->required();
    met->add_option("--threshold", met_threshold, "zero-rounding ratio (default 1e-3)");

    std::string rep_m, rep_v, rep_w, rep_out = ".";
    bool rep_w_flag = false;
    auto* rep = app.add_subcommand("repair", "restore feasibility VW <= M for existing factors");
    rep->add_option("matrix", rep_m, "input matrix file")->required();
    rep->add_option("v", rep_v, "V factor file")->required();
    rep->add_option("w", rep_w, "W factor file")->required();
    rep->add_flag("--repair-w", rep_w_flag, "also repair W");
    rep->add_option("--out-dir", rep_out, "output directory (default .)");

    std::string mos_v, mos_out;
    std::size_t mos_h = 0, mos_w = 0, mos_grid = 4;
    auto* mos = app.add_subcommand("mosaic", "render basis columns as a PGM grid");
    mos->add_option("v", mos_v, "V factor file")->required();
    mos->add_option("out", mos_out, "output PGM path")->required();
    mos->add_option("--height", mos_h, "tile height in pixels")->required();
    mos->add_option("--width", mos_w, "tile width in pixels")->required();
    mos->add_option("--grid-cols", mos_grid, "tiles per mosaic row (default 4)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_swimmer(gen_out);
        if (fact->parsed()) {
            if (fact_maxiter >= 0) fo.maxiter = fact_maxiter;
            return cmd_factorize(fo);
        }
        if (comp->parsed()) {
            if (compare_maxiter >= 0) co.maxiter = compare_maxiter;
            if (seeds.empty())
                for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
            return cmd_compare(co, seeds, compare_refit);
        }
        if (met->parsed()) return cmd_metrics(met_m, met_v, met_w, met_threshold);
        if (rep->parsed()) return cmd_repair(rep_m, rep_v, rep_w, rep_w_flag, rep_out);
        if (mos->parsed()) return cmd_mosaic(mos_v, mos_h, mos_w, mos_grid, mos_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
