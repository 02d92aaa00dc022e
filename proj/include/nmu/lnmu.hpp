#ifndef NMU_LNMU_HPP
#define NMU_LNMU_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "nmu/hals.hpp"
#include "nmu/matrix.hpp"

namespace nmu {

// Knobs of the Lagrangian underapproximation solver. maxiter left unset picks
// the driver default: 240 outer iterations for lnmu/gnmu, 180 per R-NMU stage.
struct LnmuConfig {
    std::size_t rank = 1;
    std::optional<int> maxiter;
    int t_inner = 2;  // HALS sweeps between multiplier updates
    std::uint64_t seed = 1;
    bool repair = true;
    bool repair_w = false;  // also repair W inside repair_underapprox
    int refit_sweeps = 0;   // pattern refit after the run (0 = off)
};

struct LnmuResult {
    FactorPair pair;
    Mat lambda;                           // multipliers, entrywise >= 0
    double max_violation = 0.0;           // max(0, max entry of VW - M)
    std::vector<double> lagrangian_trace; // one L value per outer iteration
};

// Rank-one stages of the recursive driver: residuals R_1..R_{k+1} and the
// extracted (v, w) pairs. extracted_rank < r means a residual hit zero early
// and the remaining factors stayed zero.
struct ResidualStack {
    std::vector<Mat> residuals;
    std::vector<std::pair<Mat, Mat>> factors;  // (m×1, 1×n) per stage
    std::size_t extracted_rank = 0;
};

namespace detail {

inline double lagrangian_given_product(const Mat& m, const Mat& p, const Mat& lambda) {
    double half_err = 0.0, pen = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m.data()[i] - p.data()[i];
        half_err += d * d;
        pen += lambda.data()[i] * (p.data()[i] - m.data()[i]);
    }
    return 0.5 * half_err + pen;
}

}  // namespace detail

// L(V,W,Λ) = ½‖M − VW‖_F² + Σ_ij Λ_ij (VW − M)_ij
inline double lagrangian_value(const Mat& m, const Mat& v, const Mat& w, const Mat& lambda) {
    require_same_shape(m, lambda, "lagrangian_value");
    const Mat p = matmul(v, w);
    require_same_shape(m, p, "lagrangian_value");
    return detail::lagrangian_given_product(m, p, lambda);
}

// Projected subgradient step on the multipliers: max(0, Λ − (1/k)(M − VW)).
inline Mat update_multipliers(const Mat& lambda, const Mat& m, const Mat& v, const Mat& w,
                              int k) {
    if (k < 1) throw std::invalid_argument("update_multipliers: k must be >= 1");
    require_same_shape(m, lambda, "update_multipliers");
    const Mat p = matmul(v, w);
    require_same_shape(m, p, "update_multipliers");
    Mat out = lambda;
    const double step = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = out.data()[i] - step * (m.data()[i] - p.data()[i]);
        out.data()[i] = x > 0.0 ? x : 0.0;
    }
    return out;
}

inline double max_violation(const Mat& m, const FactorPair& pair) {
    const Mat p = matmul(pair.v, pair.w);
    require_same_shape(m, p, "max_violation");
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        worst = std::max(worst, p.data()[i] - m.data()[i]);
    return worst;
}

using LnmuObserver = std::function<void(int iteration, const FactorPair&, const Mat& lambda)>;

namespace detail {

inline LnmuResult lnmu_impl(const Mat& m, std::size_t rank, int maxiter, int t_inner,
                            std::mt19937_64& rng, const LnmuObserver& observer) {
    require_nonempty(m, "lnmu");
    if (!is_nonnegative(m)) throw std::invalid_argument("lnmu: input must be nonnegative");
    if (rank < 1 || rank >= std::min(m.rows(), m.cols()))
        throw std::invalid_argument("lnmu: rank must satisfy 1 <= r < min(m,n)");
    if (maxiter < 1) throw std::invalid_argument("lnmu: maxiter must be >= 1");
    if (t_inner < 1) throw std::invalid_argument("lnmu: t_inner must be >= 1");

    FactorPair pair = random_pair(m.rows(), m.cols(), rank, rng);
    scale_initial(m, pair, rng);

    Mat lambda(m.rows(), m.cols());
    Mat target(m.rows(), m.cols());
    Mat prod;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(maxiter));

    for (int k = 1; k <= maxiter; ++k) {
        for (std::size_t i = 0; i < m.size(); ++i)
            target.data()[i] = m.data()[i] - lambda.data()[i];
        for (int t = 0; t < t_inner; ++t) hals_sweep(target, pair, rng);

        prod = matmul(pair.v, pair.w);
        trace.push_back(lagrangian_given_product(m, prod, lambda));

        const double step = 1.0 / static_cast<double>(k);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double x = lambda.data()[i] - step * (m.data()[i] - prod.data()[i]);
            lambda.data()[i] = x > 0.0 ? x : 0.0;
        }
        if (observer) observer(k, pair, lambda);
    }

    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        worst = std::max(worst, prod.data()[i] - m.data()[i]);
    return LnmuResult{std::move(pair), std::move(lambda), worst, std::move(trace)};
}

}  // namespace detail

// Algorithm L-NMU: Λ starts at zero; each outer iteration runs t_inner HALS
// sweeps on N = M − Λ, then a projected subgradient step on Λ with step 1/k.
// No repair or refit is applied here; see gnmu/rnmu for the full pipelines.
inline LnmuResult lnmu(const Mat& m, const LnmuConfig& cfg, const LnmuObserver& observer = {}) {
    std::mt19937_64 rng(cfg.seed);
    return detail::lnmu_impl(m, cfg.rank, cfg.maxiter.value_or(240), cfg.t_inner, rng,
                             observer);
}

// Restores exact feasibility VW <= M by cyclic coordinate descent over the
// entries of V (and of W when repair_w is set), each update being the
// closed-form minimizer clipped into its feasibility box [0, u]. The first
// pass only clips the starting point into the feasible region; descent sweeps
// then run until the largest entry change drops below tol.
inline FactorPair repair_underapprox(const Mat& m, FactorPair pair, bool repair_w = false,
                                     double tol = 1e-10, int max_sweeps = 200) {
    detail::require_pair_shapes(m, pair, "repair_underapprox");
    const std::size_t mr = m.rows(), nc = m.cols(), r = pair.rank();
    Mat& v = pair.v;
    Mat& w = pair.w;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    auto update_v_entry = [&](std::size_t i, std::size_t k, bool descend) {
        double num = 0.0, den = 0.0, ub = kInf;
        for (std::size_t j = 0; j < nc; ++j) {
            const double wkj = w(k, j);
            if (wkj <= 0.0) continue;
            double t = m(i, j);
            for (std::size_t l = 0; l < r; ++l)
                if (l != k) t -= v(i, l) * w(l, j);
            ub = std::min(ub, t / wkj);
            num += t * wkj;
            den += wkj * wkj;
        }
        if (den == 0.0) return 0.0;  // zero row of W: entry unconstrained and inert
        const double hi = ub > 0.0 ? ub : 0.0;
        double cand = descend ? num / den : v(i, k);
        if (cand < 0.0) cand = 0.0;
        if (cand > hi) cand = hi;
        const double delta = std::abs(cand - v(i, k));
        v(i, k) = cand;
        return delta;
    };

    auto update_w_entry = [&](std::size_t k, std::size_t j) {
        double num = 0.0, den = 0.0, ub = kInf;
        for (std::size_t i = 0; i < mr; ++i) {
            const double vik = v(i, k);
            if (vik <= 0.0) continue;
            double t = m(i, j);
            for (std::size_t l = 0; l < r; ++l)
                if (l != k) t -= v(i, l) * w(l, j);
            ub = std::min(ub, t / vik);
            num += t * vik;
            den += vik * vik;
        }
        if (den == 0.0) return 0.0;
        const double hi = ub > 0.0 ? ub : 0.0;
        double cand = num / den;
        if (cand < 0.0) cand = 0.0;
        if (cand > hi) cand = hi;
        const double delta = std::abs(cand - w(k, j));
        w(k, j) = cand;
        return delta;
    };

    for (std::size_t i = 0; i < mr; ++i)
        for (std::size_t k = 0; k < r; ++k) update_v_entry(i, k, false);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < mr; ++i)
            for (std::size_t k = 0; k < r; ++k)
                change = std::max(change, update_v_entry(i, k, true));
        if (repair_w)
            for (std::size_t k = 0; k < r; ++k)
                for (std::size_t j = 0; j < nc; ++j)
                    change = std::max(change, update_w_entry(k, j));
        if (change < tol) break;
    }
    return pair;
}

// Global NMU: L-NMU on the rank-r problem (default budget 240), followed by
// the feasibility repair and an optional pattern refit.
inline LnmuResult gnmu(const Mat& m, const LnmuConfig& cfg) {
    LnmuConfig c = cfg;
    if (!c.maxiter) c.maxiter = 240;
    LnmuResult res = lnmu(m, c);
    if (cfg.repair) {
        res.pair = repair_underapprox(m, res.pair, cfg.repair_w);
        res.max_violation = max_violation(m, res.pair);
    }
    if (cfg.refit_sweeps > 0) {
        // the refit trades feasibility for error, mirroring the "improved" column
        res.pair = refit_on_pattern(m, res.pair, cfg.refit_sweeps);
        res.max_violation = max_violation(m, res.pair);
    }
    return res;
}

// Recursive NMU: r successive rank-one L-NMU stages (default budget 180 each)
// on the running residual, each repaired to feasibility; residuals are clipped
// at zero to absorb float dust before the next stage.
inline std::pair<FactorPair, ResidualStack> rnmu(const Mat& m, const LnmuConfig& cfg) {
    require_nonempty(m, "rnmu");
    if (!is_nonnegative(m)) throw std::invalid_argument("rnmu: input must be nonnegative");
    const std::size_t r = cfg.rank;
    if (r < 1 || r >= std::min(m.rows(), m.cols()))
        throw std::invalid_argument("rnmu: rank must satisfy 1 <= r < min(m,n)");
    const int stage_iters = cfg.maxiter.value_or(180);

    // one rng stream across stages: stage 1 reproduces a rank-one gnmu run bitwise
    std::mt19937_64 rng(cfg.seed);

    FactorPair out{Mat(m.rows(), r), Mat(r, m.cols())};
    ResidualStack stack;
    stack.residuals.push_back(m);

    Mat residual = m;
    for (std::size_t k = 0; k < r; ++k) {
        if (frobenius_norm(residual) == 0.0) break;  // remaining factors stay zero
        LnmuResult stage = detail::lnmu_impl(residual, 1, stage_iters, cfg.t_inner, rng, {});
        if (cfg.repair) stage.pair = repair_underapprox(residual, stage.pair, cfg.repair_w);

        Mat vk(m.rows(), 1), wk(1, m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            vk(i, 0) = stage.pair.v(i, 0);
            out.v(i, k) = vk(i, 0);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            wk(0, j) = stage.pair.w(0, j);
            out.w(k, j) = wk(0, j);
        }

        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const double x = residual(i, j) - vk(i, 0) * wk(0, j);
                residual(i, j) = x > 0.0 ? x : 0.0;
            }

        stack.factors.emplace_back(std::move(vk), std::move(wk));
        stack.residuals.push_back(residual);
        stack.extracted_rank = k + 1;
    }
    return {std::move(out), std::move(stack)};
}

}  // namespace nmu

#endif  // NMU_LNMU_HPP
