#ifndef NMU_HALS_HPP
#define NMU_HALS_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "nmu/matrix.hpp"
#include "nmu/metrics.hpp"

namespace nmu {

// Rank-r factorization V (m×r) · W (r×n), both factors nonnegative.
struct FactorPair {
    Mat v;
    Mat w;
    std::size_t rank() const { return v.cols(); }
};

// Uniform draw on (0,1]; zero is excluded so random starts are never degenerate.
inline double uniform_open01(std::mt19937_64& rng) {
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline FactorPair random_pair(std::size_t m, std::size_t n, std::size_t r,
                              std::mt19937_64& rng) {
    FactorPair p{Mat(m, r), Mat(r, n)};
    for (double& x : p.v.data()) x = uniform_open01(rng);
    for (double& x : p.w.data()) x = uniform_open01(rng);
    return p;
}

namespace detail {

inline void require_pair_shapes(const Mat& n, const FactorPair& p, const char* where) {
    if (p.v.rows() != n.rows() || p.w.cols() != n.cols() || p.v.cols() != p.w.rows() ||
        p.v.cols() == 0)
        throw std::invalid_argument(std::string(where) + ": factor shapes do not conform");
}

}  // namespace detail

// Rescales W by α = ⟨M,VW⟩/⟨VW,VW⟩ so that ⟨M,VW⟩ = ⟨VW,VW⟩ afterwards. A zero
// product or nonpositive α triggers a fresh random pair; after 10 failed
// attempts the call gives up (this happens iff the target is essentially zero).
inline void scale_initial(const Mat& m, FactorPair& pair, std::mt19937_64& rng) {
    detail::require_pair_shapes(m, pair, "scale_initial");
    for (int attempt = 0; attempt < 10; ++attempt) {
        const Mat p = matmul(pair.v, pair.w);
        const double den = inner_product(p, p);
        if (den > 0.0) {
            const double alpha = inner_product(m, p) / den;
            if (alpha > 0.0) {
                for (double& x : pair.w.data()) x *= alpha;
                return;
            }
        }
        pair = random_pair(m.rows(), m.cols(), pair.rank(), rng);
    }
    throw std::runtime_error("scale_initial: no positive scaling found (zero target?)");
}

namespace detail {

// ‖W_k:‖² or ‖V_:k‖² below this means the rank-one factor is dead and needs rescue
constexpr double kDegenerateTol = 1e-15;

inline void compute_v_caches(const Mat& n, const Mat& w, Mat& a, Mat& b) {
    const std::size_t m = n.rows(), nc = n.cols(), r = w.rows();
    a = Mat(m, r);
    b = Mat(r, r);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ni = n.row(i);
        for (std::size_t k = 0; k < r; ++k) {
            const double* wk = w.row(k);
            double s = 0.0;
            for (std::size_t j = 0; j < nc; ++j) s += ni[j] * wk[j];
            a(i, k) = s;
        }
    }
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t l = k; l < r; ++l) {
            const double* wk = w.row(k);
            const double* wl = w.row(l);
            double s = 0.0;
            for (std::size_t j = 0; j < nc; ++j) s += wk[j] * wl[j];
            b(k, l) = s;
            b(l, k) = s;
        }
}

inline void compute_w_caches(const Mat& n, const Mat& v, Mat& c, Mat& d) {
    const std::size_t m = n.rows(), nc = n.cols(), r = v.cols();
    c = Mat(r, nc);
    d = Mat(r, r);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ni = n.row(i);
        const double* vi = v.row(i);
        for (std::size_t k = 0; k < r; ++k) {
            const double vik = vi[k];
            if (vik == 0.0) continue;
            double* ck = c.row(k);
            for (std::size_t j = 0; j < nc; ++j) ck[j] += vik * ni[j];
        }
        for (std::size_t k = 0; k < r; ++k)
            for (std::size_t l = k; l < r; ++l) d(k, l) += vi[k] * vi[l];
    }
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t l = 0; l < k; ++l) d(k, l) = d(l, k);
}

// Replaces dead factor k by a fresh random rank-one pair rescaled with the
// per-factor least-squares scalar against the current residual. The dead
// factor contributed nothing, so the objective cannot increase: the rescale is
// applied only when its α is positive, otherwise the W side is parked at zero.
inline void rescue_factor(const Mat& n, FactorPair& p, std::size_t k, std::mt19937_64& rng) {
    const std::size_t m = n.rows(), nc = n.cols();
    const Mat prod = matmul(p.v, p.w);
    std::vector<double> v(m), w(nc);
    for (double& x : v) x = uniform_open01(rng);
    for (double& x : w) x = uniform_open01(rng);

    double vrw = 0.0, vv = 0.0, ww = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* ni = n.row(i);
        const double* pi = prod.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < nc; ++j) s += (ni[j] - pi[j]) * w[j];
        vrw += v[i] * s;
        vv += v[i] * v[i];
    }
    for (std::size_t j = 0; j < nc; ++j) ww += w[j] * w[j];

    const double alpha = vrw / (vv * ww);
    for (std::size_t i = 0; i < m; ++i) p.v(i, k) = v[i];
    for (std::size_t j = 0; j < nc; ++j) p.w(k, j) = alpha > 0.0 ? alpha * w[j] : 0.0;
}

// One full HALS sweep on target n (which may carry negative entries): closed
// form update of every column of V, then of every row of W, with caches
// recomputed once per half-sweep. mu_v / mu_w shift the update numerators (l1
// penalty). Masks, when given, pin entries to zero. rng enables the
// degenerate-factor rescue; without it dead factors are left untouched.
inline int hals_core(const Mat& n, FactorPair& p, double mu_v, double mu_w,
                     const std::vector<std::uint8_t>* mask_v,
                     const std::vector<std::uint8_t>* mask_w, std::mt19937_64* rng) {
    require_pair_shapes(n, p, "hals_sweep");
    const std::size_t m = n.rows(), nc = n.cols(), r = p.rank();
    int rescues = 0;

    Mat a, b;
    compute_v_caches(n, p.w, a, b);
    for (std::size_t k = 0; k < r; ++k) {
        if (b(k, k) < kDegenerateTol) {
            if (!rng) continue;
            rescue_factor(n, p, k, *rng);
            ++rescues;
            compute_v_caches(n, p.w, a, b);
            if (b(k, k) < kDegenerateTol) continue;  // rescue parked W_k: at zero
        }
        const double bkk = b(k, k);
        for (std::size_t i = 0; i < m; ++i) {
            if (mask_v && !(*mask_v)[i * r + k]) {
                p.v(i, k) = 0.0;
                continue;
            }
            double num = a(i, k) - mu_v;
            const double* vi = p.v.row(i);
            for (std::size_t l = 0; l < r; ++l)
                if (l != k) num -= vi[l] * b(l, k);
            p.v(i, k) = num > 0.0 ? num / bkk : 0.0;
        }
    }

    Mat c, d;
    compute_w_caches(n, p.v, c, d);
    for (std::size_t k = 0; k < r; ++k) {
        if (d(k, k) < kDegenerateTol) {
            if (!rng) continue;
            rescue_factor(n, p, k, *rng);
            ++rescues;
            compute_w_caches(n, p.v, c, d);
            if (d(k, k) < kDegenerateTol) continue;
        }
        const double dkk = d(k, k);
        for (std::size_t j = 0; j < nc; ++j) {
            if (mask_w && !(*mask_w)[k * nc + j]) {
                p.w(k, j) = 0.0;
                continue;
            }
            double num = c(k, j) - mu_w;
            for (std::size_t l = 0; l < r; ++l)
                if (l != k) num -= d(k, l) * p.w(l, j);
            p.w(k, j) = num > 0.0 ? num / dkk : 0.0;
        }
    }
    return rescues;
}

}  // namespace detail

// One HALS sweep minimizing ‖N − VW‖_F² blockwise; N may contain negative
// entries. Returns the number of degenerate-factor rescues performed.
inline int hals_sweep(const Mat& n, FactorPair& pair, std::mt19937_64& rng) {
    return detail::hals_core(n, pair, 0.0, 0.0, nullptr, nullptr, &rng);
}

// l1-penalized sweep: update numerators are shifted by mu_v / mu_w, the exact
// blockwise minimizer of ½‖M − VW‖_F² + mu_v‖V‖₁ + mu_w‖W‖₁.
inline int hals_penalized_sweep(const Mat& m, FactorPair& pair, double mu_v, double mu_w,
                                std::mt19937_64& rng) {
    if (mu_v < 0.0 || mu_w < 0.0)
        throw std::invalid_argument("hals_penalized_sweep: negative penalty");
    return detail::hals_core(m, pair, mu_v, mu_w, nullptr, nullptr, &rng);
}

// Plain NMF driver: random (0,1] initialization, least-squares scaling, then
// the requested number of HALS sweeps. Deterministic for a fixed seed.
inline FactorPair nmf(const Mat& m, std::size_t rank, int sweeps, std::uint64_t seed) {
    require_nonempty(m, "nmf");
    if (!is_nonnegative(m)) throw std::invalid_argument("nmf: input must be nonnegative");
    if (rank < 1 || rank >= std::min(m.rows(), m.cols()))
        throw std::invalid_argument("nmf: rank must satisfy 1 <= r < min(m,n)");
    if (sweeps < 0) throw std::invalid_argument("nmf: negative sweep count");
    std::mt19937_64 rng(seed);
    FactorPair pair = random_pair(m.rows(), m.cols(), rank, rng);
    scale_initial(m, pair, rng);
    for (int s = 0; s < sweeps; ++s) hals_sweep(m, pair, rng);
    return pair;
}

// Freezes the thresholded zero pattern of the pair and re-optimizes only the
// surviving entries with masked HALS sweeps. Entries below threshold_ratio of
// their column (V) / row (W) peak are rounded to zero first and never return.
inline FactorPair refit_on_pattern(const Mat& m, FactorPair pair, int sweeps = 100,
                                   double threshold_ratio = 1e-3) {
    detail::require_pair_shapes(m, pair, "refit_on_pattern");
    const std::size_t mr = pair.v.rows(), r = pair.rank(), nc = pair.w.cols();

    std::vector<std::uint8_t> mask_v(mr * r, 0), mask_w(r * nc, 0);
    for (std::size_t k = 0; k < r; ++k) {
        double colmax = 0.0;
        for (std::size_t i = 0; i < mr; ++i) colmax = std::max(colmax, std::abs(pair.v(i, k)));
        const double thr = threshold_ratio * colmax;
        for (std::size_t i = 0; i < mr; ++i) {
            const double x = pair.v(i, k);
            if (x != 0.0 && std::abs(x) >= thr) mask_v[i * r + k] = 1;
            else pair.v(i, k) = 0.0;
        }
        double rowmax = 0.0;
        for (std::size_t j = 0; j < nc; ++j) rowmax = std::max(rowmax, std::abs(pair.w(k, j)));
        const double wthr = threshold_ratio * rowmax;
        for (std::size_t j = 0; j < nc; ++j) {
            const double x = pair.w(k, j);
            if (x != 0.0 && std::abs(x) >= wthr) mask_w[k * nc + j] = 1;
            else pair.w(k, j) = 0.0;
        }
    }

    for (int s = 0; s < sweeps; ++s)
        detail::hals_core(m, pair, 0.0, 0.0, &mask_v, &mask_w, nullptr);
    return pair;
}

}  // namespace nmu

#endif  // NMU_HALS_HPP
