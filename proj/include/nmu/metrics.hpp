#ifndef NMU_METRICS_HPP
#define NMU_METRICS_HPP

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include "nmu/matrix.hpp"

namespace nmu {

// One table row of approximation-error and sparsity figures, all in percent.
struct SparsityReport {
    double error_plain = 0.0;
    double error_scaled = 0.0;
    std::optional<double> error_improved;  // filled by a pattern refit, when run
    double s_v = 0.0;
    double s_w = 0.0;
    double sh_v = 0.0;
    double sh_w = 0.0;
};

// Fraction of zero entries, counted column-wise: an entry is a zero iff it is
// exactly 0 or its magnitude is below threshold_ratio times the largest
// magnitude in its column. Exact zeros always count, so threshold_ratio 0
// reduces to plain zero counting.
inline double plain_sparsity(const Mat& a, double threshold_ratio = 1e-3) {
    require_nonempty(a, "plain_sparsity");
    if (threshold_ratio < 0.0)
        throw std::invalid_argument("plain_sparsity: negative threshold_ratio");
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double colmax = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) colmax = std::max(colmax, std::abs(a(i, j)));
        const double thr = threshold_ratio * colmax;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double v = a(i, j);
            if (v == 0.0 || std::abs(v) < thr) ++zeros;
        }
    }
    return static_cast<double>(zeros) / static_cast<double>(a.size());
}

// (√n − ‖x‖₁/‖x‖₂) / (√n − 1): 1 for a single spike, 0 for a constant vector.
inline double hoyer_sparsity(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("hoyer_sparsity: need at least 2 entries");
    double l1 = 0.0, l2 = 0.0;
    for (double v : x) {
        l1 += std::abs(v);
        l2 += v * v;
    }
    if (l2 == 0.0) throw std::invalid_argument("hoyer_sparsity: zero vector");
    const double sn = std::sqrt(static_cast<double>(n));
    return (sn - l1 / std::sqrt(l2)) / (sn - 1.0);
}

namespace detail {

inline double relative_error_of_product(const Mat& m, const Mat& p) {
    require_same_shape(m, p, "relative_error");
    const double nm = frobenius_norm(m);
    if (nm == 0.0) throw std::invalid_argument("relative_error: zero target matrix");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m.data()[i] - p.data()[i];
        s += d * d;
    }
    return 100.0 * std::sqrt(s) / nm;
}

inline double scaled_relative_error_of_product(const Mat& m, const Mat& p) {
    require_same_shape(m, p, "scaled_relative_error");
    const double nm = frobenius_norm(m);
    if (nm == 0.0) throw std::invalid_argument("scaled_relative_error: zero target matrix");
    const double pp = inner_product(p, p);
    if (pp == 0.0) return 100.0;
    const double alpha = std::max(0.0, inner_product(m, p) / pp);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m.data()[i] - alpha * p.data()[i];
        s += d * d;
    }
    return 100.0 * std::sqrt(s) / nm;
}

}  // namespace detail

// 100 · ‖M − VW‖_F / ‖M‖_F
inline double relative_error(const Mat& m, const Mat& v, const Mat& w) {
    return detail::relative_error_of_product(m, matmul(v, w));
}

// Relative error after replacing VW by α·VW with the least-squares scalar
// α = ⟨M,VW⟩/⟨VW,VW⟩ clamped below at 0. A zero product yields 100.
inline double scaled_relative_error(const Mat& m, const Mat& v, const Mat& w) {
    return detail::scaled_relative_error_of_product(m, matmul(v, w));
}

namespace detail {

// mean Hoyer sparsity over the columns of a (zero columns skipped)
inline double mean_column_hoyer(const Mat& a) {
    double acc = 0.0;
    std::size_t used = 0;
    std::vector<double> col(a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        bool all_zero = true;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            col[i] = a(i, j);
            if (col[i] != 0.0) all_zero = false;
        }
        if (all_zero) continue;
        acc += hoyer_sparsity(col);
        ++used;
    }
    return used == 0 ? 0.0 : acc / static_cast<double>(used);
}

}  // namespace detail

// Assembles one report row. Plain sparsity is thresholded per column of V and
// per row of W; Hoyer sparsity is averaged over the rank-one components.
inline SparsityReport report(const Mat& m, const Mat& v, const Mat& w,
                             double threshold_ratio = 1e-3) {
    const Mat p = matmul(v, w);
    SparsityReport r;
    r.error_plain = detail::relative_error_of_product(m, p);
    r.error_scaled = detail::scaled_relative_error_of_product(m, p);
    const Mat wt = transpose(w);
    r.s_v = 100.0 * plain_sparsity(v, threshold_ratio);
    r.s_w = 100.0 * plain_sparsity(wt, threshold_ratio);
    r.sh_v = 100.0 * detail::mean_column_hoyer(v);
    r.sh_w = 100.0 * detail::mean_column_hoyer(wt);
    return r;
}

}  // namespace nmu

#endif  // NMU_METRICS_HPP
