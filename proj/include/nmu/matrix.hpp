#ifndef NMU_MATRIX_HPP
#define NMU_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmu {

// Dense real matrix, row-major. Shapes are validated by the operations that
// consume them, not at construction.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Mat& a, const Mat& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
}

inline void require_nonempty(const Mat& a, const char* where) {
    if (a.rows() == 0 || a.cols() == 0)
        throw std::invalid_argument(std::string(where) + ": empty matrix");
}

inline bool is_nonnegative(const Mat& a) {
    return std::all_of(a.data().begin(), a.data().end(), [](double x) { return x >= 0.0; });
}

inline double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

inline double inner_product(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "inner_product");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

inline double max_entry(const Mat& a) {
    require_nonempty(a, "max_entry");
    return *std::max_element(a.data().begin(), a.data().end());
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "operator+");
    Mat c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "operator-");
    Mat c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

inline Mat operator*(double s, const Mat& a) {
    Mat c = a;
    for (double& x : c.data()) x *= s;
    return c;
}

// Dominant singular triple of a nonzero matrix.
struct SingularTriple {
    double sigma = 0.0;
    std::vector<double> left;   // unit vector, length rows
    std::vector<double> right;  // unit vector, length cols
    bool converged = false;
};

namespace detail {

inline double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void mat_vec(const Mat& a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
}

inline void mat_tvec(const Mat& a, const std::vector<double>& y, std::vector<double>& z) {
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        const double yi = y[i];
        if (yi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) z[j] += ai[j] * yi;
    }
}

}  // namespace detail

// Power iteration on AᵀA. Starts from the all-ones direction, which is never
// orthogonal to the Perron vector of a nonnegative matrix. Convergence is
// declared when successive sigma estimates differ by less than tol; on budget
// exhaustion the best estimate is returned with converged = false.
inline SingularTriple dominant_singular_pair(const Mat& a, double tol = 1e-10,
                                             int max_sweeps = 10000) {
    require_nonempty(a, "dominant_singular_pair");
    if (frobenius_norm(a) == 0.0)
        throw std::invalid_argument("dominant_singular_pair: zero matrix");

    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> y(m, 0.0), z(n, 0.0);

    auto restart = [&](std::size_t salt) {
        // deterministic restart for signed matrices whose iterate hit a null direction
        for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 + static_cast<double>((j + salt) % 7);
        const double nx = detail::vec_norm(x);
        for (double& v : x) v /= nx;
    };

    double prev_sigma = -1.0;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        detail::mat_vec(a, x, y);
        const double sigma = detail::vec_norm(y);
        if (sigma == 0.0) {
            restart(static_cast<std::size_t>(sweep) + 1);
            prev_sigma = -1.0;
            continue;
        }
        detail::mat_tvec(a, y, z);
        const double zn = detail::vec_norm(z);
        if (zn == 0.0) {
            restart(static_cast<std::size_t>(sweep) + 3);
            prev_sigma = -1.0;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) x[j] = z[j] / zn;
        if (std::abs(sigma - prev_sigma) < tol) {
            converged = true;
            break;
        }
        prev_sigma = sigma;
    }

    detail::mat_vec(a, x, y);
    const double sigma = detail::vec_norm(y);
    if (sigma == 0.0)
        throw std::runtime_error("dominant_singular_pair: breakdown, A x vanished");
    for (double& v : y) v /= sigma;

    // sign convention: the largest-magnitude entry of the left vector is positive
    std::size_t imax = 0;
    for (std::size_t i = 1; i < m; ++i)
        if (std::abs(y[i]) > std::abs(y[imax])) imax = i;
    if (y[imax] < 0.0) {
        for (double& v : y) v = -v;
        for (double& v : x) v = -v;
    }

    return SingularTriple{sigma, std::move(y), std::move(x), converged};
}

}  // namespace nmu

#endif  // NMU_MATRIX_HPP
