#ifndef NMU_ORACLE_HPP
#define NMU_ORACLE_HPP

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nmu/matrix.hpp"

namespace nmu {

// Complete bipartite subgraph of a binary matrix: M(i,j) = 1 for every
// i in rows, j in cols. edges = |rows| * |cols|.
struct Biclique {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    std::size_t edges = 0;
};

struct Rank1NmuSolution {
    std::vector<double> v;  // binary indicator, length m
    std::vector<double> w;  // binary indicator, length n
    std::size_t sq_error = 0;
};

namespace detail {

inline void require_binary(const Mat& m, const char* where) {
    for (double x : m.data())
        if (x != 0.0 && x != 1.0)
            throw std::invalid_argument(std::string(where) + ": matrix is not binary");
}

// ascending index sequences of equal length, first differing element decides
inline bool subset_lex_less(std::uint32_t a, std::uint32_t b) {
    while (a != 0 && b != 0) {
        const int la = std::countr_zero(a);
        const int lb = std::countr_zero(b);
        if (la != lb) return la < lb;
        a &= a - 1;
        b &= b - 1;
    }
    return false;
}

}  // namespace detail

// Exhaustive maximum edge biclique over all nonempty row subsets (the smaller
// dimension is enumerated, transposing if needed). Ties break toward more
// rows, then the lexicographically smallest row set, so results are
// deterministic. Enumerated dimension is limited to 22.
inline Biclique max_edge_biclique(const Mat& mbin) {
    require_nonempty(mbin, "max_edge_biclique");
    detail::require_binary(mbin, "max_edge_biclique");

    const bool transposed = mbin.cols() < mbin.rows();
    const Mat work = transposed ? transpose(mbin) : mbin;
    const std::size_t m = work.rows(), n = work.cols();
    if (m > 22)
        throw std::invalid_argument("max_edge_biclique: enumerated dimension exceeds 22 rows");

    std::vector<std::uint32_t> colmask(n, 0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            if (work(i, j) == 1.0) colmask[j] |= (1u << i);

    std::uint32_t best_rows = 0;
    std::size_t best_edges = 0;
    std::size_t best_size = 0;
    bool have_best = false;

    const std::uint32_t full = (1u << m) - 1u;
    for (std::uint32_t s = 1; s <= full; ++s) {
        std::size_t jcount = 0;
        for (std::size_t j = 0; j < n; ++j)
            if ((colmask[j] & s) == s) ++jcount;
        const std::size_t isize = static_cast<std::size_t>(std::popcount(s));
        const std::size_t edges = isize * jcount;
        const bool better =
            !have_best || edges > best_edges ||
            (edges == best_edges &&
             (isize > best_size ||
              (isize == best_size && detail::subset_lex_less(s, best_rows))));
        if (better) {
            best_rows = s;
            best_edges = edges;
            best_size = isize;
            have_best = true;
        }
    }

    Biclique out;
    for (std::size_t i = 0; i < m; ++i)
        if (best_rows & (1u << i)) out.rows.push_back(i);
    for (std::size_t j = 0; j < n; ++j)
        if ((colmask[j] & best_rows) == best_rows) out.cols.push_back(j);
    out.edges = out.rows.size() * out.cols.size();
    if (transposed) std::swap(out.rows, out.cols);
    return out;
}

// Exact rank-one NMU on a binary matrix: the optimum is the indicator pair of
// a maximum edge biclique, with squared error nnz(M) − edges (every covered
// one costs nothing, every uncovered one costs 1, zeros are untouched).
inline Rank1NmuSolution optimal_rank1_nmu_binary(const Mat& mbin) {
    const Biclique bc = max_edge_biclique(mbin);
    std::size_t nnz = 0;
    for (double x : mbin.data())
        if (x == 1.0) ++nnz;

    Rank1NmuSolution sol;
    sol.v.assign(mbin.rows(), 0.0);
    sol.w.assign(mbin.cols(), 0.0);
    if (bc.edges > 0) {
        for (std::size_t i : bc.rows) sol.v[i] = 1.0;
        for (std::size_t j : bc.cols) sol.w[j] = 1.0;
    }
    sol.sq_error = nnz - bc.edges;
    return sol;
}

}  // namespace nmu

#endif  // NMU_ORACLE_HPP
