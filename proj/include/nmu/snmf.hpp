#ifndef NMU_SNMF_HPP
#define NMU_SNMF_HPP

#include <cstdint>
#include <random>
#include <stdexcept>

#include "nmu/hals.hpp"
#include "nmu/matrix.hpp"
#include "nmu/metrics.hpp"

namespace nmu {

struct SnmfConfig {
    std::size_t rank = 1;
    int sweeps = 600;
    double target_sv = 0.0;  // fraction in [0,1]
    double target_sw = 0.0;
    double mu_init = 0.1;
    double step_pct = 5.0;
    std::uint64_t seed = 1;
    double threshold_ratio = 1e-3;  // used when measuring achieved sparsity
};

struct SnmfResult {
    FactorPair pair;
    double mu_v = 0.0;
    double mu_w = 0.0;
    int rescues = 0;        // penalty-killed factors that were reinitialized
    bool mu_capped = false; // a penalty hit the overflow cap
};

// l1-penalized NMF whose penalties chase target sparsity levels: after every
// sweep each penalty is raised by step_pct percent when its factor is below
// target and lowered otherwise. Penalties stay strictly positive and are
// capped at 1e6 to keep pathological target-1 runs finite.
inline SnmfResult adaptive_snmf(const Mat& m, const SnmfConfig& cfg) {
    require_nonempty(m, "adaptive_snmf");
    if (!is_nonnegative(m))
        throw std::invalid_argument("adaptive_snmf: input must be nonnegative");
    if (cfg.rank < 1 || cfg.rank >= std::min(m.rows(), m.cols()))
        throw std::invalid_argument("adaptive_snmf: rank must satisfy 1 <= r < min(m,n)");
    if (cfg.sweeps < 0) throw std::invalid_argument("adaptive_snmf: negative sweep count");
    if (cfg.mu_init <= 0.0 || cfg.step_pct <= 0.0)
        throw std::invalid_argument("adaptive_snmf: mu_init and step_pct must be positive");
    if (cfg.target_sv < 0.0 || cfg.target_sv > 1.0 || cfg.target_sw < 0.0 ||
        cfg.target_sw > 1.0)
        throw std::invalid_argument("adaptive_snmf: targets must lie in [0,1]");

    constexpr double kMuCap = 1e6;
    const double up = 1.0 + cfg.step_pct / 100.0;
    const double down = 1.0 - cfg.step_pct / 100.0;

    std::mt19937_64 rng(cfg.seed);
    SnmfResult res;
    res.pair = random_pair(m.rows(), m.cols(), cfg.rank, rng);
    scale_initial(m, res.pair, rng);
    res.mu_v = cfg.mu_init;
    res.mu_w = cfg.mu_init;

    for (int s = 0; s < cfg.sweeps; ++s) {
        res.rescues += hals_penalized_sweep(m, res.pair, res.mu_v, res.mu_w, rng);
        // renormalize so scale cannot drift into the less-penalized factor,
        // which would otherwise neutralize the other penalty
        for (std::size_t k = 0; k < cfg.rank; ++k) {
            double c = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i) c += res.pair.v(i, k) * res.pair.v(i, k);
            c = std::sqrt(c);
            if (c == 0.0) continue;
            for (std::size_t i = 0; i < m.rows(); ++i) res.pair.v(i, k) /= c;
            for (std::size_t j = 0; j < m.cols(); ++j) res.pair.w(k, j) *= c;
        }
        const double sv = plain_sparsity(res.pair.v, cfg.threshold_ratio);
        const double sw = plain_sparsity(transpose(res.pair.w), cfg.threshold_ratio);
        res.mu_v *= (sv < cfg.target_sv) ? up : down;
        res.mu_w *= (sw < cfg.target_sw) ? up : down;
        if (res.mu_v > kMuCap) {
            res.mu_v = kMuCap;
            res.mu_capped = true;
        }
        if (res.mu_w > kMuCap) {
            res.mu_w = kMuCap;
            res.mu_capped = true;
        }
    }
    return res;
}

}  // namespace nmu

#endif  // NMU_SNMF_HPP
