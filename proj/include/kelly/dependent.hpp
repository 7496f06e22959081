#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kelly/metrics.hpp"
#include "kelly/rng.hpp"
#include "kelly/stats.hpp"

namespace kelly {

// Two-state Markov chain of +/-1 returns:
//   P(r_{k+1}=+1 | r_k=+1) = p,   P(r_{k+1}=-1 | r_k=-1) = q.
// The iid case is p = 1-q.
struct TwoStateChain {
    double p;
    double q;

    TwoStateChain(double p_, double q_) : p(p_), q(q_) {
        if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
            throw std::invalid_argument("TwoStateChain: p and q must lie in (0,1)");
    }

    double stationary_up() const { return (1.0 - q) / (2.0 - p - q); }
    double mixing_rho() const { return p + q - 1.0; }
    double mean_return() const { return (p - q) / (2.0 - p - q); }
};

enum class VarianceMethod { closed_form, batch_means };

struct LongRunVariance {
    double v_tilde = 0.0;
    VarianceMethod method = VarianceMethod::closed_form;
    std::size_t block_length = 0;
    std::optional<double> std_error{};
};

// f* = (p-q)/(2-p-q) = E[r]; without an edge (p <= q) the answer is 0.
inline double chain_kelly(const TwoStateChain& c) {
    if (c.p <= c.q) return 0.0;
    return c.mean_return();
}

// vtilde(f) = (p+q)/(2-p-q) * upsilon(f) with upsilon the stationary
// Bernoulli variance at success probability (1-q)/(2-p-q).
inline LongRunVariance chain_longrun_variance(const TwoStateChain& c, double f) {
    if (!(f > 0.0 && f < 1.0))
        throw std::invalid_argument("chain_longrun_variance: f must lie in (0,1)");
    const double factor = (c.p + c.q) / (2.0 - c.p - c.q);
    const double v = detail::bernoulli_v(c.stationary_up(), f);
    return LongRunVariance{factor * v, VarianceMethod::closed_form, 0, {}};
}

// Stationary-start simulation: r_1 comes from the invariant law, so the CLT
// statements apply from the first step (no burn-in).
inline std::vector<double> simulate_chain(const TwoStateChain& c, std::size_t n,
                                          std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("simulate_chain: n must be >= 1");
    Xoshiro256 rng(seed);
    std::vector<double> out(n);
    bool up = rng.uniform() < c.stationary_up();
    out[0] = up ? 1.0 : -1.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double u = rng.uniform();
        up = up ? (u < c.p) : !(u < c.q);
        out[k] = up ? 1.0 : -1.0;
    }
    return out;
}

// Nonoverlapping batch-means estimate of the long-run (CLT) variance of a
// stationary series. Auto block length is ceil(n^(1/3)).
inline LongRunVariance batch_means_variance(std::span<const double> series,
                                            std::size_t block_length = 0) {
    const std::size_t n = series.size();
    if (n < 100) throw std::invalid_argument("batch_means_variance: need at least 100 points");
    std::size_t B = block_length;
    if (B == 0) B = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
    if (B > n / 10)
        throw std::invalid_argument("batch_means_variance: block length exceeds n/10");
    const std::size_t m = n / B;
    if (m < 10) throw std::runtime_error("batch_means_variance: fewer than 10 batches");
    std::vector<double> means(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = j * B; i < (j + 1) * B; ++i) s += series[i];
        means[j] = s / static_cast<double>(B);
    }
    const double var_means = sample_variance(means);
    const double v = static_cast<double>(B) * var_means;
    const double se = v * std::sqrt(2.0 / static_cast<double>(m - 1));
    return LongRunVariance{v, VarianceMethod::batch_means, B, se};
}

// AR(1): r_{k+1} = a r_k + xi_{k+1}, |a| < 1.
struct Ar1Process {
    double a;
    std::function<double(Xoshiro256&)> innovation;

    Ar1Process(double a_, std::function<double(Xoshiro256&)> innov)
        : a(a_), innovation(std::move(innov)) {
        if (!(std::fabs(a) < 1.0)) throw std::invalid_argument("Ar1Process: need |a| < 1");
    }

    // standard normal innovations
    static Ar1Process gaussian(double a) {
        return Ar1Process(a, [](Xoshiro256& rng) { return rng.normal(); });
    }

    // unit-variance stationary law: innovations N(0, 1-a^2)
    static Ar1Process standardized_gaussian(double a) {
        const double s = std::sqrt(1.0 - a * a);
        return Ar1Process(a, [s](Xoshiro256& rng) { return s * rng.normal(); });
    }

    // long-run variance factor of the standardized chain: (1+a)/(1-a)
    double rho_sq() const { return (1.0 + a) / (1.0 - a); }
};

// Stationary start via the truncated series sum_k a^k zeta_k with
// K = ceil(ln 1e-12 / ln |a|) terms.
inline std::vector<double> simulate_ar1(const Ar1Process& proc, std::size_t n,
                                        std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("simulate_ar1: n must be >= 1");
    Xoshiro256 rng(seed);
    double r = 0.0;
    if (proc.a != 0.0) {
        const int K = static_cast<int>(std::ceil(std::log(1e-12) / std::log(std::fabs(proc.a))));
        double ak = 1.0;
        for (int k = 0; k <= K; ++k) {
            r += ak * proc.innovation(rng);
            ak *= proc.a;
        }
    } else {
        r = proc.innovation(rng);
    }
    std::vector<double> out(n);
    out[0] = r;
    for (std::size_t k = 1; k < n; ++k) {
        r = proc.a * r + proc.innovation(rng);
        out[k] = r;
    }
    return out;
}

} // namespace kelly
