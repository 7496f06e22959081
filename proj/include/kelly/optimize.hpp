#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kelly/metrics.hpp"
#include "kelly/return_models.hpp"
#include "kelly/rng.hpp"
#include "kelly/scalar_opt.hpp"

namespace kelly {

enum class Criterion { kelly, ridge, sharpe, variance_capped };

inline const char* to_string(Criterion c) {
    switch (c) {
        case Criterion::kelly: return "kelly";
        case Criterion::ridge: return "ridge";
        case Criterion::sharpe: return "sharpe";
        case Criterion::variance_capped: return "variance_capped";
    }
    return "?";
}

struct StrategyReport {
    double f_star = 0.0;
    Criterion criterion = Criterion::kelly;
    double gamma = 0.0;  // ridge only
    double v_cap = 0.0;  // variance_capped only
    double objective_value = 0.0;
    bool boundary = false;
    std::optional<double> multiplier{};   // variance_capped only
    bool constraint_active = false;       // variance_capped only
};

namespace detail {

// Fixed-sample (SAA) view of a sampler-only model: one draw pass, then every
// objective below is a smooth deterministic function of f.
struct SaaSample {
    std::vector<double> xs;

    double g(double f) const {
        double s = 0.0, c = 0.0;
        for (double x : xs) {
            const double y = std::log1p(f * x) - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return s / static_cast<double>(xs.size());
    }
    double dg(double f) const {
        double s = 0.0;
        for (double x : xs) s += x / (1.0 + f * x);
        return s / static_cast<double>(xs.size());
    }
    double v(double f) const {
        const double m = g(f);
        double s = 0.0;
        for (double x : xs) {
            const double d = std::log1p(f * x) - m;
            s += d * d;
        }
        return s / static_cast<double>(xs.size() - 1);
    }
    double dv(double f) const {
        const double m = g(f);
        double a = 0.0, b = 0.0;
        for (double x : xs) {
            const double d = 1.0 + f * x;
            a += x * std::log1p(f * x) / d;
            b += x / d;
        }
        const double n = static_cast<double>(xs.size());
        return 2.0 * (a / n - m * b / n);
    }
};

struct Objectives {
    std::function<double(double)> g, dg, v, dv;
};

inline Objectives make_objectives(const ReturnModel& m, const EvalOptions& opt,
                                  std::shared_ptr<SaaSample>& keep_alive) {
    if (m.kind() == ReturnKind::generic_sampler) {
        auto saa = std::make_shared<SaaSample>();
        saa->xs = m.sample(opt.mc.seed, std::max<std::size_t>(opt.mc.samples, 2));
        keep_alive = saa;
        return {[saa](double f) { return saa->g(f); },
                [saa](double f) { return saa->dg(f); },
                [saa](double f) { return saa->v(f); },
                [saa](double f) { return saa->dv(f); }};
    }
    return {[&m, opt](double f) { return growth_rate(m, f, opt); },
            [&m, opt](double f) { return growth_derivative(m, f, opt); },
            [&m, opt](double f) { return asym_variance(m, f, opt); },
            [&m, opt](double f) { return variance_derivative(m, f, opt); }};
}

} // namespace detail

// f* = argmax g. Root-brackets g' when the edge condition holds; reports the
// boundary instead of erroring when there is no edge (no reason to gamble).
inline StrategyReport kelly_fraction(const ReturnModel& m, const EvalOptions& opt = {}) {
    StrategyReport rep;
    rep.criterion = Criterion::kelly;
    std::shared_ptr<detail::SaaSample> keep;
    const auto obj = detail::make_objectives(m, opt, keep);

    const double d0 = m.kind() == ReturnKind::generic_sampler
                          ? obj.dg(0.0)
                          : growth_derivative(m, 0.0, opt);
    if (!(d0 > 0.0)) {
        rep.f_star = 0.0;
        rep.objective_value = 0.0;
        rep.boundary = true;
        return rep;
    }
    const double lo = 1e-12, hi = detail::kFMax;
    if (obj.dg(hi) > 0.0) {
        rep.f_star = hi;
        rep.objective_value = obj.g(hi);
        rep.boundary = true;
        return rep;
    }
    rep.f_star = brent_root(obj.dg, lo, hi, 1e-13);
    rep.objective_value = obj.g(rep.f_star);
    rep.boundary = false;
    return rep;
}

// f^Ri = argmax g - gamma*upsilon over [0, f*]; Ri may be non-concave for
// heavy-tailed laws, hence coarse grid (step 1e-3) then local refinement.
// Ties resolve to the smallest fraction.
inline StrategyReport ridge_fraction(const ReturnModel& m, double gamma,
                                     const EvalOptions& opt = {}) {
    if (!(gamma > 0.0)) throw std::invalid_argument("ridge_fraction: gamma must be positive");
    StrategyReport rep;
    rep.criterion = Criterion::ridge;
    rep.gamma = gamma;

    const auto kelly = kelly_fraction(m, opt);
    const double hi = std::min(kelly.f_star, detail::kFMax);
    if (hi <= 0.0) {
        rep.boundary = true;
        return rep;
    }
    std::shared_ptr<detail::SaaSample> keep;
    const auto obj = detail::make_objectives(m, opt, keep);
    auto ri = [&](double f) { return f == 0.0 ? 0.0 : obj.g(f) - gamma * obj.v(f); };

    const int points = std::max(3, static_cast<int>(hi / 1e-3) + 1);
    double best = 0.0;  // Ri(0) = 0
    double best_f = 0.0;
    for (int i = 1; i < points; ++i) {
        const double f = hi * static_cast<double>(i) / (points - 1);
        const double val = ri(f);
        if (val > best) {
            best = val;
            best_f = f;
        }
    }
    if (best_f > 0.0) {
        const double step = hi / (points - 1);
        const double a = std::max(0.0, best_f - step);
        const double b = std::min(hi, best_f + step);
        best_f = brent_minimize([&](double f) { return -ri(f); }, a, b, 1e-11);
        best = ri(best_f);
        if (best <= 0.0) {  // refined value still loses to f = 0
            best_f = 0.0;
            best = 0.0;
        }
    }
    rep.f_star = best_f;
    rep.objective_value = best;
    rep.boundary = best_f <= 1e-12 || best_f >= detail::kFMax - 1e-12;
    return rep;
}

// f° = argmax SR over [1e-6, f*]. A maximizer at the left edge of a decreasing
// SR is reported as the boundary f = 0 with the SR(0+) limit as objective.
inline StrategyReport sharpe_fraction(const ReturnModel& m, const EvalOptions& opt = {}) {
    StrategyReport rep;
    rep.criterion = Criterion::sharpe;

    const auto kelly = kelly_fraction(m, opt);
    const double lo = 1e-6;
    const double hi = std::max(std::min(kelly.f_star, detail::kFMax), 2.0 * lo);
    std::shared_ptr<detail::SaaSample> keep;
    const auto obj = detail::make_objectives(m, opt, keep);
    bool any_defined = false;
    auto sr = [&](double f) {
        const double v = obj.v(f);
        if (v <= 0.0) return -std::numeric_limits<double>::infinity();
        any_defined = true;
        return obj.g(f) / std::sqrt(v);
    };

    const int points = 1000;
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < points; ++i) {
        const double f = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        const double val = sr(f);
        if (val > best) {
            best = val;
            best_i = i;
        }
    }
    if (!any_defined)
        throw std::runtime_error("sharpe_fraction: upsilon vanishes on the whole grid, objective undefined");

    if (best_i == 0) {
        rep.f_star = 0.0;
        rep.boundary = true;
        const auto cap = m.capabilities();
        if (std::isfinite(cap.mean_return) && std::isfinite(cap.second_moment)) {
            const double var = cap.second_moment - cap.mean_return * cap.mean_return;
            rep.objective_value = var > 0.0 ? cap.mean_return / std::sqrt(var) : best;
        } else {
            rep.objective_value = best;
        }
        return rep;
    }
    const double step = (hi - lo) / (points - 1);
    const double a = std::max(lo, lo + (best_i - 1) * step);
    const double b = std::min(hi, lo + (best_i + 1) * step);
    rep.f_star = brent_minimize([&](double f) { return -sr(f); }, a, b, 1e-11);
    rep.objective_value = sr(rep.f_star);
    rep.boundary = false;
    return rep;
}

// maximize g subject to upsilon(f) <= v0; the active case inverts the
// increasing upsilon by bisection and reports gamma = g'(f0)/upsilon'(f0).
inline StrategyReport variance_capped_fraction(const ReturnModel& m, double v0,
                                               const EvalOptions& opt = {}) {
    if (!(v0 > 0.0)) throw std::invalid_argument("variance_capped_fraction: v0 must be positive");
    StrategyReport rep;
    rep.criterion = Criterion::variance_capped;
    rep.v_cap = v0;

    const auto kelly = kelly_fraction(m, opt);
    std::shared_ptr<detail::SaaSample> keep;
    const auto obj = detail::make_objectives(m, opt, keep);
    const double v_at_star = kelly.f_star > 0.0 ? obj.v(kelly.f_star) : 0.0;
    if (v0 >= v_at_star) {
        rep.f_star = kelly.f_star;
        rep.objective_value = kelly.objective_value;
        rep.boundary = kelly.boundary;
        rep.constraint_active = false;
        rep.multiplier = 0.0;
        return rep;
    }
    double a = 0.0, b = kelly.f_star;
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        const double mid = 0.5 * (a + b);
        (obj.v(mid) < v0 ? a : b) = mid;
    }
    const double f0 = 0.5 * (a + b);
    rep.f_star = f0;
    rep.objective_value = obj.g(f0);
    rep.constraint_active = true;
    rep.multiplier = obj.dg(f0) / obj.dv(f0);
    return rep;
}

// Two-point law plus risk-free leg: f* = p - q (1 + 2 r0/(1-r0)), floored at 0
// by the no-short constraint.
inline double bernoulli_with_riskfree(double p, double q, double r0) {
    if (std::fabs(p + q - 1.0) > 1e-9)
        throw std::invalid_argument("bernoulli_with_riskfree: p + q must equal 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bernoulli_with_riskfree: p outside (0,1)");
    if (!(r0 >= 0.0 && r0 < 1.0))
        throw std::invalid_argument("bernoulli_with_riskfree: r0 outside [0,1)");
    return std::max(0.0, p - q * (1.0 + 2.0 * r0 / (1.0 - r0)));
}

// ---------------------------------------------------------------------------
// multi-asset allocation
// ---------------------------------------------------------------------------

struct JointReturnSampler {
    std::size_t dim = 0;
    std::function<void(Xoshiro256&, std::span<double>)> draw;
};

struct AllocationVector {
    std::vector<double> weights;
    double cash = 1.0;
};

struct MultiAssetReport {
    AllocationVector allocation;
    double objective = 0.0;
    std::vector<double> std_errors;
    bool singular_covariance_fallback = false;
    int iterations = 0;
    double grad_norm = 0.0;
    std::vector<int> active_constraints;  // asset indices at 0; -1 marks the budget
};

namespace detail {

// Euclidean projection onto {w >= 0, sum w <= 1}.
inline void project_simplex_cap(std::vector<double>& w) {
    double s = 0.0;
    for (auto& x : w) {
        if (x < 0.0) x = 0.0;
        s += x;
    }
    if (s <= 1.0) return;
    std::vector<double> u = w;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    for (auto& x : w) x = std::max(0.0, x - theta);
}

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_linear(std::vector<double> A, std::vector<double> b, std::size_t m,
                         std::vector<double>& x) {
    std::vector<std::size_t> piv(m);
    std::iota(piv.begin(), piv.end(), std::size_t{0});
    double scale = 0.0;
    for (double a : A) scale = std::max(scale, std::fabs(a));
    if (scale == 0.0) return false;
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t imax = k;
        for (std::size_t i = k + 1; i < m; ++i)
            if (std::fabs(A[i * m + k]) > std::fabs(A[imax * m + k])) imax = i;
        if (std::fabs(A[imax * m + k]) < 1e-12 * scale) return false;
        if (imax != k) {
            for (std::size_t j = 0; j < m; ++j) std::swap(A[k * m + j], A[imax * m + j]);
            std::swap(b[k], b[imax]);
        }
        for (std::size_t i = k + 1; i < m; ++i) {
            const double fac = A[i * m + k] / A[k * m + k];
            for (std::size_t j = k; j < m; ++j) A[i * m + j] -= fac * A[k * m + j];
            b[i] -= fac * b[k];
        }
    }
    x.assign(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < m; ++j) s -= A[i * m + j] * x[j];
        x[i] = s / A[i * m + i];
    }
    return true;
}

} // namespace detail

// Sample-average approximation of argmax E ln(1 + f.r) over the no-short,
// no-leverage simplex, by projected gradient ascent from the Q^-1 mu moment
// initializer. Fixed-size block sums keep the result thread-count independent.
inline MultiAssetReport multiasset_kelly(const JointReturnSampler& sampler, std::size_t n_samples,
                                         std::uint64_t seed) {
    const std::size_t m = sampler.dim;
    if (m == 0) throw std::invalid_argument("multiasset_kelly: dimension must be >= 1");
    if (n_samples < 100) throw std::invalid_argument("multiasset_kelly: need at least 100 samples");

    std::vector<double> data(n_samples * m);
    {
        Xoshiro256 rng(seed);
        std::vector<double> row(m);
        for (std::size_t i = 0; i < n_samples; ++i) {
            sampler.draw(rng, row);
            for (std::size_t l = 0; l < m; ++l) {
                if (!(row[l] >= -1.0))
                    throw std::runtime_error("multiasset_kelly: sampled return below -1");
                data[i * m + l] = row[l];
            }
        }
    }

    constexpr std::size_t kBlock = 8192;
    auto block_reduce = [&](auto&& accumulate, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        std::vector<double> part(out.size());
        for (std::size_t start = 0; start < n_samples; start += kBlock) {
            const std::size_t stop = std::min(n_samples, start + kBlock);
            std::fill(part.begin(), part.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) accumulate(i, part);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += part[j];
        }
    };

    std::vector<double> mu(m), Q(m * m);
    block_reduce([&](std::size_t i, std::span<double> p) {
        for (std::size_t l = 0; l < m; ++l) p[l] += data[i * m + l];
    }, mu);
    for (auto& x : mu) x /= static_cast<double>(n_samples);
    block_reduce([&](std::size_t i, std::span<double> p) {
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                p[a * m + b] += (data[i * m + a] - mu[a]) * (data[i * m + b] - mu[b]);
    }, Q);
    for (auto& x : Q) x /= static_cast<double>(n_samples - 1);

    MultiAssetReport rep;
    std::vector<double> w;
    if (!detail::solve_linear(Q, mu, m, w)) {
        rep.singular_covariance_fallback = true;
        w.assign(m, 0.0);
    }
    detail::project_simplex_cap(w);

    auto objective = [&](const std::vector<double>& f) {
        double s = 0.0, c = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            double fr = 0.0;
            for (std::size_t l = 0; l < m; ++l) fr += f[l] * data[i * m + l];
            if (fr <= -1.0) return -std::numeric_limits<double>::infinity();
            const double y = std::log1p(fr) - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return s / static_cast<double>(n_samples);
    };
    auto gradient = [&](const std::vector<double>& f, std::vector<double>& grad) {
        block_reduce([&](std::size_t i, std::span<double> p) {
            double fr = 0.0;
            for (std::size_t l = 0; l < m; ++l) fr += f[l] * data[i * m + l];
            const double d = 1.0 + fr;
            for (std::size_t l = 0; l < m; ++l) p[l] += data[i * m + l] / d;
        }, grad);
        for (auto& x : grad) x /= static_cast<double>(n_samples);
    };

    double obj = objective(w);
    std::vector<double> grad(m), trial(m);
    const int max_iter = 400;
    int it = 0;
    double gnorm = 0.0;
    for (; it < max_iter; ++it) {
        gradient(w, grad);
        {  // projected-gradient mapping norm at a small probe step
            const double eta = 1e-6;
            trial = w;
            for (std::size_t l = 0; l < m; ++l) trial[l] += eta * grad[l];
            detail::project_simplex_cap(trial);
            double s = 0.0;
            for (std::size_t l = 0; l < m; ++l) {
                const double d = (trial[l] - w[l]) / eta;
                s += d * d;
            }
            gnorm = std::sqrt(s);
        }
        if (gnorm < 1e-6) break;
        double step = 1.0 / std::sqrt(static_cast<double>(it + 1));
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt) {
            trial = w;
            for (std::size_t l = 0; l < m; ++l) trial[l] += step * grad[l];
            detail::project_simplex_cap(trial);
            double descent = 0.0;
            for (std::size_t l = 0; l < m; ++l) descent += grad[l] * (trial[l] - w[l]);
            const double cand = objective(trial);
            if (std::isfinite(cand) && cand >= obj + 1e-4 * descent && cand >= obj) {
                w = trial;
                obj = cand;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }

    // sandwich standard errors: H^-1 Cov(grad_i) H^-1 / n
    rep.std_errors.assign(m, 0.0);
    {
        std::vector<double> H(m * m, 0.0), C(m * m, 0.0), gbar(m);
        gradient(w, gbar);
        block_reduce([&](std::size_t i, std::span<double> p) {
            double fr = 0.0;
            for (std::size_t l = 0; l < m; ++l) fr += w[l] * data[i * m + l];
            const double d = 1.0 + fr;
            for (std::size_t a = 0; a < m; ++a) {
                const double ga = data[i * m + a] / d;
                for (std::size_t b = 0; b < m; ++b) {
                    const double gb = data[i * m + b] / d;
                    p[a * m + b] += ga * gb;
                }
            }
        }, C);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                C[a * m + b] = C[a * m + b] / static_cast<double>(n_samples) - gbar[a] * gbar[b];
        block_reduce([&](std::size_t i, std::span<double> p) {
            double fr = 0.0;
            for (std::size_t l = 0; l < m; ++l) fr += w[l] * data[i * m + l];
            const double d = (1.0 + fr) * (1.0 + fr);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b)
                    p[a * m + b] += data[i * m + a] * data[i * m + b] / d;
        }, H);
        for (auto& x : H) x /= static_cast<double>(n_samples);
        std::vector<double> hinv_col, e(m);
        std::vector<double> Hinv(m * m, 0.0);
        bool ok = true;
        for (std::size_t j = 0; j < m && ok; ++j) {
            std::fill(e.begin(), e.end(), 0.0);
            e[j] = 1.0;
            ok = detail::solve_linear(H, e, m, hinv_col);
            if (ok)
                for (std::size_t i2 = 0; i2 < m; ++i2) Hinv[i2 * m + j] = hinv_col[i2];
        }
        if (ok) {
            for (std::size_t a = 0; a < m; ++a) {
                double s = 0.0;
                for (std::size_t i2 = 0; i2 < m; ++i2)
                    for (std::size_t j2 = 0; j2 < m; ++j2)
                        s += Hinv[a * m + i2] * C[i2 * m + j2] * Hinv[j2 * m + a];
                rep.std_errors[a] = std::sqrt(std::max(0.0, s / static_cast<double>(n_samples)));
            }
        }
    }

    double wsum = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        if (w[l] <= 1e-10) rep.active_constraints.push_back(static_cast<int>(l));
        wsum += w[l];
    }
    if (wsum >= 1.0 - 1e-10) rep.active_constraints.push_back(-1);
    rep.allocation.weights = w;
    rep.allocation.cash = 1.0 - wsum;
    rep.objective = obj;
    rep.iterations = it;
    rep.grad_norm = gnorm;
    return rep;
}

} // namespace kelly
