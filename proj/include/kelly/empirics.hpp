#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kelly/ct_models.hpp"
#include "kelly/dependent.hpp"
#include "kelly/metrics.hpp"
#include "kelly/parallel.hpp"
#include "kelly/return_models.hpp"
#include "kelly/stats.hpp"

namespace kelly {

struct TestReport {
    std::string suite;
    std::string null_desc;
    double statistic = 0.0;
    double p_value = 1.0;
    double level = 1e-3;
    bool pass = false;
    bool skipped = false;
    std::string notes;
    std::map<std::string, double> metrics;
};

// Seeded batch of terminal path statistics; the same base seed reproduces the
// ensemble bit for bit.
struct PathEnsemble {
    double horizon = 0.0;
    std::size_t replications = 0;
    std::uint64_t base_seed = 0;
    std::vector<double> terminal;
};

inline PathEnsemble make_ensemble_discrete(const ReturnModel& m, double f, std::size_t n,
                                           std::size_t replications, std::uint64_t seed) {
    if (replications < 30)
        throw std::invalid_argument("ensemble: need at least 30 replications");
    PathEnsemble ens;
    ens.horizon = static_cast<double>(n);
    ens.replications = replications;
    ens.base_seed = seed;
    ens.terminal.resize(replications);
    parallel_for(replications, [&](std::size_t rep) {
        Xoshiro256 rng(derive_seed(seed, rep));
        double acc = 0.0, c = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double y = std::log1p(f * m.draw(rng)) - c;
            const double t = acc + y;
            c = (t - acc) - y;
            acc = t;
        }
        ens.terminal[rep] = acc;
    });
    return ens;
}

inline PathEnsemble make_ensemble_chain(const TwoStateChain& chain, double f, std::size_t n,
                                        std::size_t replications, std::uint64_t seed) {
    if (replications < 30)
        throw std::invalid_argument("ensemble: need at least 30 replications");
    PathEnsemble ens;
    ens.horizon = static_cast<double>(n);
    ens.replications = replications;
    ens.base_seed = seed;
    ens.terminal.resize(replications);
    parallel_for(replications, [&](std::size_t rep) {
        const auto path = simulate_chain(chain, n, derive_seed(seed, rep));
        double acc = 0.0, c = 0.0;
        for (double r : path) {
            const double y = std::log1p(f * r) - c;
            const double t = acc + y;
            c = (t - acc) - y;
            acc = t;
        }
        ens.terminal[rep] = acc;
    });
    return ens;
}

inline PathEnsemble make_ensemble_ct(const CtModel& model, double f, double t, double dt,
                                     std::size_t replications, std::uint64_t seed) {
    if (replications < 30)
        throw std::invalid_argument("ensemble: need at least 30 replications");
    PathEnsemble ens;
    ens.horizon = t;
    ens.replications = replications;
    ens.base_seed = seed;
    ens.terminal.resize(replications);
    parallel_for(replications, [&](std::size_t rep) {
        const auto path = simulate_ct(model, f, t, dt, derive_seed(seed, rep));
        ens.terminal[rep] = path.logw.back();
    });
    return ens;
}

namespace detail {

inline TestReport lln_from_ensemble(const PathEnsemble& ens, double g, double v_eff,
                                    const std::string& null_desc) {
    TestReport rep;
    rep.suite = "lln";
    rep.null_desc = null_desc;
    const double n = ens.horizon;
    std::vector<double> rates(ens.terminal.size());
    for (std::size_t i = 0; i < rates.size(); ++i) rates[i] = ens.terminal[i] / n;
    const double mean = sample_mean(rates);
    rep.metrics["mean_rate"] = mean;
    rep.metrics["g"] = g;
    if (v_eff == 0.0) {
        rep.pass = mean == g;
        rep.statistic = mean - g;
        rep.p_value = rep.pass ? 1.0 : 0.0;
        return rep;
    }
    const double se = std::sqrt(v_eff / (n * static_cast<double>(rates.size())));
    const double z = (mean - g) / se;
    rep.statistic = z;
    rep.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    rep.pass = std::fabs(z) <= 4.0;
    rep.metrics["se"] = se;
    return rep;
}

inline TestReport clt_from_ensemble(const PathEnsemble& ens, double g, double v_eff,
                                    double level, const std::string& null_desc) {
    TestReport rep;
    rep.suite = "clt";
    rep.null_desc = null_desc;
    rep.level = level;
    if (!(v_eff > 0.0)) {
        rep.skipped = true;
        rep.notes = "constant-fluctuation regime (v_eff = 0); use gamma_limit_check";
        rep.pass = true;
        return rep;
    }
    const double n = ens.horizon;
    std::vector<double> z(ens.terminal.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = (ens.terminal[i] - n * g) / std::sqrt(n * v_eff);
    const auto ks = ks_test(std::move(z), [](double x) { return normal_cdf(x); });
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.pass = ks.p_value >= level;
    return rep;
}

} // namespace detail

// |mean of (ln W_n)/n - g| <= 4 sqrt(v_eff / (n * replications))
inline TestReport lln_check(const ReturnModel& m, double f, std::size_t n,
                            std::size_t replications, std::uint64_t seed,
                            const EvalOptions& opt = {}) {
    double g, v;
    try {
        g = growth_rate(m, f, opt);
        v = asym_variance(m, f, opt);
    } catch (const std::exception& e) {
        TestReport rep;
        rep.suite = "lln";
        rep.skipped = true;
        rep.pass = true;
        rep.notes = std::string("skipped: variance unavailable (") + e.what() + ")";
        return rep;
    }
    const auto ens = make_ensemble_discrete(m, f, n, replications, seed);
    return detail::lln_from_ensemble(ens, g, v, "iid returns, (ln W_n)/n -> g(f) a.s.");
}

inline TestReport lln_check(const TwoStateChain& chain, double f, std::size_t n,
                            std::size_t replications, std::uint64_t seed) {
    const double g = detail::bernoulli_g(chain.stationary_up(), f);
    const double v = chain_longrun_variance(chain, f).v_tilde;
    const auto ens = make_ensemble_chain(chain, f, n, replications, seed);
    return detail::lln_from_ensemble(ens, g, v,
                                     "two-state chain, (ln W_n)/n -> g(f) a.s. (long-run variance)");
}

// KS of the standardized terminal log-wealth against N(0,1) at the given level
inline TestReport clt_check(const ReturnModel& m, double f, std::size_t n,
                            std::size_t replications, std::uint64_t seed, double level = 1e-3,
                            const EvalOptions& opt = {}) {
    const double g = growth_rate(m, f, opt);
    const double v = asym_variance(m, f, opt);
    const auto ens = make_ensemble_discrete(m, f, n, replications, seed);
    return detail::clt_from_ensemble(ens, g, v, level, "iid returns, CLT with variance v(f)");
}

inline TestReport clt_check(const TwoStateChain& chain, double f, std::size_t n,
                            std::size_t replications, std::uint64_t seed, double level = 1e-3) {
    const double g = detail::bernoulli_g(chain.stationary_up(), f);
    const double v = chain_longrun_variance(chain, f).v_tilde;
    const auto ens = make_ensemble_chain(chain, f, n, replications, seed);
    return detail::clt_from_ensemble(ens, g, v, level,
                                     "two-state chain, CLT with long-run variance vtilde(f)");
}

inline TestReport clt_check(const CtModel& model, double f, double t, double dt,
                            std::size_t replications, std::uint64_t seed, double level = 1e-3) {
    const auto asy = ct_asymptotics(model);
    TestReport rep;
    if (asy.order == FluctuationOrder::constant || !(asy.v(f) > 0.0)) {
        rep.suite = "clt";
        rep.skipped = true;
        rep.pass = true;
        rep.notes = "constant-fluctuation regime (v_R = 0); use gamma_limit_check";
        return rep;
    }
    const auto ens = make_ensemble_ct(model, f, t, dt, replications, seed);
    std::vector<double> z(ens.terminal.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = (ens.terminal[i] - t * asy.g(f)) / std::sqrt(t * asy.v(f));
    const auto ks = ks_test(std::move(z), [](double x) { return normal_cdf(x); });
    rep.suite = "clt";
    rep.null_desc = "continuous-time CLT with variance v_R(f)";
    rep.level = level;
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.pass = ks.p_value >= level;
    return rep;
}

// Renewal asymptotics of the first-passage times tau_w:
//   (i) per-replication OLS slope of tau against ln w matches 1/g within 3 SE,
//  (ii) standardized times at the largest w pass KS against the normal limit,
// (iii) their scaled variance matches v/g^2 within 20% (reported).
inline TestReport renewal_check(const ReturnModel& m, double f, std::vector<double> w_grid,
                                std::size_t replications, std::uint64_t seed,
                                const EvalOptions& opt = {}) {
    if (w_grid.size() < 2) throw std::invalid_argument("renewal_check: need at least 2 targets");
    for (std::size_t i = 1; i < w_grid.size(); ++i)
        if (!(w_grid[i] > w_grid[i - 1]))
            throw std::invalid_argument("renewal_check: target grid must increase");
    if (!(w_grid.front() > 1.0)) throw std::invalid_argument("renewal_check: targets must exceed 1");
    const double g = growth_rate(m, f, opt);
    if (!(g > 0.0)) throw std::runtime_error("renewal_check: g(f) <= 0, passage not a.s. finite");
    const double v = asym_variance(m, f, opt);

    std::vector<double> lw(w_grid.size());
    for (std::size_t j = 0; j < w_grid.size(); ++j) lw[j] = std::log(w_grid[j]);
    const double lmax = lw.back();
    const std::size_t max_steps =
        static_cast<std::size_t>(std::llround(lmax / g * 100.0)) + 100000;

    std::vector<double> slopes(replications), tau_max(replications);
    parallel_for(replications, [&](std::size_t rep) {
        Xoshiro256 rng(derive_seed(seed, rep));
        std::vector<double> tau(lw.size(), 0.0);
        double acc = 0.0;
        std::size_t next_target = 0;
        for (std::size_t k = 1; k <= max_steps && next_target < lw.size(); ++k) {
            acc += std::log1p(f * m.draw(rng));
            while (next_target < lw.size() && acc > lw[next_target])
                tau[next_target++] = static_cast<double>(k);
        }
        if (next_target < lw.size())
            throw std::runtime_error("renewal_check: walk failed to reach a target");
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double nn = static_cast<double>(lw.size());
        for (std::size_t j = 0; j < lw.size(); ++j) {
            sx += lw[j];
            sy += tau[j];
            sxx += lw[j] * lw[j];
            sxy += lw[j] * tau[j];
        }
        slopes[rep] = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        tau_max[rep] = tau.back();
    });

    TestReport rep;
    rep.suite = "renewal";
    rep.null_desc = "tau_w / ln w -> 1/g; CLT variance v/g^2";
    const double slope_mean = sample_mean(slopes);
    const double slope_se = std::sqrt(sample_variance(slopes) / static_cast<double>(replications));
    const double slope_z = (slope_mean - 1.0 / g) / slope_se;
    rep.metrics["slope"] = slope_mean;
    rep.metrics["slope_se"] = slope_se;
    rep.metrics["slope_target"] = 1.0 / g;
    rep.metrics["slope_z"] = slope_z;

    std::vector<double> std_tau(tau_max.size());
    const double sd_limit = std::sqrt(v) / g;
    for (std::size_t i = 0; i < tau_max.size(); ++i)
        std_tau[i] = std::sqrt(g / lmax) * (tau_max[i] - lmax / g) / sd_limit;
    rep.metrics["mean_tau"] = sample_mean(tau_max);
    rep.metrics["mean_tau_target"] = lmax / g;
    rep.metrics["mean_tau_se"] =
        std::sqrt(sample_variance(tau_max) / static_cast<double>(replications));
    const double scaled_var = sample_variance(std_tau) * sd_limit * sd_limit;
    rep.metrics["scaled_variance"] = scaled_var;
    rep.metrics["scaled_variance_target"] = v / (g * g);
    rep.metrics["scaled_variance_rel_err"] = std::fabs(scaled_var - v / (g * g)) / (v / (g * g));
    const auto ks = ks_test(std::move(std_tau), [](double x) { return normal_cdf(x); });
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.pass = std::fabs(slope_z) <= 3.0 && ks.p_value >= rep.level;
    rep.notes =
        "variance tolerance 20% (slow ln w convergence); the normal KS needs ln w large "
        "enough that the residual skew 3 sqrt(v/(g ln w)) is small";
    return rep;
}

// Terminal ln W - t g against the non-Gaussian limit f ln S*, S* ~ Gamma(nu, alpha)
inline TestReport gamma_limit_check(const LogisticPrice& model, double f, double t, double dt,
                                    std::size_t replications, std::uint64_t seed,
                                    double level = 1e-3) {
    validate(CtModel{model});
    TestReport rep;
    rep.suite = "gamma_limit";
    rep.level = level;
    const double nu = 2.0 * model.M * model.mu / (model.sigma * model.sigma) - 1.0;
    const double alpha = 2.0 * model.mu / (model.sigma * model.sigma);
    rep.null_desc = "ln W - t g -> f ln S*, S* ~ Gamma(" + std::to_string(nu) + "," +
                    std::to_string(alpha) + ")";
    rep.metrics["nu"] = nu;
    rep.metrics["alpha"] = alpha;
    const double g = 0.5 * model.sigma * model.sigma * f * (1.0 - f);
    rep.metrics["g"] = g;
    if (f <= 1e-12) {
        const auto ens = make_ensemble_ct(CtModel{model}, f, t, dt, replications, seed);
        double worst = 0.0;
        for (double x : ens.terminal) worst = std::max(worst, std::fabs(x));
        rep.pass = worst < 1e-12;
        rep.statistic = worst;
        rep.notes = "degenerate limit at f = 0";
        return rep;
    }
    const auto ens = make_ensemble_ct(CtModel{model}, f, t, dt, replications, seed);
    std::vector<double> x(ens.terminal.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = ens.terminal[i] - t * g;
    const auto ks = ks_test(std::move(x), [nu, alpha, f](double y) {
        return gamma_p(nu, alpha * std::exp(y / f));
    });
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.pass = ks.p_value >= level;
    return rep;
}

} // namespace kelly
