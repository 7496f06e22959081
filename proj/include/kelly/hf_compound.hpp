#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "kelly/ct_models.hpp"
#include "kelly/dependent.hpp"
#include "kelly/quadrature.hpp"
#include "kelly/rng.hpp"
#include "kelly/scalar_opt.hpp"
#include "kelly/stats.hpp"

namespace kelly {

enum class HfKind {
    arithmetic,  // r_{n,k} = mu/n + sigma xi_k / sqrt(n)
    geometric,   // r_{n,k} = exp((mu - sigma^2/2)/n + sigma xi_k / sqrt(n)) - 1
};

// zero-mean unit-variance driving sequences
struct GaussianDriver {};
struct TwoPointDriver {
    double p = 0.5;  // xi = (1-p)/s with prob p, -p/s otherwise; s = sqrt(p(1-p))
};
struct Ar1Driver {
    double a = 0.0;  // standardized Gaussian AR(1)
};
using HfDriver = std::variant<GaussianDriver, TwoPointDriver, Ar1Driver>;

struct RhoNormalSpec {
    double rho_sq = 1.0;  // long-run variance factor of the driver partial sums
};

inline RhoNormalSpec rho_normal_spec(const HfDriver& d) {
    if (const auto* ar = std::get_if<Ar1Driver>(&d))
        return {(1.0 + ar->a) / (1.0 - ar->a)};
    return {1.0};
}

struct HfScheme {
    double mu = 0.0;
    double sigma = 0.0;
    long n = 1;  // steps per unit time
    HfKind kind = HfKind::geometric;
    HfDriver driver = GaussianDriver{};
};

inline void validate(const HfScheme& s) {
    if (!(s.sigma > 0.0)) throw std::invalid_argument("HfScheme: sigma must be positive");
    if (s.n < 1) throw std::invalid_argument("HfScheme: n must be >= 1");
    if (const auto* tp = std::get_if<TwoPointDriver>(&s.driver))
        if (!(tp->p > 0.0 && tp->p < 1.0))
            throw std::invalid_argument("HfScheme: two-point driver needs p in (0,1)");
    if (const auto* ar = std::get_if<Ar1Driver>(&s.driver))
        if (!(std::fabs(ar->a) < 1.0))
            throw std::invalid_argument("HfScheme: AR(1) driver needs |a| < 1");
}

namespace detail {

struct DriverStream {
    std::function<double()> next;
};

inline DriverStream make_driver_stream(const HfDriver& d, std::uint64_t seed) {
    if (std::holds_alternative<GaussianDriver>(d)) {
        auto rng = std::make_shared<Xoshiro256>(seed);
        return {[rng] { return rng->normal(); }};
    }
    if (const auto* tp = std::get_if<TwoPointDriver>(&d)) {
        auto rng = std::make_shared<Xoshiro256>(seed);
        const double p = tp->p;
        const double s = std::sqrt(p * (1.0 - p));
        const double up = (1.0 - p) / s, dn = -p / s;
        return {[rng, p, up, dn] { return rng->uniform() < p ? up : dn; }};
    }
    const auto& ar = std::get<Ar1Driver>(d);
    auto rng = std::make_shared<Xoshiro256>(seed);
    const double a = ar.a;
    const double innov_sd = std::sqrt(1.0 - a * a);
    auto state = std::make_shared<double>(rng->normal());  // stationary N(0,1) start
    bool first = true;
    auto first_flag = std::make_shared<bool>(first);
    return {[rng, state, first_flag, a, innov_sd] {
        if (*first_flag) {
            *first_flag = false;
            return *state;
        }
        *state = a * *state + innov_sd * rng->normal();
        return *state;
    }};
}

// per-step log increment ln(1 + f r_{n,k})
inline double hf_log_step(const HfScheme& s, double f, double xi) {
    const double n = static_cast<double>(s.n);
    if (s.kind == HfKind::arithmetic) {
        const double r = s.mu / n + s.sigma * xi / std::sqrt(n);
        const double wterm = 1.0 + f * r;
        if (!(wterm > 0.0))
            throw std::runtime_error("hf: ruin, 1 + f r_{n,k} <= 0 in the arithmetic scheme");
        return std::log(wterm);
    }
    const double x = (s.mu - 0.5 * s.sigma * s.sigma) / n + s.sigma * xi / std::sqrt(n);
    return std::log1p(f * std::expm1(x));
}

} // namespace detail

// Path of ln W_t^{n,f} on the step grid k/n, k = 0..floor(n t).
inline std::vector<double> simulate_hf_wealth(const HfScheme& s, double f, double t,
                                              std::uint64_t seed) {
    validate(s);
    if (!(f >= 0.0 && f < 1.0)) throw std::invalid_argument("simulate_hf_wealth: f outside [0,1)");
    const std::size_t steps = static_cast<std::size_t>(static_cast<double>(s.n) * t);
    auto stream = detail::make_driver_stream(s.driver, seed);
    std::vector<double> logw(steps + 1, 0.0);
    double acc = 0.0, c = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double y = detail::hf_log_step(s, f, stream.next()) - c;
        const double tsum = acc + y;
        c = (tsum - acc) - y;
        acc = tsum;
        logw[k + 1] = acc;
    }
    return logw;
}

struct HfEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// g_n(f) = n E ln(1+f r_{n,1}) estimated by averaging over stationary driver
// streams; the spread across replications gives the standard error.
inline HfEstimate hf_growth(const HfScheme& s, double f, double horizon,
                            std::size_t replications, std::uint64_t seed) {
    validate(s);
    if (!(horizon >= 100.0)) throw std::invalid_argument("hf_growth: horizon must be >= 100");
    if (replications < 2) throw std::invalid_argument("hf_growth: need at least 2 replications");
    const std::size_t steps = static_cast<std::size_t>(static_cast<double>(s.n) * horizon);
    std::vector<double> rep_means(replications);
    parallel_for(replications, [&](std::size_t rep) {
        auto stream = detail::make_driver_stream(s.driver, derive_seed(seed, rep));
        double acc = 0.0, c = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double y = detail::hf_log_step(s, f, stream.next()) - c;
            const double t = acc + y;
            c = (t - acc) - y;
            acc = t;
        }
        rep_means[rep] = static_cast<double>(s.n) * acc / static_cast<double>(steps);
    });
    HfEstimate est;
    est.value = sample_mean(rep_means);
    if (!std::isfinite(est.value))
        throw std::runtime_error("hf_growth: divergent average, driver too heavy for the scheme");
    est.std_error = std::sqrt(sample_variance(rep_means) / static_cast<double>(replications));
    return est;
}

// Exact g_n for iid drivers: two-atom sum for the two-point driver, adaptive
// quadrature against the Gaussian weight otherwise.
inline double hf_growth_exact(const HfScheme& s, double f, const QuadratureSpec& spec = {}) {
    validate(s);
    if (std::holds_alternative<Ar1Driver>(s.driver))
        throw std::invalid_argument("hf_growth_exact: dependent driver has no exact one-step form");
    const double n = static_cast<double>(s.n);
    if (const auto* tp = std::get_if<TwoPointDriver>(&s.driver)) {
        const double p = tp->p;
        const double sd = std::sqrt(p * (1.0 - p));
        return n * (p * detail::hf_log_step(s, f, (1.0 - p) / sd) +
                    (1.0 - p) * detail::hf_log_step(s, f, -p / sd));
    }
    auto h = [&](double x) { return detail::hf_log_step(s, f, x) * normal_pdf(x); };
    return n * integrate_line(h, spec).value;
}

// Exact per-step mean and variance of ln(1+f r_{n,1}) for iid drivers.
inline std::pair<double, double> hf_step_moments_exact(const HfScheme& s, double f,
                                                       const QuadratureSpec& spec = {}) {
    validate(s);
    if (std::holds_alternative<Ar1Driver>(s.driver))
        throw std::invalid_argument("hf_step_moments_exact: dependent driver unsupported");
    if (const auto* tp = std::get_if<TwoPointDriver>(&s.driver)) {
        const double p = tp->p;
        const double sd = std::sqrt(p * (1.0 - p));
        const double lu = detail::hf_log_step(s, f, (1.0 - p) / sd);
        const double ld = detail::hf_log_step(s, f, -p / sd);
        const double mean = p * lu + (1.0 - p) * ld;
        const double var = p * (lu - mean) * (lu - mean) + (1.0 - p) * (ld - mean) * (ld - mean);
        return {mean, var};
    }
    auto h1 = [&](double x) { return detail::hf_log_step(s, f, x) * normal_pdf(x); };
    auto h2 = [&](double x) {
        const double l = detail::hf_log_step(s, f, x);
        return l * l * normal_pdf(x);
    };
    const double m1 = integrate_line(h1, spec).value;
    const double m2 = integrate_line(h2, spec).value;
    return {m1, std::max(0.0, m2 - m1 * m1)};
}

// f_n* = argmax g_n over [0,1). Exact objective for iid drivers; a common
// fixed driver stream smooths the estimate for the dependent case.
inline double hf_kelly(const HfScheme& s, std::uint64_t seed = 0x6b656c6c79ULL,
                       double crn_horizon = 200.0) {
    validate(s);
    const double hi = 1.0 - 1e-9;
    if (!std::holds_alternative<Ar1Driver>(s.driver)) {
        auto g = [&](double f) { return hf_growth_exact(s, f); };
        if (g(1e-7) <= 0.0) return 0.0;
        const auto r = grid_refine_maximize(g, 0.0, hi, 512, 1e-12);
        return r.x;
    }
    const std::size_t steps = static_cast<std::size_t>(static_cast<double>(s.n) * crn_horizon);
    auto stream = detail::make_driver_stream(s.driver, seed);
    std::vector<double> xs(steps);
    for (auto& x : xs) x = stream.next();
    auto g = [&](double f) {
        double acc = 0.0, c = 0.0;
        for (double x : xs) {
            const double y = detail::hf_log_step(s, f, x) - c;
            const double t = acc + y;
            c = (t - acc) - y;
            acc = t;
        }
        return static_cast<double>(s.n) * acc / static_cast<double>(steps);
    };
    if (g(1e-7) <= 0.0) return 0.0;
    // each evaluation sweeps the whole stream: keep the coarse grid small
    return grid_refine_maximize(g, 0.0, hi, 64, 1e-10).x;
}

// Couples the exact-increment and frozen-coefficient discretizations of a
// continuous-time model to one driving path and reports both sup-distances to
// the limiting wealth exp(f R_t + f(1-f)/2 int v ds).
struct HfCtComparison {
    double sup_exact = 0.0;
    double sup_frozen = 0.0;
    std::size_t steps = 0;
};

inline HfCtComparison discretize_ct(const CtModel& model, long n, double f, double t,
                                    std::uint64_t seed) {
    if (n < 100) throw std::invalid_argument("discretize_ct: need n >= 100 steps per unit time");
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("discretize_ct: f outside [0,1]");
    const double h = 1.0 / static_cast<double>(n);
    const int sub = std::max(1, static_cast<int>(std::ceil(h / 1e-3)));
    const double hf_dt = h / sub;
    const auto fine = simulate_ct_coeffs(model, t, hf_dt, seed);
    const std::size_t coarse_steps = fine.dB.size() / static_cast<std::size_t>(sub);

    HfCtComparison out;
    out.steps = coarse_steps;
    double lw_exact = 0.0, lw_frozen = 0.0, R = 0.0, int_v = 0.0;
    for (std::size_t k = 0; k < coarse_steps; ++k) {
        double dR = 0.0, dB = 0.0;
        for (int j = 0; j < sub; ++j) {
            const std::size_t i = k * sub + j;
            dR += fine.r[i] * hf_dt + std::sqrt(fine.v[i]) * fine.dB[i];
            dB += fine.dB[i];
            int_v += fine.v[i] * hf_dt;
        }
        const double r_left = fine.r[k * sub];
        const double v_left = fine.v[k * sub];
        R += dR;
        lw_exact += std::log1p(f * std::expm1(dR));
        lw_frozen += std::log1p(f * std::expm1(r_left * h + std::sqrt(v_left) * dB));
        const double lw_limit = f * R + 0.5 * f * (1.0 - f) * int_v;
        out.sup_exact = std::max(out.sup_exact, std::fabs(lw_exact - lw_limit));
        out.sup_frozen = std::max(out.sup_frozen, std::fabs(lw_frozen - lw_limit));
    }
    return out;
}

} // namespace kelly
