#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kelly/parallel.hpp"
#include "kelly/rng.hpp"

namespace kelly {

// Rate/volatility specifications for dW = f W dR, R_t = int r ds + int sqrt(v) dB.
// rho_bar is the correlation between the wealth Brownian B and the coefficient
// Brownian B-bar.

struct Gbm {
    double mu, sigma;
};

struct VasicekRate {
    double a, b, mu, sigma, rho_bar;
};

struct CirRate {
    double a, b, mu, sigma, rho_bar;  // requires 2 mu a >= b^2
};

struct HestonVol {
    double mu, kappa, sigma2, beta, rho_bar;  // requires 2 kappa sigma2 >= beta^2
};

struct LogisticRate {
    double a, b, mu, sigma, r0;  // requires 2a > b^2 and r0 in (0, mu)
};

struct LogisticPrice {
    double mu, M, sigma;  // requires 2 M mu > sigma^2, M > 1; S_0 = 1
};

using CtModel = std::variant<Gbm, VasicekRate, CirRate, HestonVol, LogisticRate, LogisticPrice>;

inline void validate(const CtModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gbm>) {
                if (!(m.sigma > 0.0)) throw std::invalid_argument("Gbm: sigma must be positive");
            } else if constexpr (std::is_same_v<T, VasicekRate>) {
                if (!(m.a > 0.0 && m.b > 0.0 && m.sigma > 0.0))
                    throw std::invalid_argument("VasicekRate: a, b, sigma must be positive");
                if (!(std::fabs(m.rho_bar) <= 1.0))
                    throw std::invalid_argument("VasicekRate: rho_bar outside [-1,1]");
            } else if constexpr (std::is_same_v<T, CirRate>) {
                if (!(m.a > 0.0 && m.b > 0.0 && m.sigma > 0.0 && m.mu > 0.0))
                    throw std::invalid_argument("CirRate: a, b, mu, sigma must be positive");
                if (!(2.0 * m.mu * m.a >= m.b * m.b))
                    throw std::invalid_argument("CirRate: Feller condition 2 mu a >= b^2 violated");
                if (!(std::fabs(m.rho_bar) <= 1.0))
                    throw std::invalid_argument("CirRate: rho_bar outside [-1,1]");
            } else if constexpr (std::is_same_v<T, HestonVol>) {
                if (!(m.kappa > 0.0 && m.sigma2 > 0.0 && m.beta > 0.0))
                    throw std::invalid_argument("HestonVol: kappa, sigma2, beta must be positive");
                if (!(2.0 * m.kappa * m.sigma2 >= m.beta * m.beta))
                    throw std::invalid_argument("HestonVol: Feller condition 2 kappa sigma2 >= beta^2 violated");
                if (!(std::fabs(m.rho_bar) <= 1.0))
                    throw std::invalid_argument("HestonVol: rho_bar outside [-1,1]");
            } else if constexpr (std::is_same_v<T, LogisticRate>) {
                if (!(m.a > 0.0 && m.b > 0.0 && m.mu > 0.0 && m.sigma > 0.0))
                    throw std::invalid_argument("LogisticRate: a, b, mu, sigma must be positive");
                if (!(2.0 * m.a > m.b * m.b))
                    throw std::invalid_argument("LogisticRate: needs 2a > b^2");
                if (!(m.r0 > 0.0 && m.r0 < m.mu))
                    throw std::invalid_argument("LogisticRate: r0 must lie in (0, mu)");
            } else if constexpr (std::is_same_v<T, LogisticPrice>) {
                if (!(m.mu > 0.0 && m.sigma > 0.0))
                    throw std::invalid_argument("LogisticPrice: mu, sigma must be positive");
                if (!(m.M > 1.0)) throw std::invalid_argument("LogisticPrice: M must exceed 1");
                if (!(2.0 * m.M * m.mu > m.sigma * m.sigma))
                    throw std::invalid_argument("LogisticPrice: needs 2 M mu > sigma^2");
            }
        },
        model);
}

enum class FluctuationOrder { sqrt_t, constant };

// g(f) = g_lin f + g_quad f^2,  v(f) = v2 f^2 + v3 f^3 + v4 f^4.
struct CtAsymptotics {
    double g_lin = 0.0, g_quad = 0.0;
    double v2 = 0.0, v3 = 0.0, v4 = 0.0;
    double f_star = 0.0;
    FluctuationOrder order = FluctuationOrder::sqrt_t;

    double g(double f) const { return g_lin * f + g_quad * f * f; }
    double v(double f) const { return f * f * (v2 + f * (v3 + f * v4)); }
    double sr(double f) const { return g(f) / std::sqrt(v(f)); }
};

// E sqrt(r*) under the Gamma(nu, alpha) invariant law of a CIR process.
inline double cir_mean_sqrt(double a, double b, double mu) {
    const double nu = 2.0 * a * mu / (b * b);
    return b * std::exp(std::lgamma(nu + 0.5) - std::lgamma(nu)) / std::sqrt(2.0 * a);
}

inline CtAsymptotics ct_asymptotics(const CtModel& model) {
    validate(model);
    CtAsymptotics out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gbm>) {
                const double s2 = m.sigma * m.sigma;
                out = {m.mu, -0.5 * s2, s2, 0.0, 0.0, m.mu / s2, FluctuationOrder::sqrt_t};
            } else if constexpr (std::is_same_v<T, VasicekRate>) {
                const double s2 = m.sigma * m.sigma;
                const double c2 = m.b * m.b / (m.a * m.a) + s2 + 2.0 * m.rho_bar * m.sigma * m.b / m.a;
                out = {m.mu, -0.5 * s2, c2, 0.0, 0.0, m.mu / s2, FluctuationOrder::sqrt_t};
            } else if constexpr (std::is_same_v<T, CirRate>) {
                const double s2 = m.sigma * m.sigma;
                const double mu_tilde = cir_mean_sqrt(m.a, m.b, m.mu);
                const double c2 = m.b * m.b * m.mu / (m.a * m.a) + s2 +
                                  2.0 * m.rho_bar * m.sigma * m.b * mu_tilde / m.a;
                out = {m.mu, -0.5 * s2, c2, 0.0, 0.0, m.mu / s2, FluctuationOrder::sqrt_t};
            } else if constexpr (std::is_same_v<T, HestonVol>) {
                // v = f^2 s2 (1 + f^2 b^2/4k^2 - rho f b/k): the f^3 cross term
                // carries the bilinear weight 2 f (-f^2/2), so no factor 2;
                // this is what makes v vanish at f = 2 rho k / b, rho -> 1
                const double s2 = m.sigma2;
                out = {m.mu,
                       -0.5 * s2,
                       s2,
                       -m.rho_bar * s2 * m.beta / m.kappa,
                       s2 * m.beta * m.beta / (4.0 * m.kappa * m.kappa),
                       m.mu / s2,
                       FluctuationOrder::sqrt_t};
            } else if constexpr (std::is_same_v<T, LogisticRate>) {
                const double s2 = m.sigma * m.sigma;
                out = {m.mu, -0.5 * s2, s2, 0.0, 0.0, m.mu / s2, FluctuationOrder::sqrt_t};
            } else if constexpr (std::is_same_v<T, LogisticPrice>) {
                const double s2 = m.sigma * m.sigma;
                out = {0.5 * s2, -0.5 * s2, 0.0, 0.0, 0.0, 0.5, FluctuationOrder::constant};
            }
        },
        model);
    return out;
}

// Optimal ridge fraction. Closed form mu/(sigma^2 + 2 gamma c^2) whenever
// upsilon = f^2 c^2; the Heston quartic is maximized numerically.
inline double ct_ridge(const CtModel& model, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("ct_ridge: gamma must be nonnegative");
    const auto asy = ct_asymptotics(model);
    if (asy.order == FluctuationOrder::constant) return asy.f_star;
    if (asy.v3 == 0.0 && asy.v4 == 0.0)
        return asy.g_lin / (-2.0 * asy.g_quad + 2.0 * gamma * asy.v2);
    double best_f = 0.0, best = 0.0;
    const int points = 2001;
    for (int i = 1; i < points; ++i) {
        const double f = static_cast<double>(i) / (points - 1);
        const double val = asy.g(f) - gamma * asy.v(f);
        if (val > best) {
            best = val;
            best_f = f;
        }
    }
    // local quadratic refinement on the smooth polynomial
    double lo = std::max(0.0, best_f - 1.0 / (points - 1));
    double hi = std::min(1.0, best_f + 1.0 / (points - 1));
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        const double v1 = asy.g(m1) - gamma * asy.v(m1);
        const double v2 = asy.g(m2) - gamma * asy.v(m2);
        if (v1 < v2) lo = m1; else hi = m2;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

// Maximizing Ri(., gamma) matches power utility U_eta(x) = x^eta / eta at
// eta = -2 gamma (Merton fraction mu/(sigma^2 (1-eta))).
inline double power_utility_equivalent(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("power_utility_equivalent: gamma must be positive");
    return -2.0 * gamma;
}

// Uniform-grid coefficient path: r[k], v[k] at grid left edges (effective
// values fed to the wealth integrals) and the wealth-Brownian increments dB.
struct CtDriverPath {
    double dt = 0.0;
    std::vector<double> r, v, dB;
    std::vector<std::string> warnings;
};

struct CtPath {
    double dt = 0.0;
    double burn_in = 0.0;  // time discarded before the reported origin
    std::vector<double> time, r, v, logw;
    std::vector<std::string> warnings;
};

namespace detail {

inline void cir_warning(double feller, double dt, const char* who, std::vector<std::string>& w) {
    if (feller < 1.5 && dt > 1e-3)
        w.push_back(std::string(who) + ": Feller ratio " + std::to_string(feller) +
                    " below 1.5, dt may be too large for the truncation scheme");
}

} // namespace detail

inline CtDriverPath simulate_ct_coeffs(const CtModel& model, double t, double dt,
                                       std::uint64_t seed) {
    validate(model);
    if (!(dt > 0.0 && dt <= 1e-2))
        throw std::invalid_argument("simulate_ct_coeffs: need 0 < dt <= 1e-2");
    const std::size_t K = static_cast<std::size_t>(std::llround(t / dt));
    if (K == 0) throw std::invalid_argument("simulate_ct_coeffs: horizon shorter than dt");
    CtDriverPath path;
    path.dt = dt;
    path.r.resize(K + 1);
    path.v.resize(K + 1);
    path.dB.resize(K);
    Xoshiro256 rng(seed);
    const double sdt = std::sqrt(dt);

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gbm>) {
                const double s2 = m.sigma * m.sigma;
                for (std::size_t k = 0; k <= K; ++k) {
                    path.r[k] = m.mu;
                    path.v[k] = s2;
                }
                for (std::size_t k = 0; k < K; ++k) path.dB[k] = sdt * rng.normal();
            } else if constexpr (std::is_same_v<T, VasicekRate>) {
                const double s2 = m.sigma * m.sigma;
                const double rho_c = std::sqrt(1.0 - m.rho_bar * m.rho_bar);
                double r = m.mu + std::sqrt(m.b * m.b / (2.0 * m.a)) * rng.normal();
                for (std::size_t k = 0; k < K; ++k) {
                    path.r[k] = r;
                    path.v[k] = s2;
                    const double z1 = rng.normal(), z2 = rng.normal();
                    path.dB[k] = sdt * z1;
                    const double dBbar = sdt * (m.rho_bar * z1 + rho_c * z2);
                    r += m.a * (m.mu - r) * dt + m.b * dBbar;
                }
                path.r[K] = r;
                path.v[K] = s2;
            } else if constexpr (std::is_same_v<T, CirRate>) {
                const double s2 = m.sigma * m.sigma;
                const double rho_c = std::sqrt(1.0 - m.rho_bar * m.rho_bar);
                const double nu = 2.0 * m.a * m.mu / (m.b * m.b);
                detail::cir_warning(nu, dt, "CirRate", path.warnings);
                double r = gamma_draw(rng, nu, 2.0 * m.a / (m.b * m.b));
                for (std::size_t k = 0; k < K; ++k) {
                    const double rp = std::max(r, 0.0);
                    path.r[k] = rp;
                    path.v[k] = s2;
                    const double z1 = rng.normal(), z2 = rng.normal();
                    path.dB[k] = sdt * z1;
                    const double dBbar = sdt * (m.rho_bar * z1 + rho_c * z2);
                    r += m.a * (m.mu - rp) * dt + m.b * std::sqrt(rp) * dBbar;
                }
                path.r[K] = std::max(r, 0.0);
                path.v[K] = s2;
            } else if constexpr (std::is_same_v<T, HestonVol>) {
                const double rho_c = std::sqrt(1.0 - m.rho_bar * m.rho_bar);
                const double feller = 2.0 * m.kappa * m.sigma2 / (m.beta * m.beta);
                detail::cir_warning(feller, dt, "HestonVol", path.warnings);
                double v = gamma_draw(rng, 2.0 * m.kappa * m.sigma2 / (m.beta * m.beta),
                                      2.0 * m.kappa / (m.beta * m.beta));
                for (std::size_t k = 0; k < K; ++k) {
                    const double vp = std::max(v, 0.0);
                    path.r[k] = m.mu;
                    path.v[k] = vp;
                    const double z1 = rng.normal(), z2 = rng.normal();
                    path.dB[k] = sdt * z1;
                    const double dBbar = sdt * (m.rho_bar * z1 + rho_c * z2);
                    v += m.kappa * (m.sigma2 - vp) * dt + m.beta * std::sqrt(vp) * dBbar;
                }
                path.r[K] = m.mu;
                path.v[K] = std::max(v, 0.0);
            } else if constexpr (std::is_same_v<T, LogisticRate>) {
                // simulated through Y = ln(rho/(1-rho)), rho = r/mu, which keeps
                // r inside (0, mu); coefficient noise independent of B
                const double s2 = m.sigma * m.sigma;
                const double rho0 = m.r0 / m.mu;
                double y = std::log(rho0 / (1.0 - rho0));
                for (std::size_t k = 0; k < K; ++k) {
                    path.r[k] = m.mu / (1.0 + std::exp(-y));
                    path.v[k] = s2;
                    const double z1 = rng.normal(), z2 = rng.normal();
                    path.dB[k] = sdt * z1;
                    y += (m.a + 0.5 * m.b * m.b * std::tanh(0.5 * y)) * dt + m.b * sdt * z2;
                }
                path.r[K] = m.mu / (1.0 + std::exp(-y));
                path.v[K] = s2;
            } else if constexpr (std::is_same_v<T, LogisticPrice>) {
                const double s2 = m.sigma * m.sigma;
                double x = 0.0;  // ln S, S_0 = 1
                for (std::size_t k = 0; k < K; ++k) {
                    path.r[k] = m.mu * (m.M - std::exp(x));
                    path.v[k] = s2;
                    const double z1 = rng.normal();
                    path.dB[k] = sdt * z1;
                    x += (m.mu * (m.M - std::exp(x)) - 0.5 * s2) * dt + m.sigma * path.dB[k];
                }
                path.r[K] = m.mu * (m.M - std::exp(x));
                path.v[K] = s2;
            }
        },
        model);
    return path;
}

// Log-wealth path per ln W_t = f int r ds - (f^2/2) int v ds + f int sqrt(v) dB.
// Gbm is exact (no discretization error); the logistic price model uses its
// pathwise identity ln W = t g + f ln S.
inline CtPath simulate_ct(const CtModel& model, double f, double t, double dt, std::uint64_t seed,
                          double burn_in = -1.0) {
    validate(model);
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("simulate_ct: f outside [0,1]");
    if (burn_in < 0.0)
        burn_in = std::holds_alternative<LogisticRate>(model) ? 0.1 * t : 0.0;
    const double total = t + burn_in;
    const auto coeffs = simulate_ct_coeffs(model, total, dt, seed);
    const std::size_t K = coeffs.dB.size();
    const std::size_t skip = static_cast<std::size_t>(std::llround(burn_in / dt));

    std::vector<double> logw_all(K + 1, 0.0);
    if (std::holds_alternative<Gbm>(model)) {
        const auto& m = std::get<Gbm>(model);
        const double g = f * m.mu - 0.5 * f * f * m.sigma * m.sigma;
        double B = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            B += coeffs.dB[k];
            logw_all[k + 1] = g * static_cast<double>(k + 1) * dt + f * m.sigma * B;
        }
    } else if (std::holds_alternative<LogisticPrice>(model)) {
        // pathwise identity ln W = t g + f ln S
        const auto& m = std::get<LogisticPrice>(model);
        const double g = 0.5 * m.sigma * m.sigma * f * (1.0 - f);
        double lnS = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            lnS += (m.mu * (m.M - std::exp(lnS)) - 0.5 * m.sigma * m.sigma) * dt +
                   m.sigma * coeffs.dB[k];
            logw_all[k + 1] = g * static_cast<double>(k + 1) * dt + f * lnS;
        }
    } else {
        double logw = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            logw += f * coeffs.r[k] * dt - 0.5 * f * f * coeffs.v[k] * dt +
                    f * std::sqrt(coeffs.v[k]) * coeffs.dB[k];
            logw_all[k + 1] = logw;
        }
    }

    CtPath path;
    path.dt = dt;
    path.burn_in = burn_in;
    path.warnings = coeffs.warnings;
    const std::size_t len = K - skip + 1;
    path.time.resize(len);
    path.r.resize(len);
    path.v.resize(len);
    path.logw.resize(len);
    const double base = logw_all[skip];
    for (std::size_t j = 0; j < len; ++j) {
        path.time[j] = static_cast<double>(j) * dt;
        path.r[j] = coeffs.r[skip + j];
        path.v[j] = coeffs.v[skip + j];
        path.logw[j] = logw_all[skip + j] - base;
        if (!std::isfinite(path.logw[j]))
            throw std::runtime_error("simulate_ct: NaN in simulated path");
    }
    return path;
}

// ---------------------------------------------------------------------------
// first passage under Gbm log-wealth
// ---------------------------------------------------------------------------

struct FirstPassageLaw {
    double w = 0.0;
    double growth = 0.0;    // g_R(f)
    double variance_rate = 0.0;  // upsilon_R(f)
    double mean = 0.0;      // ln w / g
    double variance = 0.0;  // upsilon ln w / g^3

    // inverse Gaussian density of the passage time
    double pdf(double t) const {
        if (!(t > 0.0)) return 0.0;
        const double lw = std::log(w);
        const double d = lw - t * growth;
        return lw / std::sqrt(variance_rate) * std::pow(2.0 * M_PI * t * t * t, -0.5) *
               std::exp(-d * d / (2.0 * t * variance_rate));
    }
};

inline FirstPassageLaw first_passage_law(const Gbm& m, double f, double w) {
    validate(CtModel{m});
    if (!(w > 1.0)) throw std::invalid_argument("first_passage_law: target w must exceed 1");
    const auto asy = ct_asymptotics(CtModel{m});
    const double g = asy.g(f), v = asy.v(f);
    if (!(g > 0.0))
        throw std::runtime_error("first_passage_law: g_R(f) <= 0, passage time not a.s. finite");
    FirstPassageLaw law;
    law.w = w;
    law.growth = g;
    law.variance_rate = v;
    law.mean = std::log(w) / g;
    law.variance = v * std::log(w) / (g * g * g);
    return law;
}

// Exact Gbm log-wealth on a dt grid; a Brownian-bridge crossing draw inside
// each step de-biases the grid hitting times.
inline std::vector<double> first_passage_simulate(const Gbm& m, double f, double w,
                                                  std::size_t n_paths, std::uint64_t seed,
                                                  double dt = 1e-2) {
    const auto law = first_passage_law(m, f, w);  // validates
    if (n_paths == 0) throw std::invalid_argument("first_passage_simulate: need n_paths >= 1");
    const double L = std::log(w);
    const double g = law.growth;
    const double vol = f * m.sigma;
    const std::size_t max_steps =
        static_cast<std::size_t>(std::llround((L / g) * 100.0 / dt)) + 1'000'000;
    std::vector<double> tau(n_paths);
    parallel_for(n_paths, [&](std::size_t i) {
        Xoshiro256 rng(derive_seed(seed, i));
        double x = 0.0, t = 0.0;
        for (std::size_t k = 0; k < max_steps; ++k) {
            const double xn = x + g * dt + vol * std::sqrt(dt) * rng.normal();
            if (xn >= L) {
                tau[i] = t + dt * (L - x) / (xn - x);
                return;
            }
            const double pcross = std::exp(-2.0 * (L - x) * (L - xn) / (vol * vol * dt));
            if (rng.uniform() < pcross) {
                tau[i] = t + 0.5 * dt;
                return;
            }
            x = xn;
            t += dt;
        }
        throw std::runtime_error("first_passage_simulate: path failed to reach the target");
    });
    return tau;
}

} // namespace kelly
