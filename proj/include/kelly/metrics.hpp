#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kelly/parallel.hpp"
#include "kelly/quadrature.hpp"
#include "kelly/return_models.hpp"
#include "kelly/rng.hpp"

namespace kelly {

enum class Estimator { closed_form, quadrature, monte_carlo };

inline const char* to_string(Estimator e) {
    switch (e) {
        case Estimator::closed_form: return "closed_form";
        case Estimator::quadrature: return "quadrature";
        case Estimator::monte_carlo: return "monte_carlo";
    }
    return "?";
}

struct McSpec {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 0x6b656c6c79ULL;
};

struct EvalOptions {
    QuadratureSpec quad{};
    McSpec mc{};
    std::optional<Estimator> force{};  // overrides the closed->quadrature->mc dispatch
};

struct MetricValue {
    double value = 0.0;
    Estimator estimator = Estimator::closed_form;
    std::optional<double> std_error{};
};

// One row of a growth/risk curve.
struct RiskProfile {
    double f = 0.0;
    double g = 0.0;   // growth rate per step, nats
    double v = 0.0;   // asymptotic variance per step, nats^2
    double sr = 0.0;  // g / sqrt(v); +inf flag when v = 0 < g
    double ri = 0.0;  // g - gamma * v
    Estimator estimator = Estimator::closed_form;
    std::optional<double> std_error{};
};

namespace detail {

constexpr double kFMax = 1.0 - 1e-9;  // optimizers probe boundaries; see growth_rate

inline void check_fraction(double f) {
    if (!(f >= 0.0 && f <= 1.0))
        throw std::invalid_argument("fraction f must lie in [0,1]");
}

// E[h(r)] by quadrature (angle substitution for the squared heavy-tail models,
// exact enumeration for the two-point law).
template <class H>
double expect_quad(const ReturnModel& m, const H& h, const QuadratureSpec& spec) {
    switch (m.kind()) {
        case ReturnKind::bernoulli: {
            const double p = m.bernoulli_p();
            return p * h(1.0) + (1.0 - p) * h(-1.0);
        }
        case ReturnKind::squared_cauchy: {
            auto g = [&](double th) {
                const double t = std::tan(th);
                return h(t * t - 1.0);
            };
            return (2.0 / M_PI) * integrate(g, 0.0, 0.5 * M_PI, spec).value;
        }
        case ReturnKind::squared_t3: {
            auto g = [&](double th) {
                const double t = std::tan(th);
                const double c = std::cos(th);
                return h(3.0 * t * t - 1.0) * c * c;
            };
            return (4.0 / M_PI) * integrate(g, 0.0, 0.5 * M_PI, spec).value;
        }
        case ReturnKind::generic_density: {
            const auto& d = m.density_payload();
            if (std::isinf(d.hi))
                return integrate_upper([&](double x) { return h(x) * d.pdf(x); }, d.lo, spec).value;
            return integrate([&](double x) { return h(x) * d.pdf(x); }, d.lo, d.hi, spec).value;
        }
        case ReturnKind::generic_sampler:
            throw std::invalid_argument("quadrature estimator unavailable for sampler-only models");
    }
    throw std::logic_error("expect_quad: unknown kind");
}

struct McMoments {
    double mean, variance, se_mean, se_variance;
    std::size_t n;
};

// Streaming moments of h(r) with a running-variance divergence guard:
// variance snapshots at n/16 and n/4 growing by >=2.5x each stage flag a
// possibly infinite second moment. The variance standard error comes from
// the fourth central moment, Var(s^2) ~ (m4 - s^4)/n.
template <class H>
McMoments expect_mc(const ReturnModel& m, const H& h, const McSpec& mc) {
    const std::size_t n = std::max<std::size_t>(mc.samples, 2);
    Xoshiro256 rng(mc.seed);
    double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    double v16 = 0.0, v4 = 0.0;
    const std::size_t c16 = n / 16, c4 = n / 4;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = h(m.draw(rng));
        if (!std::isfinite(x))
            throw std::runtime_error(
                "monte carlo sample produced a non-finite log return: second log-moment possibly infinite");
        const double ni = static_cast<double>(i);
        const double d = x - mean;
        const double dn = d / ni;
        const double t1 = d * dn * (ni - 1.0);
        mean += dn;
        m4 += t1 * dn * dn * (ni * ni - 3.0 * ni + 3.0) + 6.0 * dn * dn * m2 - 4.0 * dn * m3;
        m3 += t1 * dn * (ni - 2.0) - 3.0 * dn * m2;
        m2 += t1;
        if (i == c16 && i > 1) v16 = m2 / (ni - 1.0);
        if (i == c4 && i > 1) v4 = m2 / (ni - 1.0);
    }
    const double var = m2 / static_cast<double>(n - 1);
    if (n >= 160 && v16 > 0.0 && v4 > 2.5 * v16 && var > 2.5 * v4)
        throw std::runtime_error(
            "monte carlo running variance diverging: second log-moment possibly infinite");
    const double mu4 = m4 / static_cast<double>(n);
    const double se_var = std::sqrt(std::max(0.0, mu4 - var * var) / static_cast<double>(n));
    return {mean, var, std::sqrt(var / static_cast<double>(n)), se_var, n};
}

inline double bernoulli_g(double p, double f) {
    return p * std::log1p(f) + (1.0 - p) * std::log1p(-f);
}

inline double bernoulli_v(double p, double f) {
    const double L = std::log1p(f) - std::log1p(-f);
    return p * (1.0 - p) * L * L;
}

inline double cauchy_g(double f) { return 2.0 * std::log(std::sqrt(f) + std::sqrt(1.0 - f)); }

// Squared-t3 growth rate as printed in the source example (see the radical
// f* it implies); the quadrature estimator evaluates the integral law itself.
inline double t3_g(double f) {
    if (f == 0.0) return 0.0;
    const double D = std::sqrt((1.0 - f) / 3.0) + std::sqrt(f);
    return 2.0 * std::log(std::sqrt(1.0 - f) + std::sqrt(3.0 * f) - std::sqrt(f) / D);
}

inline double t3_g_derivative(double f) {
    const double sf = std::sqrt(f), s1f = std::sqrt(1.0 - f);
    const double D = s1f / std::sqrt(3.0) + sf;
    const double Dp = -1.0 / (2.0 * std::sqrt(3.0) * s1f) + 1.0 / (2.0 * sf);
    const double T = sf / D;
    const double Tp = (D / (2.0 * sf) - sf * Dp) / (D * D);
    const double h = s1f + std::sqrt(3.0) * sf - T;
    const double hp = -1.0 / (2.0 * s1f) + std::sqrt(3.0) / (2.0 * sf) - Tp;
    return 2.0 * hp / h;
}

inline double cauchy_g_derivative(double f) {
    const double sf = std::sqrt(f), s1f = std::sqrt(1.0 - f);
    return (s1f - sf) / (sf * s1f * (sf + s1f));
}

inline Estimator dispatch_g(const ReturnModel& m, const std::optional<Estimator>& force) {
    if (force) return *force;
    const auto cap = m.capabilities();
    if (cap.has_closed_form_g) return Estimator::closed_form;
    if (cap.has_density || m.kind() == ReturnKind::bernoulli) return Estimator::quadrature;
    return Estimator::monte_carlo;
}

inline Estimator dispatch_v(const ReturnModel& m, const std::optional<Estimator>& force) {
    if (force) return *force;
    const auto cap = m.capabilities();
    if (cap.has_closed_form_v) return Estimator::closed_form;
    if (cap.has_density || m.kind() == ReturnKind::bernoulli) return Estimator::quadrature;
    return Estimator::monte_carlo;
}

inline void check_estimator_feasible(const ReturnModel& m, Estimator e, bool closed_available) {
    if (e == Estimator::closed_form && !closed_available)
        throw std::invalid_argument("closed-form estimator unavailable for this model");
    if (e == Estimator::quadrature && m.kind() == ReturnKind::generic_sampler)
        throw std::invalid_argument("quadrature estimator unavailable for sampler-only models");
}

} // namespace detail

// g_r(f) = E ln(1+f r). Evaluations are clamped to f <= 1-1e-9 on the numeric
// paths; the two-point closed form reports a distinguished -inf at f = 1.
inline MetricValue growth_rate_detail(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    const Estimator est = detail::dispatch_g(m, opt.force);
    detail::check_estimator_feasible(m, est, m.capabilities().has_closed_form_g);
    if (est == Estimator::closed_form) {
        switch (m.kind()) {
            case ReturnKind::bernoulli:
                return {detail::bernoulli_g(m.bernoulli_p(), f), est, {}};
            case ReturnKind::squared_cauchy:
                return {detail::cauchy_g(f), est, {}};
            case ReturnKind::squared_t3:
                return {detail::t3_g(f), est, {}};
            default:
                break;
        }
    }
    const double fc = std::min(f, detail::kFMax);
    auto h = [fc](double r) { return std::log1p(fc * r); };
    if (est == Estimator::quadrature) return {detail::expect_quad(m, h, opt.quad), est, {}};
    const auto mm = detail::expect_mc(m, h, opt.mc);
    return {mm.mean, Estimator::monte_carlo, mm.se_mean};
}

inline double growth_rate(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    return growth_rate_detail(m, f, opt).value;
}

// upsilon_r(f) = Var ln(1+f r), computed as E[ln^2] - g^2 and clamped at 0.
inline MetricValue asym_variance_detail(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    const Estimator est = detail::dispatch_v(m, opt.force);
    detail::check_estimator_feasible(m, est, m.capabilities().has_closed_form_v);
    if (est == Estimator::closed_form)
        return {detail::bernoulli_v(m.bernoulli_p(), f), est, {}};
    const double fc = std::min(f, detail::kFMax);
    if (est == Estimator::quadrature) {
        auto h2 = [fc](double r) {
            const double l = std::log1p(fc * r);
            return l * l;
        };
        const double eln2 = detail::expect_quad(m, h2, opt.quad);
        const double g = growth_rate_detail(m, f, opt).value;
        return {std::max(0.0, eln2 - g * g), est, {}};
    }
    auto h = [fc](double r) { return std::log1p(fc * r); };
    const auto mm = detail::expect_mc(m, h, opt.mc);
    return {mm.variance, Estimator::monte_carlo, mm.se_variance};
}

inline double asym_variance(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    return asym_variance_detail(m, f, opt).value;
}

// SR_r(f) = g / sqrt(upsilon); +inf when upsilon = 0 < g.
inline double sharpe(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    if (!(f > 0.0 && f < 1.0))
        throw std::invalid_argument("sharpe: f must lie in (0,1)");
    const double g = growth_rate(m, f, opt);
    const double v = asym_variance(m, f, opt);
    if (v > 0.0) return g / std::sqrt(v);
    if (g == 0.0) throw std::runtime_error("sharpe: undefined ratio, g = 0 and upsilon = 0");
    return g > 0.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
}

// Ri_r(f, gamma) = g - gamma * upsilon
inline double ridge(const ReturnModel& m, double f, double gamma, const EvalOptions& opt = {}) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("ridge: gamma must be nonnegative");
    const double g = growth_rate(m, f, opt);
    if (gamma == 0.0) return g;
    return g - gamma * asym_variance(m, f, opt);
}

// g'_r(f) = E[ r / (1+f r) ]; at f = 0 this is E[r] (+inf for the squared
// Cauchy model, whose growth behaves like sqrt(f) near 0).
inline MetricValue growth_derivative_detail(const ReturnModel& m, double f,
                                            const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    const auto cap = m.capabilities();
    if (f == 0.0 && !std::isnan(cap.mean_return) && !opt.force)
        return {cap.mean_return, Estimator::closed_form, {}};
    const Estimator est = detail::dispatch_g(m, opt.force);
    detail::check_estimator_feasible(m, est, cap.has_closed_form_g);
    if (est == Estimator::closed_form) {
        switch (m.kind()) {
            case ReturnKind::bernoulli: {
                const double p = m.bernoulli_p();
                return {p / (1.0 + f) - (1.0 - p) / (1.0 - f), est, {}};
            }
            case ReturnKind::squared_cauchy:
                if (f == 0.0) return {std::numeric_limits<double>::infinity(), est, {}};
                return {detail::cauchy_g_derivative(f), est, {}};
            case ReturnKind::squared_t3:
                return {detail::t3_g_derivative(f), est, {}};
            default:
                break;
        }
    }
    const double fc = std::min(f, detail::kFMax);
    auto h = [fc](double r) { return r / (1.0 + fc * r); };
    if (est == Estimator::quadrature) return {detail::expect_quad(m, h, opt.quad), est, {}};
    const auto mm = detail::expect_mc(m, h, opt.mc);
    return {mm.mean, Estimator::monte_carlo, mm.se_mean};
}

inline double growth_derivative(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    return growth_derivative_detail(m, f, opt).value;
}

// g''_r(f) = -E[ r^2 / (1+f r)^2 ], strictly negative while E r^2 < inf
inline double growth_second_derivative(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    const auto cap = m.capabilities();
    if (f == 0.0 && !std::isnan(cap.second_moment) && !opt.force) return -cap.second_moment;
    switch (m.kind()) {
        case ReturnKind::bernoulli: {
            const double p = m.bernoulli_p();
            return -p / ((1.0 + f) * (1.0 + f)) - (1.0 - p) / ((1.0 - f) * (1.0 - f));
        }
        case ReturnKind::squared_cauchy: {
            const double sf = std::sqrt(f), s1f = std::sqrt(1.0 - f);
            const double u = sf + s1f;
            const double up = 0.5 * (1.0 / sf - 1.0 / s1f);
            const double upp = -0.25 * (1.0 / (f * sf) + 1.0 / ((1.0 - f) * s1f));
            return 2.0 * (upp * u - up * up) / (u * u);
        }
        default:
            break;
    }
    const double fc = std::min(f, detail::kFMax);
    auto h = [fc](double r) {
        const double d = 1.0 + fc * r;
        return -r * r / (d * d);
    };
    if (m.kind() == ReturnKind::generic_sampler) return detail::expect_mc(m, h, opt.mc).mean;
    return detail::expect_quad(m, h, opt.quad);
}

// d upsilon / df = 2 ( E[r ln(1+fr)/(1+fr)] - g E[r/(1+fr)] )
inline double variance_derivative(const ReturnModel& m, double f, const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    if (m.kind() == ReturnKind::bernoulli) {
        const double p = m.bernoulli_p();
        const double L = std::log1p(f) - std::log1p(-f);
        return 2.0 * p * (1.0 - p) * L * 2.0 / (1.0 - f * f);
    }
    const double fc = std::min(f, detail::kFMax);
    const double g = growth_rate(m, f, opt);
    auto cross = [fc](double r) {
        const double d = 1.0 + fc * r;
        return r * std::log1p(fc * r) / d;
    };
    auto slope = [fc](double r) { return r / (1.0 + fc * r); };
    if (m.kind() == ReturnKind::generic_sampler) {
        const auto a = detail::expect_mc(m, cross, opt.mc);
        McSpec mc2 = opt.mc;  // same substream keeps the pair coupled
        const auto b = detail::expect_mc(m, slope, mc2);
        return 2.0 * (a.mean - g * b.mean);
    }
    return 2.0 * (detail::expect_quad(m, cross, opt.quad) - g * detail::expect_quad(m, slope, opt.quad));
}

// |closed-form - quadrature| growth gap; flags models whose printed closed
// form does not reproduce the integral law (see squared-t3 notes in README).
inline double closed_form_quadrature_gap(const ReturnModel& m, double f,
                                         const EvalOptions& opt = {}) {
    EvalOptions closed = opt;
    closed.force = Estimator::closed_form;
    EvalOptions quad = opt;
    quad.force = Estimator::quadrature;
    return std::fabs(growth_rate(m, f, closed) - growth_rate(m, f, quad));
}

inline RiskProfile risk_profile(const ReturnModel& m, double f, double gamma,
                                const EvalOptions& opt = {}) {
    detail::check_fraction(f);
    RiskProfile row;
    row.f = f;
    const auto g = growth_rate_detail(m, f, opt);
    const auto v = asym_variance_detail(m, f, opt);
    row.g = g.value;
    row.v = v.value;
    if (v.value > 0.0)
        row.sr = g.value / std::sqrt(v.value);
    else if (g.value > 0.0)
        row.sr = std::numeric_limits<double>::infinity();
    else
        row.sr = std::numeric_limits<double>::quiet_NaN();
    row.ri = g.value - gamma * v.value;
    row.estimator = static_cast<Estimator>(std::max(static_cast<int>(g.estimator),
                                                    static_cast<int>(v.estimator)));
    row.std_error = g.std_error;
    return row;
}

// Curve rows are independent; grid points evaluate concurrently with derived
// MC substreams, so the result does not depend on the thread count.
inline std::vector<RiskProfile> risk_curve(const ReturnModel& m, const std::vector<double>& grid,
                                           double gamma, const EvalOptions& opt = {}) {
    std::vector<RiskProfile> rows(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        EvalOptions o = opt;
        o.mc.seed = derive_seed(opt.mc.seed, i);
        rows[i] = risk_profile(m, grid[i], gamma, o);
    });
    return rows;
}

inline std::string format_full(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write_curve_csv(std::ostream& os, const std::vector<RiskProfile>& rows) {
    os << "f,g,v,sr,ri,estimator,std_error\n";
    for (const auto& r : rows) {
        os << format_full(r.f) << ',' << format_full(r.g) << ',' << format_full(r.v) << ','
           << format_full(r.sr) << ',' << format_full(r.ri) << ',' << to_string(r.estimator) << ',';
        if (r.std_error) os << format_full(*r.std_error);
        os << '\n';
    }
}

} // namespace kelly
