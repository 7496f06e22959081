// Acceptance suite: every criterion runs headlessly, prints one PASS/FAIL
// line with its runtime, and the binary exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kelly/dependent.hpp"
#include "kelly/empirics.hpp"
#include "kelly/hf_compound.hpp"
#include "kelly/metrics.hpp"
#include "kelly/optimize.hpp"
#include "kelly/return_models.hpp"
#include "kelly/stats.hpp"

using namespace kelly;

namespace {

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "  FAILED: " << what << "\n";
        }
    }
    void within(double value, double target, double tol, const std::string& what) {
        expect(std::fabs(value - target) <= tol,
               what + " = " + std::to_string(value) + ", want " + std::to_string(target) +
                   " +- " + std::to_string(tol));
    }
    void note(const std::string& line) { detail << "  " << line << "\n"; }
};

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// --------------------------------------------------------------------------

void criterion1_bernoulli(Checker& c) {
    const auto m = ReturnModel::bernoulli(0.75);
    const auto kelly = kelly_fraction(m);
    c.within(kelly.f_star, 0.5, 1e-10, "f*");
    c.within(growth_rate(m, kelly.f_star), 0.13081, 1e-5, "g(f*)");
    c.within(sharpe(m, kelly.f_star), 0.2750, 1e-3, "SR(f*)");
    c.within(growth_rate(m, 0.25), 0.09544, 1e-5, "g(0.25)");
    c.within(sharpe(m, 0.25), 0.4315, 1e-3, "SR(0.25)");
    const auto ri = ridge_fraction(m, 1.0);
    c.within(ri.f_star, 0.199, 2e-3, "f_Ri(1)");
    const double v_ri = asym_variance(m, ri.f_star);
    const double v_star = asym_variance(m, kelly.f_star);
    c.within(v_ri, 0.0308, 1e-3, "v(f_Ri)");
    c.within(v_star, 0.2263, 1e-3, "v(f*)");
    c.expect(1.0 - v_ri / v_star >= 0.85, "variance reduction >= 85%");
}

void criterion2_cauchy(Checker& c) {
    const auto m = ReturnModel::squared_cauchy();
    const auto kelly = kelly_fraction(m);
    c.within(kelly.f_star, 0.5, 1e-6, "f*");
    c.within(kelly.objective_value, std::log(2.0), 1e-8, "g(f*)");
    const auto sh = sharpe_fraction(m);
    c.within(sh.f_star, 0.25, 0.02, "f_circ");
    c.within(sh.objective_value, 0.41, 0.02, "SR(f_circ)");
    c.within(growth_rate(m, sh.f_star), 0.62, 0.02, "g(f_circ)");
    c.expect(ridge_fraction(m, 1.0).f_star == 0.0, "f_Ri(1) = 0");
    c.expect(ridge_fraction(m, 2.0).f_star == 0.0, "f_Ri(2) = 0");
    c.within(ridge_fraction(m, 0.2).f_star, 0.16, 0.02, "f_Ri(0.2)");
}

void criterion3_t3(Checker& c) {
    const auto m = ReturnModel::squared_student_t3();
    const double radical =
        (7.0 + std::sqrt(21.0) - std::sqrt(6.0 * std::sqrt(21.0) - 18.0)) / 16.0;
    const auto kelly = kelly_fraction(m);
    c.within(kelly.f_star, radical, 1e-5, "f* vs radical");
    c.within(kelly.objective_value, 0.52, 0.01, "g(f*)");

    // recompute the Sharpe maximum and report it next to the printed ~1.2
    const auto sh = sharpe_fraction(m);
    c.note("printed-closed-form SR max: SR(" + std::to_string(sh.f_star) + ") = " +
           std::to_string(sh.objective_value) + " (source reports ~1.2 at ~0.2)");
    EvalOptions quad;
    quad.force = Estimator::quadrature;
    double best_sr = 0.0, best_f = 0.0;
    for (int i = 1; i <= 400; ++i) {
        const double f = 0.6 * i / 400.0;
        const double g = growth_rate(m, f, quad);
        const double v = asym_variance(m, f, quad);
        if (v > 0.0 && g / std::sqrt(v) > best_sr) {
            best_sr = g / std::sqrt(v);
            best_f = f;
        }
    }
    c.note("integral-law SR max: SR(" + std::to_string(best_f) + ") = " +
           std::to_string(best_sr));
    const double gap = closed_form_quadrature_gap(m, best_f);
    if (gap > 1e-6)
        c.note("flag: closed form deviates from the integral law by " + std::to_string(gap) +
               " at f = " + std::to_string(best_f) + " (recorded, not asserted)");

    // acceptance only requires quadrature and monte carlo to agree
    EvalOptions mc;
    mc.force = Estimator::monte_carlo;
    mc.mc.samples = 10'000'000;
    mc.mc.seed = 2024;
    const auto gm = growth_rate_detail(m, best_f, mc);
    const double gq = growth_rate(m, best_f, quad);
    c.expect(std::fabs(gm.value - gq) <= 4.0 * *gm.std_error,
             "MC growth within 4 SE of quadrature");
    const auto vm = asym_variance_detail(m, best_f, mc);
    const double vq = asym_variance(m, best_f, quad);
    c.expect(std::fabs(vm.value - vq) <= 4.0 * *vm.std_error,
             "MC variance within 4 SE of quadrature");
}

void criterion4_chain(Checker& c) {
    const TwoStateChain chain(17.0 / 24.0, 1.0 / 8.0);
    c.within(chain_kelly(chain), 0.5, 1e-14, "f*");
    const double v_iid = detail::bernoulli_v(chain.stationary_up(), 0.5);
    const auto lrv = chain_longrun_variance(chain, 0.5);
    c.within(lrv.v_tilde / v_iid, 5.0 / 7.0, 1e-15, "vtilde/v");
    const double sr = detail::bernoulli_g(0.75, 0.5) / std::sqrt(lrv.v_tilde);
    c.within(sr, 0.325, 0.01, "SR_tilde(f*)");

    const auto path = simulate_chain(chain, 1'000'000, 42);
    std::vector<double> logs(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) logs[i] = std::log1p(0.5 * path[i]);
    const auto bm = batch_means_variance(logs);
    c.expect(std::fabs(bm.v_tilde - lrv.v_tilde) <= 3.0 * *bm.std_error,
             "batch means within 3 SE of closed form (est " + std::to_string(bm.v_tilde) +
                 ", closed " + std::to_string(lrv.v_tilde) + ", se " +
                 std::to_string(*bm.std_error) + ")");
}

void criterion5_hf(Checker& c) {
    // f_n* decay at the n^{-1/2} rate (skewed two-point driver, exact g_n)
    std::vector<double> log_n, log_err;
    double f_at_256 = 0.0;
    for (long n : {4L, 16L, 64L, 256L}) {
        const HfScheme s{0.02, 0.2, n, HfKind::geometric, TwoPointDriver{0.2}};
        const double fn = hf_kelly(s);
        if (n == 256) f_at_256 = fn;
        log_n.push_back(std::log(static_cast<double>(n)));
        log_err.push_back(std::log(std::fabs(fn - 0.5)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
        sx += log_n[i];
        sy += log_err[i];
        sxx += log_n[i] * log_n[i];
        sxy += log_n[i] * log_err[i];
    }
    const double k = static_cast<double>(log_n.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    c.within(slope, -0.5, 0.2, "log-log decay slope of |f_n* - 0.5|");

    const HfScheme s256{0.02, 0.2, 256, HfKind::geometric, TwoPointDriver{0.2}};
    const auto gn = hf_growth(s256, f_at_256, 100.0, 16, 512);
    c.expect(std::fabs(gn.value - 0.005) <= 4.0 * gn.std_error,
             "g_n(f_n*) = " + std::to_string(gn.value) + " within 4 SE (" +
                 std::to_string(gn.std_error) + ") of 0.005");

    // rho-normal AR(1) driver: Var[ln W_t]/t = 3 f^2 sigma^2
    const HfScheme ar{0.02, 0.2, 256, HfKind::geometric, Ar1Driver{0.5}};
    const double f = 0.5, t = 100.0;
    std::vector<double> terminal(1000);
    parallel_for(terminal.size(), [&](std::size_t rep) {
        terminal[rep] = simulate_hf_wealth(ar, f, t, derive_seed(905, rep)).back();
    });
    const double var_rate = sample_variance(terminal) / t;
    const double expect = 3.0 * f * f * 0.04;
    const double se = var_rate * std::sqrt(2.0 / (terminal.size() - 1.0));
    c.expect(std::fabs(var_rate - expect) <= 4.0 * se,
             "Var[ln W_t]/t = " + std::to_string(var_rate) + " within 4 SE of " +
                 std::to_string(expect));
}

void criterion6_ct(Checker& c) {
    Xoshiro256 prng(20250810);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * prng.uniform(); };
    struct Setting {
        CtModel model;
        double f;
        std::string name;
    };
    std::vector<Setting> settings;
    for (int i = 0; i < 10; ++i) {
        const double a = uni(0.5, 2.0), b = uni(0.05, 0.3), sig = uni(0.15, 0.4);
        const double mu = uni(0.3, 0.9) * sig * sig, rho = uni(-0.9, 0.9);
        settings.push_back({CtModel{VasicekRate{a, b, mu, sig, rho}}, uni(0.2, 0.8),
                            "vasicek#" + std::to_string(i)});
    }
    for (int i = 0; i < 10; ++i) {
        const double a = uni(0.5, 2.0), mu = uni(0.05, 0.3);
        const double b = std::sqrt(uni(0.25, 1.0) * 2.0 * a * mu / 1.3);
        const double sig = uni(0.15, 0.4), rho = uni(-0.9, 0.9);
        settings.push_back({CtModel{CirRate{a, b, mu, sig, rho}}, uni(0.2, 0.8),
                            "cir#" + std::to_string(i)});
    }
    for (int i = 0; i < 10; ++i) {
        const double kappa = uni(0.5, 2.0), s2 = uni(0.02, 0.1);
        const double beta = std::sqrt(uni(0.25, 1.0) * 2.0 * kappa * s2 / 1.3);
        const double mu = uni(0.2, 1.0) * s2, rho = uni(-0.9, 0.9);
        settings.push_back({CtModel{HestonVol{mu, kappa, s2, beta, rho}}, uni(0.2, 0.8),
                            "heston#" + std::to_string(i)});
    }

    const double t = 500.0, dt = 1e-2;
    const std::size_t reps = 1000;
    std::size_t idx = 0;
    for (const auto& s : settings) {
        const auto asy = ct_asymptotics(s.model);
        const auto ens = make_ensemble_ct(s.model, s.f, t, dt, reps, derive_seed(606, idx++));
        std::vector<double> z(ens.terminal.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = (ens.terminal[i] - t * asy.g(s.f)) / std::sqrt(t);
        const double v_emp = sample_variance(z);
        const double se = v_emp * std::sqrt(2.0 / (reps - 1.0));
        c.expect(std::fabs(v_emp - asy.v(s.f)) <= 4.0 * se,
                 s.name + ": empirical " + std::to_string(v_emp) + " vs v_R " +
                     std::to_string(asy.v(s.f)) + " (4se = " + std::to_string(4.0 * se) + ")");
    }

    // argmax of g_R is mu/sigma^2 regardless of rho_bar
    double f_vas = -1.0, f_hes = -1.0;
    for (double rho : {-0.9, -0.4, 0.0, 0.3, 0.7}) {
        const auto asy = ct_asymptotics(CtModel{VasicekRate{1.0, 0.1, 0.02, 0.2, rho}});
        if (f_vas < 0.0) f_vas = asy.f_star;
        c.expect(asy.f_star == f_vas, "vasicek f* invariant in rho");
        c.within(asy.f_star, 0.02 / (0.2 * 0.2), 1e-15, "vasicek f* = mu/sigma^2");
        const auto hes = ct_asymptotics(CtModel{HestonVol{0.02, 2.0, 0.04, 0.35, rho}});
        if (f_hes < 0.0) f_hes = hes.f_star;
        c.expect(hes.f_star == f_hes, "heston f* invariant in rho");
        c.within(hes.f_star, 0.5, 1e-15, "heston f* = mu/sigma^2");
    }

    // the Heston zero-variance fraction collapses the fluctuations
    const double kappa = 0.25, beta = 0.6, s2 = 0.8, mu_h = 0.7;
    const double fz = 2.0 * 0.99 * kappa / beta;
    auto var_at = [&](double rho, std::uint64_t seed) {
        const CtModel mdl{HestonVol{mu_h, kappa, s2, beta, rho}};
        const auto asy = ct_asymptotics(mdl);
        const auto ens = make_ensemble_ct(mdl, fz, 200.0, 5e-3, 1000, seed);
        std::vector<double> z(ens.terminal.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = (ens.terminal[i] - 200.0 * asy.g(fz)) / std::sqrt(200.0);
        return sample_variance(z);
    };
    const double v0 = var_at(0.0, 7070), v99 = var_at(0.99, 7071);
    c.expect(1.0 - v99 / v0 >= 0.80, "heston variance reduction " +
                                         std::to_string(100.0 * (1.0 - v99 / v0)) +
                                         "% at rho 0.99 vs 0");
}

void criterion7_first_passage(Checker& c) {
    const Gbm gbm{0.05, 0.3};
    const double f = 0.05 / 0.09;
    const auto law = first_passage_law(gbm, f, std::exp(1.0));
    const auto norm = integrate_upper([&](double t) { return law.pdf(t); }, 0.0);
    c.within(norm.value, 1.0, 1e-8, "pdf normalization");

    const auto tau = first_passage_simulate(gbm, f, std::exp(1.0), 10000, 321, 0.02);
    const double mean = sample_mean(tau);
    const double se = std::sqrt(sample_variance(tau) / static_cast<double>(tau.size()));
    c.expect(std::fabs(mean - law.mean) <= 4.0 * se,
             "passage mean " + std::to_string(mean) + " within 4 SE of " +
                 std::to_string(law.mean));
    c.expect(std::fabs(sample_variance(tau) - law.variance) <= 0.2 * law.variance,
             "passage variance " + std::to_string(sample_variance(tau)) + " within 20% of " +
                 std::to_string(law.variance));

    const auto m = ReturnModel::bernoulli(0.75);
    const auto rep = renewal_check(m, 0.5, {std::exp(5.0), std::exp(10.0), std::exp(20.0)}, 3000,
                                   3214);
    c.expect(std::fabs(rep.metrics.at("slope_z")) <= 3.0,
             "renewal slope z = " + std::to_string(rep.metrics.at("slope_z")));
}

void criterion8_logistic_price(Checker& c) {
    const auto rep = gamma_limit_check(LogisticPrice{1.0, 2.0, 1.0}, 0.5, 200.0, 1e-3, 1000, 88);
    c.expect(rep.pass, "KS vs f ln Gamma(3,2) at level 1e-3 (p = " +
                           std::to_string(rep.p_value) + ")");
    const auto asy = ct_asymptotics(CtModel{LogisticPrice{1.0, 2.0, 1.0}});
    c.expect(asy.g(0.5) == 0.125, "g_R(0.5) = 0.125 exactly");
}

void criterion9_properties(Checker& c) {
    // concavity of g
    for (const auto& m : {ReturnModel::bernoulli(0.75), ReturnModel::squared_cauchy(),
                          ReturnModel::squared_student_t3()}) {
        bool concave = true;
        std::vector<double> g(120);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = growth_rate(m, 1e-4 + (1.0 - 1e-6 - 1e-4) * i / (g.size() - 1.0));
        for (std::size_t i = 1; i + 1 < g.size(); ++i)
            concave = concave && g[i - 1] - 2.0 * g[i] + g[i + 1] <= 1e-9;
        c.expect(concave, "concavity of g");
    }
    // monotone variance
    for (const auto& m : {ReturnModel::bernoulli(0.75), ReturnModel::squared_cauchy()}) {
        bool monotone = true;
        double prev = 0.0;
        for (int i = 1; i <= 40; ++i) {
            const double v = asym_variance(m, 0.98 * i / 40.0);
            monotone = monotone && v >= prev - 1e-9;
            prev = v;
        }
        c.expect(monotone, "monotone variance");
    }
    // SR(0+) limit
    c.within(sharpe(ReturnModel::bernoulli(0.75), 1e-4), 0.5 / std::sqrt(0.75), 1e-3, "SR(0+)");
    // f_Ri < f* across gamma
    for (const auto& m : {ReturnModel::bernoulli(0.75), ReturnModel::squared_cauchy()}) {
        const double fstar = kelly_fraction(m).f_star;
        for (double gamma : {0.1, 0.2, 0.5, 1.0, 2.0})
            c.expect(ridge_fraction(m, gamma).f_star < fstar, "f_Ri < f*");
    }
    // ridge / variance-cap duality
    const auto m = ReturnModel::bernoulli(0.75);
    for (double f0 : {0.1, 0.25, 0.4}) {
        const auto cap = variance_capped_fraction(m, asym_variance(m, f0));
        const auto rr = ridge_fraction(m, *cap.multiplier);
        c.expect(std::fabs(rr.f_star - f0) <= 1e-6, "duality round trip at f0");
    }
    // determinism under fixed seeds
    const TwoStateChain chain(0.7, 0.2);
    c.expect(simulate_chain(chain, 10000, 5) == simulate_chain(chain, 10000, 5),
             "chain paths reproduce");
    const auto c1 = clt_check(m, 0.5, 2000, 200, 77);
    const auto c2 = clt_check(m, 0.5, 2000, 200, 77);
    c.expect(c1.p_value == c2.p_value, "identical seeds give identical p-values");
    const auto curve1 = risk_curve(m, {0.1, 0.2, 0.3}, 1.0);
    const auto curve2 = risk_curve(m, {0.1, 0.2, 0.3}, 1.0);
    bool same = true;
    for (std::size_t i = 0; i < curve1.size(); ++i)
        same = same && curve1[i].g == curve2[i].g && curve1[i].v == curve2[i].v;
    c.expect(same, "curves reproduce");
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        double budget_s;
        std::function<void(Checker&)> fn;
    };
    const std::vector<Entry> entries{
        {1, "Bernoulli golden values", 1.0, criterion1_bernoulli},
        {2, "squared-Cauchy example", 10.0, criterion2_cauchy},
        {3, "squared-t3 example", 120.0, criterion3_t3},
        {4, "two-state Markov chain", 30.0, criterion4_chain},
        {5, "high-frequency convergence", 120.0, criterion5_hf},
        {6, "continuous-time closed forms", 600.0, criterion6_ct},
        {7, "first passage", 120.0, criterion7_first_passage},
        {8, "logistic-price limit", 120.0, criterion8_logistic_price},
        {9, "property suites", 300.0, criterion9_properties},
    };
    bool all_ok = true;
    for (const auto& e : entries) {
        Checker c;
        const double t0 = now_s();
        try {
            e.fn(c);
        } catch (const std::exception& ex) {
            c.ok = false;
            c.detail << "  exception: " << ex.what() << "\n";
        }
        const double dt = now_s() - t0;
        if (dt > e.budget_s) {
            c.ok = false;
            c.detail << "  runtime " << dt << "s exceeded the " << e.budget_s << "s budget\n";
        }
        std::printf("[%s] criterion %d: %s (%.2fs < %.0fs)\n", c.ok ? "PASS" : "FAIL", e.id,
                    e.name, dt, e.budget_s);
        const std::string detail = c.detail.str();
        if (!detail.empty()) std::fputs(detail.c_str(), stdout);
        all_ok = all_ok && c.ok;
    }
    std::printf("%s\n", all_ok ? "acceptance: all criteria passed"
                               : "acceptance: FAILURES present");
    return all_ok ? 0 : 1;
}
