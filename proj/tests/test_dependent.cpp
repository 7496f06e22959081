#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kelly/dependent.hpp"
#include "kelly/metrics.hpp"
#include "kelly/rng.hpp"
#include "kelly/stats.hpp"

using namespace kelly;

TEST_CASE("chain parameters must exclude absorbing states") {
    CHECK_THROWS_AS(TwoStateChain(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(TwoStateChain(0.5, 0.0), std::invalid_argument);
    CHECK_NOTHROW(TwoStateChain(17.0 / 24.0, 1.0 / 8.0));
}

TEST_CASE("chain kelly fraction") {
    CHECK(std::fabs(chain_kelly(TwoStateChain(17.0 / 24.0, 1.0 / 8.0)) - 0.5) <= 1e-14);
    CHECK(std::fabs(chain_kelly(TwoStateChain(0.75, 0.25)) - 0.5) <= 1e-14);  // iid case
    CHECK(chain_kelly(TwoStateChain(0.5, 0.5)) == 0.0);                       // zero edge
    CHECK(chain_kelly(TwoStateChain(0.3, 0.6)) == 0.0);                       // p < q
}

TEST_CASE("chain long-run variance closed form") {
    const TwoStateChain chain(17.0 / 24.0, 1.0 / 8.0);
    const auto lrv = chain_longrun_variance(chain, 0.5);
    CHECK(lrv.method == VarianceMethod::closed_form);
    const double v_iid = detail::bernoulli_v(0.75, 0.5);
    CHECK(std::fabs(lrv.v_tilde / v_iid - 5.0 / 7.0) <= 1e-15);
    CHECK_THAT(lrv.v_tilde, Catch::Matchers::WithinAbs(0.16165, 1e-5));

    const double sr_tilde = detail::bernoulli_g(0.75, 0.5) / std::sqrt(lrv.v_tilde);
    CHECK_THAT(sr_tilde, Catch::Matchers::WithinAbs(0.325, 0.01));

    // iid case: factor collapses to 1
    const auto iid = chain_longrun_variance(TwoStateChain(0.75, 0.25), 0.5);
    CHECK(std::fabs(iid.v_tilde - v_iid) <= 1e-15);
    CHECK_THROWS_AS(chain_longrun_variance(chain, 0.0), std::invalid_argument);
}

TEST_CASE("long-run variance drops below iid exactly when p+q < 1") {
    for (double p : {0.2, 0.4, 0.6, 0.8})
        for (double q : {0.2, 0.4, 0.6, 0.8}) {
            const TwoStateChain chain(p, q);
            const double v_iid = detail::bernoulli_v(chain.stationary_up(), 0.5);
            const double v_t = chain_longrun_variance(chain, 0.5).v_tilde;
            if (p + q < 1.0) CHECK(v_t < v_iid);
            else if (p + q > 1.0) CHECK(v_t > v_iid);
            else CHECK(std::fabs(v_t - v_iid) <= 1e-15);
        }
}

TEST_CASE("simulated chain reproduces the transition matrix and the mean") {
    const TwoStateChain chain(17.0 / 24.0, 1.0 / 8.0);
    const std::size_t n = 1'000'000;
    const auto path = simulate_chain(chain, n, 1234);

    std::size_t n_up = 0, up_up = 0, n_dn = 0, dn_dn = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (path[k] > 0) {
            ++n_up;
            up_up += path[k + 1] > 0;
        } else {
            ++n_dn;
            dn_dn += path[k + 1] < 0;
        }
    }
    const double p_hat = static_cast<double>(up_up) / n_up;
    const double q_hat = static_cast<double>(dn_dn) / n_dn;
    CHECK(std::fabs(p_hat - chain.p) <= 4.0 * std::sqrt(chain.p * (1.0 - chain.p) / n_up));
    CHECK(std::fabs(q_hat - chain.q) <= 4.0 * std::sqrt(chain.q * (1.0 - chain.q) / n_dn));

    // mean of r with the long-run-variance-based standard error
    const double mean = sample_mean(path);
    const double var_r = 4.0 * chain.stationary_up() * (1.0 - chain.stationary_up());
    const double v_tilde_r = (chain.p + chain.q) / (2.0 - chain.p - chain.q) * var_r;
    CHECK(std::fabs(mean - chain.mean_return()) <= 4.0 * std::sqrt(v_tilde_r / n));

    CHECK(simulate_chain(chain, 100, 5) == simulate_chain(chain, 100, 5));
    CHECK_THROWS_AS(simulate_chain(chain, 0, 1), std::invalid_argument);
}

TEST_CASE("batch means recovers iid and AR(1) long-run variances") {
    Xoshiro256 rng(77);
    std::vector<double> iid(200000);
    for (auto& x : iid) x = rng.normal();
    const auto b1 = batch_means_variance(iid);
    CHECK(std::fabs(b1.v_tilde - 1.0) <= 3.0 * *b1.std_error);
    CHECK(b1.block_length == static_cast<std::size_t>(std::ceil(std::cbrt(200000.0))));

    const auto ar = simulate_ar1(Ar1Process::standardized_gaussian(0.5), 400000, 78);
    const auto b2 = batch_means_variance(ar, 200);
    CHECK(std::fabs(b2.v_tilde - 3.0) <= 3.0 * *b2.std_error);
}

TEST_CASE("batch means matches the chain closed form") {
    const TwoStateChain chain(17.0 / 24.0, 1.0 / 8.0);
    const auto path = simulate_chain(chain, 1'000'000, 999);
    std::vector<double> logs(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) logs[i] = std::log1p(0.5 * path[i]);
    const auto bm = batch_means_variance(logs);
    const double closed = chain_longrun_variance(chain, 0.5).v_tilde;
    CHECK(std::fabs(bm.v_tilde - closed) <= 3.0 * *bm.std_error);
}

TEST_CASE("batch means input validation") {
    std::vector<double> tiny(50, 1.0);
    CHECK_THROWS_AS(batch_means_variance(tiny), std::invalid_argument);
    std::vector<double> ok(1000, 1.0);
    CHECK_THROWS_AS(batch_means_variance(ok, 200), std::invalid_argument);  // block > n/10
}

TEST_CASE("batch means squared error decays like 1/n at fixed block length") {
    const TwoStateChain chain(17.0 / 24.0, 1.0 / 8.0);
    const double closed = chain_longrun_variance(chain, 0.5).v_tilde;
    const std::size_t block = 64;
    std::vector<double> log_n, log_msd;
    for (std::size_t n : {std::size_t{1} << 13, std::size_t{1} << 14, std::size_t{1} << 15,
                          std::size_t{1} << 16}) {
        double msd = 0.0;
        const int reps = 20;
        for (int r = 0; r < reps; ++r) {
            const auto path = simulate_chain(chain, n, derive_seed(2024, 100 * n + r));
            std::vector<double> logs(path.size());
            for (std::size_t i = 0; i < path.size(); ++i) logs[i] = std::log1p(0.5 * path[i]);
            const double est = batch_means_variance(logs, block).v_tilde;
            msd += (est - closed) * (est - closed);
        }
        log_n.push_back(std::log(static_cast<double>(n)));
        log_msd.push_back(std::log(msd / reps));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(log_n.size());
    for (std::size_t i = 0; i < log_n.size(); ++i) {
        sx += log_n[i];
        sy += log_msd[i];
        sxx += log_n[i] * log_n[i];
        sxy += log_n[i] * log_msd[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope >= -1.3);
    CHECK(slope <= -0.7);
}

TEST_CASE("ar1 process: validation, stationary start, unit variance") {
    CHECK_THROWS_AS(Ar1Process::gaussian(1.0), std::invalid_argument);
    CHECK_THROWS_AS(Ar1Process::gaussian(-1.2), std::invalid_argument);

    const auto proc = Ar1Process::standardized_gaussian(0.5);
    std::vector<double> first(4000);
    for (std::size_t i = 0; i < first.size(); ++i)
        first[i] = simulate_ar1(proc, 1, derive_seed(55, i))[0];
    CHECK(std::fabs(sample_mean(first)) <= 4.0 / std::sqrt(4000.0));
    CHECK(std::fabs(sample_variance(first) - 1.0) <= 0.1);

    const auto series = simulate_ar1(proc, 200000, 56);
    CHECK(std::fabs(sample_variance(series) - 1.0) <= 0.02);
    // lag-1 autocorrelation ~ a
    double c1 = 0.0;
    for (std::size_t i = 0; i + 1 < series.size(); ++i) c1 += series[i] * series[i + 1];
    c1 /= static_cast<double>(series.size() - 1);
    CHECK_THAT(c1, Catch::Matchers::WithinAbs(0.5, 0.02));
}
