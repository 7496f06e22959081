#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kelly/rng.hpp"
#include "kelly/stats.hpp"

using namespace kelly;

TEST_CASE("xoshiro streams are seed-deterministic and distinct") {
    Xoshiro256 a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto xa = a.next(), xb = b.next(), xc = c.next();
        all_equal = all_equal && xa == xb;
        any_diff = any_diff || xa != xc;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform stays inside the open unit interval") {
    Xoshiro256 rng(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("derive_seed separates task substreams") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(1, 5) == derive_seed(1, 5));
}

TEST_CASE("normal quantile matches reference values") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK_THAT(normal_quantile(0.975), Catch::Matchers::WithinAbs(1.959963984540054, 1e-12));
    CHECK_THAT(normal_quantile(0.9999), Catch::Matchers::WithinAbs(3.719016485455709, 1e-12));
    CHECK_THAT(normal_quantile(1e-9), Catch::Matchers::WithinAbs(-5.9978070150076865, 1e-11));
    CHECK_THAT(normal_quantile(0.3), Catch::Matchers::WithinAbs(-0.5244005127080409, 1e-12));
}

TEST_CASE("normal cdf and quantile are inverse") {
    for (double p : {0.001, 0.1, 0.45, 0.72, 0.999})
        CHECK_THAT(normal_cdf(normal_quantile(p)), Catch::Matchers::WithinAbs(p, 1e-12));
}

TEST_CASE("sampled normals have the right moments") {
    Xoshiro256 rng(11);
    const std::size_t n = 200000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("student t3 quantile inverts the closed-form cdf") {
    CHECK(student_t3_quantile(0.5) == 0.0);
    CHECK_THAT(student_t3_quantile(0.9), Catch::Matchers::WithinAbs(1.6377443536962095, 1e-10));
    CHECK_THAT(student_t3_quantile(0.99), Catch::Matchers::WithinAbs(4.540702858471383, 1e-9));
    CHECK_THAT(student_t3_quantile(0.6), Catch::Matchers::WithinAbs(0.27667066233268983, 1e-10));
    for (double p : {1e-6, 0.02, 0.31, 0.5, 0.77, 0.999, 1.0 - 1e-7})
        CHECK_THAT(student_t3_cdf(student_t3_quantile(p)), Catch::Matchers::WithinAbs(p, 1e-12));
    CHECK_THROWS_AS(student_t3_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(student_t3_quantile(1.0), std::invalid_argument);
}

TEST_CASE("regularized incomplete gamma matches reference values") {
    CHECK_THAT(gamma_p(2.5, 1.3), Catch::Matchers::WithinAbs(0.23863473215498604, 1e-13));
    CHECK_THAT(gamma_p(0.5, 3.0), Catch::Matchers::WithinAbs(0.9856941215645704, 1e-13));
    CHECK_THAT(gamma_p(10.0, 9.0), Catch::Matchers::WithinAbs(0.4125917556680583, 1e-13));
    CHECK(gamma_p(1.0, 0.0) == 0.0);
    CHECK_THROWS_AS(gamma_p(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("gamma sampler matches Gamma(shape, rate) moments") {
    Xoshiro256 rng(3);
    const double shape = 3.0, rate = 2.0;
    const std::size_t n = 200000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = gamma_draw(rng, shape, rate);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(shape / rate, 0.01));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(shape / (rate * rate), 0.02));
    // small-shape branch
    double s_small = 0.0;
    for (std::size_t i = 0; i < n; ++i) s_small += gamma_draw(rng, 0.5, 1.0);
    CHECK_THAT(s_small / n, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("kolmogorov tail matches reference values") {
    CHECK_THAT(kolmogorov_tail(1.0), Catch::Matchers::WithinAbs(0.26999967167735456, 1e-12));
    CHECK_THAT(kolmogorov_tail(0.5), Catch::Matchers::WithinAbs(0.9639452436648751, 1e-12));
    CHECK_THAT(kolmogorov_tail(1.6), Catch::Matchers::WithinAbs(0.011952043239196616, 1e-12));
    CHECK(kolmogorov_tail(0.0) == 1.0);
}

TEST_CASE("ks test accepts its own null and rejects a shifted one") {
    Xoshiro256 rng(19);
    std::vector<double> xs(2000);
    for (auto& x : xs) x = rng.normal();
    const auto ok = ks_test(xs, [](double x) { return normal_cdf(x); });
    CHECK(ok.p_value > 1e-3);
    const auto bad = ks_test(xs, [](double x) { return normal_cdf(x - 0.5); });
    CHECK(bad.p_value < 1e-6);
}

TEST_CASE("sample statistics helpers") {
    std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    CHECK(sample_mean(xs) == 2.5);
    CHECK_THAT(sample_variance(xs), Catch::Matchers::WithinAbs(5.0 / 3.0, 1e-15));
    CHECK_THROWS_AS(sample_mean(std::vector<double>{}), std::invalid_argument);
    CHECK_THAT(dkw_band(100000, 1e-3), Catch::Matchers::WithinAbs(
        std::sqrt(std::log(2000.0) / 2e5), 1e-15));
}
