#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace kelly {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Kahan-compensated sum.
inline double compensated_sum(std::span<const double> xs) {
    double s = 0.0, c = 0.0;
    for (double x : xs) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

inline double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("sample_mean: empty sample");
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance, two-pass.
inline double sample_variance(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("sample_variance: need at least 2 points");
    const double m = sample_mean(xs);
    double s = 0.0, c = 0.0;
    for (double x : xs) {
        const double d = (x - m) * (x - m);
        const double y = d - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s / static_cast<double>(n - 1);
}

// Student-t cdf with 3 degrees of freedom (closed form).
inline double student_t3_cdf(double x) {
    const double u = x / std::sqrt(3.0);
    return 0.5 + (std::atan(u) + u / (1.0 + u * u)) / M_PI;
}

// Student-t3 quantile: bracketed Newton on the closed-form cdf.
inline double student_t3_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t3_quantile: p outside (0,1)");
    if (p == 0.5) return 0.0;
    // Cauchy quantile seeds the iteration; t3 tails are lighter so it brackets.
    double x = std::tan(M_PI * (p - 0.5));
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const double sqrt3 = std::sqrt(3.0);
    for (int it = 0; it < 100; ++it) {
        const double u = x / sqrt3;
        const double fx = 0.5 + (std::atan(u) + u / (1.0 + u * u)) / M_PI - p;
        if (fx > 0.0) hi = x; else lo = x;
        const double dens = 2.0 / (M_PI * sqrt3) * std::pow(1.0 + u * u, -2.0);
        double step = fx / dens;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) {
            if (std::isinf(lo)) xn = hi - std::fabs(hi);
            else if (std::isinf(hi)) xn = lo + std::fabs(lo);
            else xn = 0.5 * (lo + hi);
        }
        if (std::fabs(xn - x) <= 1e-15 * (1.0 + std::fabs(xn))) return xn;
        x = xn;
    }
    return x;
}

// Regularized lower incomplete gamma P(a,x): series for x < a+1, continued
// fraction (modified Lentz) otherwise.
inline double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("gamma_p: shape must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

// cdf of Gamma(shape, rate)
inline double gamma_cdf(double x, double shape, double rate) {
    if (x <= 0.0) return 0.0;
    return gamma_p(shape, rate * x);
}

inline double gamma_pdf(double x, double shape, double rate) {
    if (x <= 0.0) return 0.0;
    return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x -
                    std::lgamma(shape));
}

// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic;  // sup |F_n - F|
    double p_value;
    std::size_t n;
};

// One-sample Kolmogorov-Smirnov test against a callable cdf.
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    const std::size_t n = sample.size();
    if (n < 5) throw std::invalid_argument("ks_test: need at least 5 points");
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = cdf(sample[i]);
        const double lo = F - static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - F;
        d = std::max({d, lo, hi});
    }
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;  // Stephens' finite-n correction
    return KsResult{d, kolmogorov_tail(lambda), n};
}

// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1-delta.
inline double dkw_band(std::size_t n, double delta) {
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

} // namespace kelly
