#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace kelly {

struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 4000;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1,1] (QUADPACK dqk15).
inline constexpr double gk_xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double fv1[7], fv2[7];
    double res_g = fc * gk_wg[3];
    double res_k = fc * gk_wgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk_xgk[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        res_k += gk_wgk[j] * (fv1[j] + fv2[j]);
        if (j % 2 == 1) res_g += gk_wg[j / 2] * (fv1[j] + fv2[j]);
    }
    // QUADPACK-style conservative error: scale |K-G| by the deviation integral
    const double reskh = res_k * 0.5;
    double resasc = gk_wgk[7] * std::fabs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += gk_wgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
    resasc *= std::fabs(h);
    value = res_k * h;
    err = std::fabs((res_k - res_g) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
}

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

} // namespace detail

// Globally adaptive Gauss-Kronrod on a finite interval: always refines the
// interval with the largest error estimate.
template <class F>
QuadResult integrate(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
    if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0))
        throw std::invalid_argument("integrate: tolerances must be positive");
    std::priority_queue<detail::Interval> heap;
    double value, err;
    detail::gk15(f, a, b, value, err);
    heap.push({a, b, value, err});
    double total = value, total_err = err;
    int n = 1;
    while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)) &&
           n < spec.max_subdivisions) {
        const detail::Interval worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval at machine resolution
            heap.push(worst);
            break;
        }
        double v1, e1, v2, e2;
        detail::gk15(f, worst.a, mid, v1, e1);
        detail::gk15(f, mid, worst.b, v2, e2);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push({worst.a, mid, v1, e1});
        heap.push({mid, worst.b, v2, e2});
        ++n;
    }
    QuadResult out;
    out.value = total;
    out.error = total_err;
    out.subdivisions = n;
    out.converged = total_err <= std::max(spec.abs_tol, spec.rel_tol * std::fabs(total));
    return out;
}

// integral over [a, +inf) via x = a + tan(theta)
template <class F>
QuadResult integrate_upper(const F& f, double a, const QuadratureSpec& spec = {}) {
    auto g = [&](double th) {
        const double t = std::tan(th);
        const double sec2 = 1.0 + t * t;
        return f(a + t) * sec2;
    };
    return integrate(g, 0.0, 0.5 * M_PI, spec);
}

// integral over the real line via x = tan(theta)
template <class F>
QuadResult integrate_line(const F& f, const QuadratureSpec& spec = {}) {
    auto g = [&](double th) {
        const double t = std::tan(th);
        const double sec2 = 1.0 + t * t;
        return f(t) * sec2;
    };
    return integrate(g, -0.5 * M_PI, 0.5 * M_PI, spec);
}

} // namespace kelly
