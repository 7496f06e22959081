#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace kelly {

// Brent's method for a root of f on [a,b]; requires a sign change.
template <class F>
double brent_root(const F& f, double a, double b, double xtol = 1e-12, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("brent_root: no sign change on bracket");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * 1e-16 * std::fabs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) return b;
        if (std::fabs(e) < tol || std::fabs(fa) <= std::fabs(fb)) {
            d = m; e = m;
        } else {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d; d = p / q;
            } else {
                d = m; e = m;
            }
        }
        a = b; fa = fb;
        b += std::fabs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa; d = b - a; e = d;
        }
    }
    return b;
}

// Brent's derivative-free minimizer on [a,b].
template <class F>
double brent_minimize(const F& f, double a, double b, double xtol = 1e-10, int max_iter = 200) {
    const double gold = 0.5 * (3.0 - std::sqrt(5.0));
    double x = a + gold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        const double tol1 = xtol * std::fabs(x) + 1e-15;
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) break;
        bool parabolic = false;
        if (std::fabs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p; else q = -q;
            const double e_old = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
                parabolic = true;
            }
        }
        if (!parabolic) {
            e = (x < m ? b : a) - x;
            d = gold * e;
        }
        const double u = x + (std::fabs(d) >= tol1 ? d : (d > 0.0 ? tol1 : -tol1));
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return x;
}

template <class F>
double golden_section_minimize(const F& f, double a, double b, double xtol = 1e-10) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct GridRefineResult {
    double x;
    double value;
    bool at_lower;
    bool at_upper;
};

// Coarse scan then local Brent refinement; ties keep the smallest abscissa.
// Intended for objectives that may be non-concave.
template <class F>
GridRefineResult grid_refine_maximize(const F& f, double lo, double hi, int points,
                                      double xtol = 1e-10) {
    if (points < 3) throw std::invalid_argument("grid_refine_maximize: need at least 3 points");
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        const double v = f(x);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    const double step = (hi - lo) / (points - 1);
    const double a = std::max(lo, lo + (best_i - 1) * step);
    const double b = std::min(hi, lo + (best_i + 1) * step);
    const double x = brent_minimize([&](double t) { return -f(t); }, a, b, xtol);
    double v = f(x);
    GridRefineResult out{x, v, false, false};
    if (f(lo) >= v) {
        out = {lo, f(lo), true, false};
    } else if (f(hi) > v) {
        out = {hi, f(hi), false, true};
    }
    out.at_lower = out.x <= lo + xtol;
    out.at_upper = out.x >= hi - xtol;
    return out;
}

} // namespace kelly
