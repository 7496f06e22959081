#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "kelly/quadrature.hpp"
#include "kelly/rng.hpp"
#include "kelly/stats.hpp"

namespace kelly {

enum class ReturnKind {
    bernoulli,       // P(r=+1)=p, P(r=-1)=1-p
    squared_cauchy,  // r = eta^2 - 1, eta standard Cauchy
    squared_t3,      // r = T3^2 - 1, T3 Student-t with 3 dof
    generic_density,
    generic_sampler,
};

struct ModelCapabilities {
    bool has_closed_form_g = false;
    bool has_closed_form_v = false;
    bool has_density = false;
    double mean_return = std::numeric_limits<double>::quiet_NaN();
    double second_moment = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct DensityPayload {
    std::function<double(double)> pdf;
    double lo = 0.0;
    double hi = 0.0;  // +inf allowed
    // inverse-cdf table in the transformed coordinate (x = lo + tan(theta) when
    // hi is infinite, identity otherwise)
    std::vector<double> grid;
    std::vector<double> cdf;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double second = std::numeric_limits<double>::quiet_NaN();
};

struct SamplerPayload {
    std::function<double(Xoshiro256&)> draw;
};

} // namespace detail

// One-period return law r. Immutable after construction; safe to share across
// threads. Sampling takes an explicit seed, so there is no shared generator.
class ReturnModel {
public:
    static ReturnModel bernoulli(double p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("ReturnModel::bernoulli: p must lie in (0,1)");
        ReturnModel m(ReturnKind::bernoulli);
        m.p_ = p;
        return m;
    }

    static ReturnModel squared_cauchy() { return ReturnModel(ReturnKind::squared_cauchy); }

    static ReturnModel squared_student_t3() { return ReturnModel(ReturnKind::squared_t3); }

    // pdf must be normalized on [lo, hi]; lo >= -1 is required, hi may be +inf.
    static ReturnModel generic_density(std::function<double(double)> pdf, double lo, double hi,
                                       const QuadratureSpec& spec = {}) {
        if (!(lo >= -1.0))
            throw std::invalid_argument("ReturnModel::generic_density: support must start at or above -1");
        if (!(hi > lo))
            throw std::invalid_argument("ReturnModel::generic_density: empty support");
        ReturnModel m(ReturnKind::generic_density);
        auto payload = std::make_shared<detail::DensityPayload>();
        payload->pdf = std::move(pdf);
        payload->lo = lo;
        payload->hi = hi;
        build_inverse_cdf(*payload, spec);
        compute_moments(*payload, spec);
        m.density_ = std::move(payload);
        return m;
    }

    static ReturnModel generic_sampler(std::function<double(Xoshiro256&)> draw) {
        ReturnModel m(ReturnKind::generic_sampler);
        auto payload = std::make_shared<detail::SamplerPayload>();
        payload->draw = std::move(draw);
        m.sampler_ = std::move(payload);
        return m;
    }

    ReturnKind kind() const { return kind_; }

    double bernoulli_p() const {
        if (kind_ != ReturnKind::bernoulli)
            throw std::logic_error("ReturnModel: not a Bernoulli model");
        return p_;
    }

    ModelCapabilities capabilities() const {
        ModelCapabilities c;
        switch (kind_) {
            case ReturnKind::bernoulli:
                c.has_closed_form_g = true;
                c.has_closed_form_v = true;
                c.mean_return = 2.0 * p_ - 1.0;
                c.second_moment = 1.0;
                break;
            case ReturnKind::squared_cauchy:
                c.has_closed_form_g = true;
                c.has_density = true;
                c.mean_return = std::numeric_limits<double>::infinity();
                c.second_moment = std::numeric_limits<double>::infinity();
                break;
            case ReturnKind::squared_t3:
                c.has_closed_form_g = true;
                c.has_density = true;
                c.mean_return = 2.0;  // E[T_n^2 - 1] = 2/(n-2) at n=3
                c.second_moment = std::numeric_limits<double>::infinity();
                break;
            case ReturnKind::generic_density:
                c.has_density = true;
                c.mean_return = density_->mean;
                c.second_moment = density_->second;
                break;
            case ReturnKind::generic_sampler:
                break;
        }
        return c;
    }

    // One draw from the law. Uses a fixed number of uniforms per draw for the
    // named kinds, so substreams are counter-stable.
    double draw(Xoshiro256& rng) const {
        switch (kind_) {
            case ReturnKind::bernoulli:
                return rng.uniform() < p_ ? 1.0 : -1.0;
            case ReturnKind::squared_cauchy: {
                const double eta = std::tan(M_PI * (rng.uniform() - 0.5));
                return eta * eta - 1.0;
            }
            case ReturnKind::squared_t3: {
                const double eta = student_t3_quantile(rng.uniform());
                return eta * eta - 1.0;
            }
            case ReturnKind::generic_density:
                return draw_density(rng.uniform());
            case ReturnKind::generic_sampler: {
                const double r = sampler_->draw(rng);
                if (!(r >= -1.0))
                    throw std::runtime_error("ReturnModel: sampler support violation, drew value below -1");
                return r;
            }
        }
        throw std::logic_error("ReturnModel: unknown kind");
    }

    std::vector<double> sample(std::uint64_t seed, std::size_t n) const {
        if (n == 0) throw std::invalid_argument("ReturnModel::sample: n must be >= 1");
        Xoshiro256 rng(seed);
        std::vector<double> out(n);
        for (auto& x : out) x = draw(rng);
        return out;
    }

    const detail::DensityPayload& density_payload() const {
        if (!density_) throw std::logic_error("ReturnModel: no density payload");
        return *density_;
    }

private:
    explicit ReturnModel(ReturnKind k) : kind_(k) {}

    static constexpr std::size_t kCdfTableSize = 4097;

    static double theta_to_x(const detail::DensityPayload& d, double th) {
        return std::isinf(d.hi) ? d.lo + std::tan(th) : th;
    }

    static void build_inverse_cdf(detail::DensityPayload& d, const QuadratureSpec& spec) {
        const bool infinite = std::isinf(d.hi);
        const double tlo = infinite ? 0.0 : d.lo;
        const double thi = infinite ? 0.5 * M_PI : d.hi;
        auto g = [&](double th) {
            if (infinite) {
                const double t = std::tan(th);
                return d.pdf(d.lo + t) * (1.0 + t * t);
            }
            return d.pdf(th);
        };
        d.grid.resize(kCdfTableSize);
        d.cdf.resize(kCdfTableSize);
        QuadratureSpec cell = spec;
        cell.abs_tol = std::max(spec.abs_tol, 1e-12);
        cell.max_subdivisions = 64;
        double acc = 0.0;
        d.grid[0] = tlo;
        d.cdf[0] = 0.0;
        for (std::size_t k = 1; k < kCdfTableSize; ++k) {
            const double a = tlo + (thi - tlo) * static_cast<double>(k - 1) / (kCdfTableSize - 1);
            const double b = tlo + (thi - tlo) * static_cast<double>(k) / (kCdfTableSize - 1);
            acc += integrate(g, a, b, cell).value;
            d.grid[k] = b;
            d.cdf[k] = acc;
        }
        if (std::fabs(acc - 1.0) > 1e-6)
            throw std::invalid_argument("ReturnModel::generic_density: pdf mass on the stated support is " +
                                        std::to_string(acc) + ", not 1");
        for (auto& c : d.cdf) c /= acc;
        d.cdf.back() = 1.0;
    }

    static void compute_moments(detail::DensityPayload& d, const QuadratureSpec& spec) {
        QuadratureSpec s = spec;
        s.rel_tol = std::max(spec.rel_tol, 1e-9);
        auto moment = [&](int k) {
            QuadResult r;
            if (std::isinf(d.hi))
                r = integrate_upper([&](double x) { return std::pow(x, k) * d.pdf(x); }, d.lo, s);
            else
                r = integrate([&](double x) { return std::pow(x, k) * d.pdf(x); }, d.lo, d.hi, s);
            return r.converged ? r.value : std::numeric_limits<double>::quiet_NaN();
        };
        d.mean = moment(1);
        d.second = moment(2);
    }

    double draw_density(double u) const {
        const auto& d = *density_;
        const auto it = std::lower_bound(d.cdf.begin(), d.cdf.end(), u);
        std::size_t k = static_cast<std::size_t>(it - d.cdf.begin());
        if (k == 0) k = 1;
        if (k >= d.cdf.size()) k = d.cdf.size() - 1;
        const double c0 = d.cdf[k - 1], c1 = d.cdf[k];
        const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        const double th = d.grid[k - 1] + w * (d.grid[k] - d.grid[k - 1]);
        return theta_to_x(d, th);
    }

    ReturnKind kind_;
    double p_ = 0.0;
    std::shared_ptr<const detail::DensityPayload> density_;
    std::shared_ptr<const detail::SamplerPayload> sampler_;
};

} // namespace kelly
