#include "imprs/numerics.hpp"

#include "imprs/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace imprs {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double p)
{
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

LognormalParams lognormal_from_moments(double mean, double stddev)
{
    if (!(mean > 0.0) || stddev < 0.0) throw std::invalid_argument("lognormal moments must have mean > 0, std >= 0");
    const double cov = stddev / mean;
    const double s2 = std::log1p(cov * cov);
    return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

double truncated_normal_mean(double lo, double hi)
{
    const double mass = normal_cdf(hi) - normal_cdf(lo);
    const double plo = std::isfinite(lo) ? normal_pdf(lo) : 0.0;
    const double phi = std::isfinite(hi) ? normal_pdf(hi) : 0.0;
    if (mass <= 0.0) return std::isfinite(lo) ? lo : hi;
    return (plo - phi) / mass;
}

std::vector<double> equal_probability_normal_bins(int n)
{
    if (n < 1) throw std::invalid_argument("bin count must be >= 1");
    std::vector<double> reps(static_cast<std::size_t>(n));
    if (n == 1) {
        reps[0] = 0.0;
        return reps;
    }
    for (int i = 0; i < n; ++i) {
        const double lo = normal_quantile(static_cast<double>(i) / n);
        const double hi = normal_quantile(static_cast<double>(i + 1) / n);
        const double plo = std::isfinite(lo) ? normal_pdf(lo) : 0.0;
        const double phi = std::isfinite(hi) ? normal_pdf(hi) : 0.0;
        reps[static_cast<std::size_t>(i)] = n * (plo - phi);
    }
    // Symmetrize to remove rounding asymmetry.
    for (int i = 0; i < n / 2; ++i) {
        const double m = 0.5 * (reps[static_cast<std::size_t>(n - 1 - i)] - reps[static_cast<std::size_t>(i)]);
        reps[static_cast<std::size_t>(i)] = -m;
        reps[static_cast<std::size_t>(n - 1 - i)] = m;
    }
    if (n % 2 == 1) reps[static_cast<std::size_t>(n / 2)] = 0.0;
    return reps;
}

double pairwise_sum(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

const Quadrature& gauss_legendre(int n)
{
    static std::mutex mutex;
    static std::map<int, Quadrature> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Quadrature q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const double p = boost::math::legendre_p(n, x);
            const double dp = boost::math::legendre_p_prime(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = boost::math::legendre_p_prime(n, x);
        q.nodes[static_cast<std::size_t>(i)] = x;
        q.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(q)).first->second;
}

double standard_normal(Rng& rng) { return normal_quantile(uniform01(rng)); }

double truncated_standard_normal(Rng& rng, double lo, double hi)
{
    const double plo = normal_cdf(lo);
    const double phi = normal_cdf(hi);
    if (phi - plo < 1e-300) return std::isfinite(lo) ? lo : hi;
    const double u = plo + (phi - plo) * uniform01(rng);
    double x = normal_quantile(u);
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    return x;
}

}  // namespace imprs
