#include "imprs/fatigue.hpp"

#include "imprs/errors.hpp"
#include "imprs/numerics.hpp"
#include "imprs/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace imprs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn10 = std::numbers::ln10;

void require(bool ok, const char* what)
{
    if (!ok) throw ConfigError(what);
}

// Regularized incomplete-gamma mass of Gamma(s) between x_lo and x_hi.
double gamma_mass(double s, double x_lo, double x_hi)
{
    if (x_hi <= x_lo) return 0.0;
    const double p_hi = std::isfinite(x_hi) ? boost::math::gamma_p(s, x_hi) : 1.0;
    if (p_hi < 0.5) return p_hi - (x_lo > 0.0 ? boost::math::gamma_p(s, x_lo) : 0.0);
    const double q_lo = x_lo > 0.0 ? boost::math::gamma_q(s, x_lo) : 1.0;
    const double q_hi = std::isfinite(x_hi) ? boost::math::gamma_q(s, x_hi) : 0.0;
    return q_lo - q_hi;
}

}  // namespace

void FatigueParams::validate() const
{
    require(std_lnK > 0.0, "fatigue.std_lnK must be > 0");
    require(std_M > 0.0, "fatigue.std_M must be > 0");
    require(critical_depth > 0.0, "fatigue.critical_depth must be > 0");
    require(cycles_per_year > 0.0, "fatigue.cycles_per_year must be > 0");
    require(mean_D0 > 0.0, "fatigue.mean_D0 must be > 0");
    require(weibull_shape > 0.0, "fatigue.weibull_shape must be > 0");
}

void CorrelationParams::validate() const
{
    for (double r : {rho_D0, rho_M, rho_K}) require(r >= 0.0 && r <= 1.0, "correlation coefficients must lie in [0, 1]");
}

void SNModel::validate() const
{
    require(!segments.empty(), "sn_curve needs at least one segment");
    require(segments.front().s_min == 0.0, "sn_curve segments must start at S = 0");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        require(s.slope > 0.0, "sn_curve slopes must be > 0");
        require(s.s_max > s.s_min, "sn_curve segment bounds must be increasing");
        if (i + 1 < segments.size())
            require(segments[i + 1].s_min == s.s_max, "sn_curve segments must be contiguous without overlap");
        else
            require(std::isinf(s.s_max), "last sn_curve segment must extend to infinity");
    }
    require(weibull_shape > 0.0, "sn_curve.weibull_shape must be > 0");
    require(delta_mean > 0.0 && delta_std >= 0.0, "sn_curve delta moments invalid");
    require(log10_a_std >= 0.0 && characteristic_offset >= 0.0 && stress_cov >= 0.0,
            "sn_curve scatter parameters must be >= 0");
}

SNModel single_slope_sn(double slope, double log10_a)
{
    SNModel sn;
    sn.segments.push_back({slope, log10_a, 0.0, kInf});
    return sn;
}

double equivalent_stress_range(double K, double M, double lambda)
{
    if (!(K > 0.0) || !(M > 0.0) || !(lambda > 0.0))
        throw std::domain_error("equivalent_stress_range requires K, M, lambda > 0");
    const double arg = 1.0 + M / lambda;
    return K * std::exp(std::lgamma(arg) / M);
}

double log_growth_rate(double lnK, double M, const FatigueParams& fp)
{
    const double ln_dse = lnK + std::lgamma(1.0 + M / fp.weibull_shape) / M;
    return fp.lnC(M) + M * ln_dse + 0.5 * M * std::log(std::numbers::pi) + std::log(fp.cycles_per_year);
}

ParisMap::ParisMap(double lnK, double M, const FatigueParams& fp, double t) : exponent_(1.0 - 0.5 * M)
{
    const double q = std::exp(log_growth_rate(lnK, M, fp));
    growth_ = std::abs(exponent_) < 1e-12 ? q * t : exponent_ * q * t;
}

double ParisMap::forward(double d0) const
{
    if (growth_ == 0.0) return d0;
    if (std::abs(exponent_) < 1e-12) return d0 * std::exp(growth_);
    const double bracket = std::pow(d0, exponent_) + growth_;
    if (exponent_ < 0.0 && bracket <= 0.0) return kInf;
    return std::pow(bracket, 1.0 / exponent_);
}

double ParisMap::inverse(double d) const
{
    if (d <= 0.0) return 0.0;
    if (growth_ == 0.0) return d;
    if (std::isinf(d)) return exponent_ < 0.0 ? std::pow(-growth_, 1.0 / exponent_) : kInf;
    if (std::abs(exponent_) < 1e-12) return d * std::exp(-growth_);
    const double bracket = std::pow(d, exponent_) - growth_;
    if (bracket <= 0.0) return 0.0;
    return std::pow(bracket, 1.0 / exponent_);
}

std::optional<double> crack_depth(double t, double D0, double K, double M, const FatigueParams& fp)
{
    if (t < 0.0 || !(D0 > 0.0)) throw std::invalid_argument("crack_depth requires t >= 0 and D0 > 0");
    if (D0 >= fp.critical_depth) return std::nullopt;
    if (t == 0.0) return D0;
    const double d = ParisMap(std::log(K), M, fp, t).forward(D0);
    if (!(d < fp.critical_depth)) return std::nullopt;
    return d;
}

double expected_inverse_cycles(double kS, const SNModel& sn, double log10_shift)
{
    if (!(kS > 0.0)) throw std::invalid_argument("Weibull scale kS must be > 0");
    const double lambda = sn.weibull_shape;
    double total = 0.0;
    for (const auto& seg : sn.segments) {
        const double s = 1.0 + seg.slope / lambda;
        const double x_lo = seg.s_min > 0.0 ? std::pow(seg.s_min / kS, lambda) : 0.0;
        const double x_hi = std::isfinite(seg.s_max) ? std::pow(seg.s_max / kS, lambda) : kInf;
        const double mass = gamma_mass(s, x_lo, x_hi);
        if (mass <= 0.0) continue;
        const double log_term = -(seg.log10_a + log10_shift) * kLn10 + seg.slope * std::log(kS) + std::lgamma(s) +
                                std::log(mass);
        total += std::exp(log_term);
    }
    return total;
}

double sn_failure_probability(double kS, const SNModel& sn, double T, double nu)
{
    if (!(kS > 0.0)) throw std::invalid_argument("sn_failure_probability requires kS > 0");
    if (T <= 0.0) return 0.0;
    const double cycles = nu * T;

    const auto delta = lognormal_from_moments(sn.delta_mean, sn.delta_std);
    const double sigma_a = sn.log10_a_std;
    const double sigma_b = sn.stress_cov > 0.0 ? std::sqrt(std::log1p(sn.stress_cov * sn.stress_cov)) : 0.0;

    // Map the active random variables onto standard-normal coordinates.
    int dim = 0;
    const int i_delta = delta.sigma > 0.0 ? dim++ : -1;
    const int i_a = sigma_a > 0.0 ? dim++ : -1;
    const int i_b = sigma_b > 0.0 ? dim++ : -1;

    auto log_margin = [&](const std::vector<double>& u) {
        const double ln_delta = delta.mu + (i_delta >= 0 ? delta.sigma * u[static_cast<std::size_t>(i_delta)] : 0.0);
        const double shift = i_a >= 0 ? sigma_a * u[static_cast<std::size_t>(i_a)] : 0.0;
        const double ln_b = i_b >= 0 ? -0.5 * sigma_b * sigma_b + sigma_b * u[static_cast<std::size_t>(i_b)] : 0.0;
        const double damage = cycles * expected_inverse_cycles(kS * std::exp(ln_b), sn, shift);
        return ln_delta - std::log(damage);
    };

    if (dim == 0) return log_margin({}) < 0.0 ? 1.0 : 0.0;

    const FormResult form = form_reliability(log_margin, dim);
    if (!form.converged) {
        std::ostringstream msg;
        msg << "FORM did not converge for the S-N limit state (kS=" << kS << ", T=" << T << ")";
        throw NumericalError(msg.str());
    }
    return form.pf;
}

double map_fdf_to_kS(double fdf, const SNModel& sn, double T, double nu)
{
    if (!(fdf > 0.0)) throw std::invalid_argument("FDF must be > 0");
    const double shift = -sn.characteristic_offset * sn.log10_a_std;
    auto residual = [&](double ln_k) { return nu * fdf * T * expected_inverse_cycles(std::exp(ln_k), sn, shift) - 1.0; };

    double lo = std::log(1e-6);
    double hi = std::log(1e6);
    if (!(residual(lo) < 0.0) || !(residual(hi) > 0.0)) {
        std::ostringstream msg;
        msg << "cannot bracket kS for FDF=" << fdf;
        throw NumericalError(msg.str());
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double r = residual(mid);
        if (std::abs(r) < 1e-10) break;
        (r > 0.0 ? hi : lo) = mid;
        if (hi - lo < 1e-15) break;
    }
    return std::exp(mid);
}

FractureMechanicsSample::FractureMechanicsSample(const FatigueParams& fp, double T, const CalibrationOptions& options)
{
    fp.validate();
    if (!(T > 0.0)) throw std::invalid_argument("calibration horizon must be > 0");
    const std::size_t n = options.samples;
    if (n == 0) throw std::invalid_argument("calibration needs at least one sample");

    // Latin-hypercube strata per dimension, randomly paired.
    Rng rng = substream(options.seed, "fm-calibration");
    auto permutation = [&]() {
        std::vector<std::uint32_t> p(n);
        std::iota(p.begin(), p.end(), 0u);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(p[i], p[rng() % (i + 1)]);
        return p;
    };
    const auto perm_m = permutation();
    const auto perm_d = permutation();

    const double sigma = fp.std_lnK;
    const double ln_pi = std::log(std::numbers::pi);
    const double ln_nu = std::log(fp.cycles_per_year);
    const double dcr = fp.critical_depth;

    thresholds_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u_k = normal_quantile((static_cast<double>(i) + uniform01(rng)) / static_cast<double>(n));
        const double u_m = normal_quantile((static_cast<double>(perm_m[i]) + uniform01(rng)) / static_cast<double>(n));
        const double p_d = (static_cast<double>(perm_d[i]) + uniform01(rng)) / static_cast<double>(n);
        const double d0 = -fp.mean_D0 * std::log1p(-p_d);
        const double M = fp.mean_M + fp.std_M * u_m;

        double threshold;
        if (d0 >= dcr) {
            threshold = -kInf;
        } else if (!(M > 0.0)) {
            threshold = kInf;
        } else {
            const double a = 1.0 - 0.5 * M;
            const double q_crit =
                std::abs(a) < 1e-12 ? std::log(dcr / d0) / T : (std::pow(d0, a) - std::pow(dcr, a)) / (-a * T);
            const double ln_k_crit =
                (std::log(q_crit) - fp.lnC(M) - 0.5 * M * ln_pi - ln_nu - std::lgamma(1.0 + M / fp.weibull_shape)) / M;
            threshold = ln_k_crit - sigma * u_k + 0.5 * sigma * sigma;
        }
        thresholds_[i] = threshold;
        if ((i & 0xFFFFF) == 0) check_interrupt();
    }
    std::sort(thresholds_.begin(), thresholds_.end());
}

double FractureMechanicsSample::failure_probability(double mean_K) const
{
    const double x = std::log(mean_K);
    const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), x);
    return static_cast<double>(it - thresholds_.begin()) / static_cast<double>(thresholds_.size());
}

CalibrationResult calibrate_mean_K(double fdf, const FractureMechanicsSample& sample, const SNModel& sn, double T,
                                   double nu, const CalibrationOptions& options)
{
    CalibrationResult out;
    out.fdf = fdf;
    out.kS = map_fdf_to_kS(fdf, sn, T, nu);
    out.p_sn = sn_failure_probability(out.kS, sn, T, nu);

    double lo = std::log(options.mean_K_lo);
    double hi = std::log(options.mean_K_hi);
    const double p_lo = sample.failure_probability(std::exp(lo));
    const double p_hi = sample.failure_probability(std::exp(hi));
    if (!(p_lo <= out.p_sn && out.p_sn <= p_hi)) {
        std::ostringstream msg;
        msg << "target probability " << out.p_sn << " for FDF=" << fdf << " lies outside [" << p_lo << ", " << p_hi
            << "] reachable for mean K in [" << options.mean_K_lo << ", " << options.mean_K_hi << "]";
        throw NumericalError(msg.str());
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (sample.failure_probability(std::exp(mid)) < out.p_sn ? lo : hi) = mid;
    }
    out.mean_K = std::exp(0.5 * (lo + hi));
    out.p_fm = sample.failure_probability(out.mean_K);
    return out;
}

CalibrationResult calibrate_mean_K(double fdf, const FatigueParams& fp, const SNModel& sn, double T,
                                   const CalibrationOptions& options)
{
    const FractureMechanicsSample sample(fp, T, options);
    return calibrate_mean_K(fdf, sample, sn, T, fp.cycles_per_year, options);
}

}  // namespace imprs
