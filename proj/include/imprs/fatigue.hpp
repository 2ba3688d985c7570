#pragma once

/// @file fatigue.hpp
/// Paris-law crack growth under Weibull stress ranges, and the chain that maps a
/// fatigue design factor (FDF) to the mean of the stress scale parameter K:
///
///   FDF --(characteristic S-N curve, Miner sum = 1)--> Weibull scale kS
///   kS  --(FORM on the S-N limit state at the service life)--> P_SN
///   P_SN --(Monte Carlo on the fracture-mechanics limit state)--> mean of K

#include "imprs/form.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace imprs {

struct FatigueParams {
    double mean_lnK = 0.0;  ///< per-component; set from the calibrated mean of K
    double std_lnK = 0.22;
    double mean_M = 3.5;
    double std_M = 0.3;
    double lnC_slope = -1.5667;
    double lnC_intercept = -27.5166;
    double weibull_shape = 0.8;     ///< lambda
    double mean_D0 = 1.0;           ///< mm, exponential
    double critical_depth = 50.0;   ///< mm
    double cycles_per_year = 1e5;

    void validate() const;
    double lnC(double M) const { return lnC_slope * M + lnC_intercept; }
    bool operator==(const FatigueParams&) const = default;
};

struct CorrelationParams {
    double rho_D0 = 0.5;
    double rho_M = 0.6;
    double rho_K = 0.8;

    void validate() const;
    bool operator==(const CorrelationParams&) const = default;
};

/// One power-law piece N_F(S) = a * S^-m, valid for S in [s_min, s_max).
struct SNSegment {
    double slope = 3.0;
    double log10_a = 12.0;
    double s_min = 0.0;
    double s_max = 0.0;  ///< +inf for the last segment
    bool operator==(const SNSegment&) const = default;
};

/// Mean S-N curve plus its scatter. The characteristic curve sits
/// `characteristic_offset` standard deviations of log10 N below the mean curve.
struct SNModel {
    std::vector<SNSegment> segments;
    double weibull_shape = 0.8;  ///< lambda_S
    double delta_mean = 1.0;     ///< Miner damage at failure, lognormal
    double delta_std = 0.3;
    double log10_a_std = 0.0;           ///< scatter of log10 N about the mean curve
    double characteristic_offset = 0.0; ///< in units of log10_a_std
    double stress_cov = 0.0;            ///< lognormal stress-model uncertainty on S

    void validate() const;
    bool operator==(const SNModel&) const = default;
};

/// Single-slope curve N = 10^log10_a * S^-m over (0, inf).
SNModel single_slope_sn(double slope, double log10_a);

/// Delta S_e = K * Gamma(1 + M/lambda)^(1/M).
double equivalent_stress_range(double K, double M, double lambda);

/// ln of the Paris growth coefficient per year: C * dSe^M * pi^(M/2) * nu.
double log_growth_rate(double lnK, double M, const FatigueParams& fp);

/// Closed-form crack depth after t years of growth, or nullopt once the crack
/// reaches the critical depth (or the solution blows up in finite time).
std::optional<double> crack_depth(double t, double D0, double K, double M, const FatigueParams& fp);

/// Deterministic one-parameter Paris map D0 -> D(t) for fixed (K, M); also
/// provides the inverse, which the DBN transition construction relies on.
class ParisMap {
public:
    ParisMap(double lnK, double M, const FatigueParams& fp, double t);
    /// Depth after the step; +inf when it blows up.
    double forward(double d0) const;
    /// Initial depth that grows to exactly d; always finite for d > 0.
    double inverse(double d) const;

private:
    double exponent_;  // 1 - M/2
    double growth_;    // exponent * Q * t (or Q * t when exponent == 0)
};

/// E_S[1/N_F(S)] for S ~ Weibull(scale kS, shape lambda_S), with every segment's
/// log10 a shifted by `log10_shift`.
double expected_inverse_cycles(double kS, const SNModel& sn, double log10_shift = 0.0);

/// P[Delta - nu*T*E_S[1/N_F] < 0] at the mean S-N curve with its scatter.
/// Throws NumericalError if FORM does not converge.
double sn_failure_probability(double kS, const SNModel& sn, double T, double nu);

/// Weibull scale kS solving nu*FDF*T*E_S[1/N_F(S; kS)] = 1 on the characteristic curve.
double map_fdf_to_kS(double fdf, const SNModel& sn, double T, double nu);

struct CalibrationOptions {
    std::uint64_t seed = 20210401;
    std::size_t samples = 10'000'000;
    double mean_K_lo = 0.5;
    double mean_K_hi = 200.0;
};

/// Precomputed Monte Carlo sample of the fracture-mechanics limit state at time T,
/// reused across all candidate means of K (common random numbers, Latin-hypercube
/// stratified). P_FM is exactly monotone in the mean of K.
class FractureMechanicsSample {
public:
    FractureMechanicsSample(const FatigueParams& fp, double T, const CalibrationOptions& options);
    /// P[d_cr - D_T < 0] when K is lognormal with the given mean (not median).
    double failure_probability(double mean_K) const;
    std::size_t size() const { return thresholds_.size(); }

private:
    // Failure iff ln(mean_K) >= threshold; sorted ascending.
    std::vector<double> thresholds_;
};

struct CalibrationResult {
    double fdf = 0.0;
    double kS = 0.0;
    double p_sn = 0.0;
    double mean_K = 0.0;
    double p_fm = 0.0;
};

/// Mean of K such that the fracture-mechanics failure probability at T equals the
/// S-N failure probability implied by the FDF. Bisection on mean_K.
CalibrationResult calibrate_mean_K(double fdf, const FatigueParams& fp, const SNModel& sn, double T,
                                   const CalibrationOptions& options = {});
CalibrationResult calibrate_mean_K(double fdf, const FractureMechanicsSample& sample, const SNModel& sn, double T,
                                   double nu, const CalibrationOptions& options = {});

/// Mean of ln K for a lognormal K with the given mean.
inline double mean_lnK_from_mean_K(double mean_K, double std_lnK)
{
    return std::log(mean_K) - 0.5 * std_lnK * std_lnK;
}

}  // namespace imprs
