#pragma once

#include <span>
#include <vector>

namespace imprs {

double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// Parameters of ln X for a lognormal X given its mean and standard deviation.
struct LognormalParams {
    double mu;
    double sigma;
};
LognormalParams lognormal_from_moments(double mean, double stddev);

/// Mean of a standard normal restricted to [lo, hi].
double truncated_normal_mean(double lo, double hi);

/// Representatives of n equal-probability bins of the standard normal (bin means).
std::vector<double> equal_probability_normal_bins(int n);

/// Pairwise summation; bounded rounding drift for long reductions.
double pairwise_sum(std::span<const double> values);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const Quadrature& gauss_legendre(int n);

}  // namespace imprs
