#pragma once

// Cross-entropy search over strategy parameters and the log-cost surrogate used
// to pick the final strategy.

#include "imprs/gp.hpp"
#include "imprs/policy.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace imprs {

/// Feasible region of the heuristic parameters.
struct StrategySpace {
    int dT_min = 1;
    int dT_max = 40;
    int nI_min = 1;
    int nI_max = 22;
    double p_th_min = 1e-5;
    double p_th_max = 1.0;
    double eta_min = 0.05;
    double eta_max = 5.0;
    double d_rep = 0.0;  ///< held fixed during the search

    void validate() const;
    bool operator==(const StrategySpace&) const = default;
};

/// Independent marginals: truncated-and-rounded normals for dT and n_I,
/// lognormals for p_th (capped at p_th_max) and eta.
struct SamplingDistribution {
    double dT_mean = 10.0, dT_std = 8.0;
    double nI_mean = 11.0, nI_std = 6.0;
    double ln_pth_mean = -4.6, ln_pth_std = 2.0;
    double ln_eta_mean = 0.0, ln_eta_std = 0.7;

    StrategyParams sample(Rng& rng, const StrategySpace& space) const;
    /// Maximum-likelihood fit (sample mean / std in the transformed coordinates).
    static SamplingDistribution fit(const std::vector<StrategyParams>& samples, double sigma_floor);
    /// Negative log-likelihood of samples in the transformed coordinates (untruncated normals).
    double nll(const std::vector<StrategyParams>& samples) const;
    bool operator==(const SamplingDistribution&) const = default;
};

struct CeConfig {
    int n_ce = 40;
    int n_elite = 10;
    int n_max = 1600;
    double smoothing = 0.7;   ///< weight of the new elite fit
    double sigma_floor = 1e-3;
    std::uint64_t seed = 1;
    SamplingDistribution initial;
    StrategySpace space;

    void validate() const;
};

struct Evaluation {
    int iteration = 0;
    StrategyParams w;
    double cost = 0.0;
};

struct CeResult {
    std::vector<Evaluation> samples;
    std::vector<SamplingDistribution> trace;  ///< initial distribution, then one per refit
};

/// objective(w, evaluation_index) must be deterministic given its arguments.
using StrategyObjective = std::function<double(const StrategyParams&, std::uint64_t)>;

CeResult ce_optimize(const StrategyObjective& objective, const CeConfig& config);

/// Surrogate coordinates of a strategy: (dT, ln p_th, n_I, ln eta).
Eigen::VectorXd strategy_features(const StrategyParams& w);

struct SurrogatePrediction {
    double cost = 0.0;        ///< exp of the latent mean
    double std_error = 0.0;   ///< cost * latent std (delta method)
    double log_mean = 0.0;
    double log_std = 0.0;
};

/// GP on log total cost over strategy features.
class StrategySurrogate {
public:
    StrategySurrogate(const std::vector<Evaluation>& samples, const GpOptions& options = {});
    SurrogatePrediction predict(const StrategyParams& w) const;
    const GaussianProcess& gp() const { return gp_; }

private:
    GaussianProcess gp_;
};

StrategySurrogate fit_surrogate(const std::vector<Evaluation>& samples, const GpOptions& options = {});

struct SurrogateMinimum {
    StrategyParams w;
    SurrogatePrediction prediction;
};

struct MinimizeOptions {
    int random_points = 2000;
    int refine_starts = 8;
    std::uint64_t seed = 1;
};

/// Dense random multistart plus projected-gradient refinement of the surrogate mean
/// over the box, then dT and n_I rounded to the nearest integers.
SurrogateMinimum minimize_surrogate(const StrategySurrogate& model, const StrategySpace& box,
                                    const MinimizeOptions& options = {});

/// Box spanned by the evaluated samples, intersected with the space.
StrategySpace sampled_box(const std::vector<Evaluation>& samples, const StrategySpace& space);

/// Sampled box narrowed to the final sampling distribution (mean +- n_std sd in the
/// sampling coordinates), where the surrogate is backed by data.
StrategySpace search_box(const CeResult& result, const StrategySpace& space, double n_std = 2.0);

void write_trace_csv(std::ostream& out, const CeResult& result);

}  // namespace imprs
