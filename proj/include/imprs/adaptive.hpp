#pragma once

// Strategy optimization from a given belief, and adaptation of the strategy to
// observed inspection outcomes over the remaining service life.

#include "imprs/ce.hpp"
#include "imprs/cost.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace imprs {

struct OptimizerSettings {
    CeConfig ce;
    int n_mc = 1;             ///< histories per objective evaluation
    GpOptions gp;
    MinimizeOptions minimize;
    int check_n_mc = 200;     ///< histories for the Monte Carlo check of the returned strategy
};

struct OptimizedStrategy {
    StrategyParams w;
    SurrogatePrediction prediction;
    ExpectedCost check;       ///< Monte Carlo estimate at w (empty if check_n_mc == 0)
    CeResult search;
    std::optional<StrategySurrogate> surrogate;
};

/// CE search, surrogate fit and surrogate minimization from `start` to the horizon.
/// Costs are discounted to the start year.
OptimizedStrategy optimize_strategy(const Problem& problem, const CostParams& costs, const SimulationStart& start,
                                    const OptimizerSettings& settings);
OptimizedStrategy optimize_initial(const Problem& problem, const CostParams& costs, const OptimizerSettings& settings);

/// Filtered belief at `year` given the observations, and the last campaign year.
struct FilteredStart {
    SimulationStart start;
    std::vector<std::string> warnings;  ///< observed actions the strategy would not have prescribed
};
FilteredStart filter_observations(const Problem& problem, const ObservationHistory& observations, int year,
                                  const StrategyParams& prescribed);

struct AdaptationStage {
    int year = 0;
    StrategyParams w_prev;
    StrategyParams w_next;
    SurrogatePrediction predicted_next;
    ExpectedCost cost_prev;   ///< E[C | w_prev, z], discounted to year
    ExpectedCost cost_next;   ///< E[C | w_next, z], common random numbers with cost_prev
    double gain = 0.0;
    double gain_std_error = 0.0;
    std::vector<std::string> warnings;
    CeResult search;
};

struct AdaptationRecord {
    std::uint64_t seed = 0;
    std::string scenario_hash;
    StrategyParams w0;
    double cost0 = 0.0;
    double cost0_std_error = 0.0;
    std::vector<AdaptationStage> stages;
};

struct AdaptOptions {
    OptimizerSettings optimizer;
    int eval_n_mc = 200;  ///< histories for comparing w_prev and w_next
};

/// Re-optimizes the strategy for years year+1..horizon given z_{1:year}.
AdaptationStage adapt(const Problem& problem, const CostParams& costs, const StrategyParams& w_prev,
                      const ObservationHistory& observations, int year, const AdaptOptions& options);

/// gain_l = E[C | w_{l-1}, z] - E[C | w_l, z] per stage.
std::vector<double> expected_gain(const AdaptationRecord& record);

/// Paired difference of two cost estimates over the same histories: (mean, std error).
std::pair<double, double> paired_difference(const ExpectedCost& a, const ExpectedCost& b);

}  // namespace imprs
