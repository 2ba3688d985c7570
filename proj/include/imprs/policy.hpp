#pragma once

#include "imprs/dbn.hpp"
#include "imprs/history.hpp"
#include "imprs/system.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace imprs {

/// Heuristic strategy parameters w = {dT, p_th, n_I, eta, D_rep}.
struct StrategyParams {
    int dT = 10;           ///< years between scheduled campaigns
    double p_th = 1.0;     ///< annual system failure probability triggering a campaign
    int n_I = 1;           ///< components inspected per campaign
    double eta = 1.0;      ///< SEI exponent in the prioritization index
    double d_rep = 0.0;    ///< repair when the measured depth is >= d_rep (mm)

    void validate(int n_components, int max_interval) const;
    bool operator==(const StrategyParams&) const = default;
};

/// Parses "dT=7,pth=2e-2,nI=9,eta=1.3,drep=0" (any order; missing keys keep defaults).
StrategyParams parse_strategy(const std::string& text);
std::string format_strategy(const StrategyParams& w);

/// Everything needed to simulate and cost strategies; immutable and shareable.
struct Problem {
    std::shared_ptr<const DbnModel> dbn;
    std::shared_ptr<const SystemModel> system;
    std::vector<double> sei;
    int horizon = 40;  ///< last year of service
    int n_components() const { return dbn->n_components(); }
};

/// Components with the largest PI_k = SEI_k^eta * Pr(component k failed), ties to
/// the lower index; at most n_I entries.
std::vector<int> prioritize(const BeliefState& belief, const std::vector<double>& sei, double eta, int n_I);

/// (year - last_campaign >= dT) or (annual_pf > p_th).
bool decide_campaign(int year, int last_campaign, double annual_pf, const StrategyParams& w);

/// Starting point of a simulation: belief at start year plus policy clock.
struct SimulationStart {
    BeliefState belief;                ///< belief at the start year, after its evidence
    int last_campaign = 0;
    std::optional<GroundTruth> truth;  ///< sampled from the belief when absent
};

struct SimulationOptions {
    bool keep_beliefs = false;  ///< store the predicted belief of every year (for smoothing)
    bool chain_truth = false;   ///< draw the truth from the discrete model instead of the continuous one
};

struct SimulationResult {
    ObservationHistory history;
    std::vector<double> interval;  ///< Pr(F_i* | Z_{1:i-1})
    std::vector<double> cdf;
    std::vector<double> annual;
    std::vector<BeliefState> predicted;
    BeliefState final_belief;
    GroundTruth final_truth;
};

/// Simulates one life-cycle history from start.belief.year() to the horizon.
/// Random streams depend only on (seed, history index, year offset, component),
/// so different strategies see the same deterioration (common random numbers).
SimulationResult simulate_history(const Problem& problem, const StrategyParams& w, const SimulationStart& start,
                                  std::uint64_t seed, std::uint64_t history_index, const SimulationOptions& options = {});

/// Start from the prior at year 0; truth sampled from the continuous prior model.
SimulationStart prior_start(const Problem& problem);

}  // namespace imprs
