#pragma once

#include "imprs/history.hpp"
#include "imprs/policy.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace imprs {

struct CostParams {
    double c_C = 1.0;    ///< per campaign
    double c_I = 0.1;    ///< per inspected component
    double c_R = 0.3;    ///< per repair
    double c_F = 3000.0; ///< system failure
    double r = 0.02;     ///< annual discount rate

    void validate() const;
    bool operator==(const CostParams&) const = default;
};

/// 1 / (1 + r)^t.
double discount(double t, double r);

struct YearCost {
    int year = 0;
    double campaign = 0.0;
    double inspection = 0.0;
    double repair = 0.0;
    double risk = 0.0;
    double total() const { return campaign + inspection + repair + risk; }
};

struct CostBreakdown {
    double campaign = 0.0;
    double inspection = 0.0;
    double repair = 0.0;
    double risk = 0.0;
    double total = 0.0;
    std::vector<YearCost> discounted;
    std::vector<YearCost> undiscounted;
};

/// Expected cost of one history: action costs weighted by survival 1 - F(t_i),
/// risk c_F * sum gamma(t_i) * (F(t_i) - F(t_{i-1})). Times are measured from
/// history.start_year, so costs are discounted to that year.
CostBreakdown conditional_cost(const ObservationHistory& history, const std::vector<double>& annual_pf,
                               const std::vector<double>& cdf_pf, const CostParams& costs);

struct ExpectedCost {
    CostBreakdown mean;
    double std_error = 0.0;          ///< of the total
    std::vector<double> totals;      ///< per history
};

/// Averages conditional_cost over n_mc simulated histories (indices 0..n_mc-1).
ExpectedCost expected_cost(const Problem& problem, const CostParams& costs, const StrategyParams& w,
                           const SimulationStart& start, int n_mc, std::uint64_t seed, std::uint64_t first_history = 0);

/// Per-year comparison of the filtered and smoothed cumulative failure probability.
struct EstimatorYear {
    int year = 0;
    double filtered_mean = 0.0;
    double filtered_var = 0.0;
    double smoothed_mean = 0.0;
    double smoothed_var = 0.0;
};

struct EstimatorReport {
    std::vector<EstimatorYear> years;
    int histories = 0;
    int first_inspection_year = 0;  ///< earliest campaign year over all histories (0 if none)
    bool means_agree = true;        ///< within 2 combined standard errors every year
    bool variance_ordered = true;   ///< filtered variance <= smoothed variance every year
    bool zero_before_inspection = true;
};

EstimatorReport estimator_study(const Problem& problem, const StrategyParams& w, int n_mc, std::uint64_t seed);

void write_cost_csv(std::ostream& out, const CostBreakdown& cost);
void write_estimator_csv(std::ostream& out, const EstimatorReport& report);

}  // namespace imprs
