#include "imprs/adaptive.hpp"

#include "imprs/errors.hpp"
#include "imprs/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace imprs {
namespace {

constexpr double kCostFloor = 1e-10;

}  // namespace

OptimizedStrategy optimize_strategy(const Problem& problem, const CostParams& costs, const SimulationStart& start,
                                    const OptimizerSettings& settings)
{
    if (settings.n_mc < 1) throw ConfigError("optimizer: n_mc must be >= 1");
    const std::uint64_t seed = settings.ce.seed;
    const int n_mc = settings.n_mc;
    StrategyObjective objective = [&](const StrategyParams& w, std::uint64_t index) {
        return expected_cost(problem, costs, w, start, n_mc, seed, index * static_cast<std::uint64_t>(n_mc)).mean.total;
    };

    OptimizedStrategy out;
    out.search = ce_optimize(objective, settings.ce);
    std::vector<Evaluation> train = out.search.samples;
    for (auto& e : train) e.cost = std::max(e.cost, kCostFloor);
    GpOptions gp = settings.gp;
    gp.seed = seed;
    out.surrogate.emplace(train, gp);
    MinimizeOptions mo = settings.minimize;
    mo.seed = seed;
    const SurrogateMinimum best = minimize_surrogate(*out.surrogate, search_box(out.search, settings.ce.space), mo);
    out.w = best.w;
    out.prediction = best.prediction;
    if (settings.check_n_mc > 0)
        out.check = expected_cost(problem, costs, out.w, start, settings.check_n_mc, substream(seed, "check")());
    return out;
}

OptimizedStrategy optimize_initial(const Problem& problem, const CostParams& costs, const OptimizerSettings& settings)
{
    return optimize_strategy(problem, costs, prior_start(problem), settings);
}

FilteredStart filter_observations(const Problem& problem, const ObservationHistory& observations, int year,
                                  const StrategyParams& prescribed)
{
    observations.validate();
    if (observations.start_year != 0) throw ConfigError("observations must start at year 0");
    if (observations.n_components != problem.n_components())
        throw ConfigError("observations: component count does not match the scenario");
    if (year < 0 || year >= problem.horizon) throw ConfigError("adaptation year must lie in [0, horizon)");
    if (observations.last_year() < year) throw ConfigError("observations end before the adaptation year");

    FilteredStart out;
    BeliefState belief = problem.dbn->prior(0);
    int last_campaign = 0;
    double survive = 1.0;
    double prev_cdf = 0.0;
    for (int y = 1; y <= year; ++y) {
        belief.predict();
        const double p = problem.system->interval_failure_prob(belief);
        survive *= 1.0 - p;
        const double annual = (1.0 - survive) - prev_cdf;
        prev_cdf = 1.0 - survive;

        const YearRecord& rec = observations.at(y);
        const bool due = decide_campaign(y, last_campaign, annual, prescribed);
        if (rec.campaign) {
            if (!due) out.warnings.push_back("year " + std::to_string(y) + ": campaign not prescribed by the strategy");
            std::vector<int> chosen = prioritize(belief, problem.sei, prescribed.eta, prescribed.n_I);
            for (int k = 0; k < problem.n_components(); ++k) {
                if (rec.outcomes[static_cast<std::size_t>(k)].kind == Outcome::Kind::NotInspected) continue;
                if (std::find(chosen.begin(), chosen.end(), k) == chosen.end())
                    out.warnings.push_back("year " + std::to_string(y) + ": component " + std::to_string(k + 1) +
                                           " inspected but not prescribed");
            }
            last_campaign = y;
        } else if (due) {
            out.warnings.push_back("year " + std::to_string(y) + ": prescribed campaign not recorded");
        }
        belief.update(rec.outcomes);
        belief.apply_repairs(rec.repaired);
    }
    out.start = SimulationStart{std::move(belief), last_campaign, std::nullopt};
    return out;
}

std::pair<double, double> paired_difference(const ExpectedCost& a, const ExpectedCost& b)
{
    if (a.totals.size() != b.totals.size() || a.totals.empty())
        throw std::invalid_argument("paired_difference: estimates must share their histories");
    const std::size_t n = a.totals.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a.totals[i] - b.totals[i];
    const double mean = pairwise_sum(d) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    for (double& x : d) x = (x - mean) * (x - mean);
    return {mean, std::sqrt(pairwise_sum(d) / static_cast<double>(n - 1) / static_cast<double>(n))};
}

AdaptationStage adapt(const Problem& problem, const CostParams& costs, const StrategyParams& w_prev,
                      const ObservationHistory& observations, int year, const AdaptOptions& options)
{
    if (options.eval_n_mc < 1) throw ConfigError("adapt: eval_n_mc must be >= 1");
    FilteredStart filtered = filter_observations(problem, observations, year, w_prev);

    AdaptationStage stage;
    stage.year = year;
    stage.w_prev = w_prev;
    stage.warnings = std::move(filtered.warnings);

    OptimizerSettings settings = options.optimizer;
    settings.check_n_mc = 0;
    OptimizedStrategy opt = optimize_strategy(problem, costs, filtered.start, settings);
    stage.w_next = opt.w;
    stage.predicted_next = opt.prediction;
    stage.search = std::move(opt.search);

    const std::uint64_t eval_seed = substream(settings.ce.seed, "adapt-eval", {static_cast<std::uint64_t>(year)})();
    stage.cost_prev = expected_cost(problem, costs, w_prev, filtered.start, options.eval_n_mc, eval_seed);
    stage.cost_next = expected_cost(problem, costs, stage.w_next, filtered.start, options.eval_n_mc, eval_seed);
    std::tie(stage.gain, stage.gain_std_error) = paired_difference(stage.cost_prev, stage.cost_next);
    return stage;
}

std::vector<double> expected_gain(const AdaptationRecord& record)
{
    std::vector<double> g;
    for (const auto& s : record.stages) g.push_back(s.cost_prev.mean.total - s.cost_next.mean.total);
    return g;
}

}  // namespace imprs
