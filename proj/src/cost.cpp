#include "imprs/cost.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"
#include "imprs/numerics.hpp"
#include "imprs/parallel.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

namespace imprs {
namespace {

double sum_field(const std::vector<YearCost>& years, double YearCost::*field)
{
    std::vector<double> v;
    v.reserve(years.size());
    for (const auto& y : years) v.push_back(y.*field);
    return pairwise_sum(v);
}

double mean_of(const std::vector<double>& v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

double variance_of(const std::vector<double>& v, double mean)
{
    if (v.size() < 2) return 0.0;
    std::vector<double> sq;
    sq.reserve(v.size());
    for (double x : v) sq.push_back((x - mean) * (x - mean));
    return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

}  // namespace

void CostParams::validate() const
{
    if (c_C < 0.0 || c_I < 0.0 || c_R < 0.0 || c_F < 0.0) throw ConfigError("costs must be >= 0");
    if (r < 0.0) throw ConfigError("costs.discount_rate must be >= 0");
}

double discount(double t, double r)
{
    if (t < 0.0) throw std::invalid_argument("discount requires t >= 0");
    return std::pow(1.0 + r, -t);
}

CostBreakdown conditional_cost(const ObservationHistory& history, const std::vector<double>& annual_pf,
                               const std::vector<double>& cdf_pf, const CostParams& costs)
{
    const std::size_t n = history.years.size();
    if (annual_pf.size() != n || cdf_pf.size() != n)
        throw std::invalid_argument("conditional_cost: probability sequences must match the history length");
    CostBreakdown out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = history.years[i];
        const double survival = 1.0 - cdf_pf[i];
        YearCost u;
        u.year = rec.year;
        u.campaign = rec.campaign ? costs.c_C * survival : 0.0;
        u.inspection = costs.c_I * rec.inspections() * survival;
        u.repair = costs.c_R * rec.repairs() * survival;
        u.risk = costs.c_F * annual_pf[i];
        const double g = discount(static_cast<double>(rec.year - history.start_year), costs.r);
        YearCost d{u.year, g * u.campaign, g * u.inspection, g * u.repair, g * u.risk};
        out.undiscounted.push_back(u);
        out.discounted.push_back(d);
    }
    out.campaign = sum_field(out.discounted, &YearCost::campaign);
    out.inspection = sum_field(out.discounted, &YearCost::inspection);
    out.repair = sum_field(out.discounted, &YearCost::repair);
    out.risk = sum_field(out.discounted, &YearCost::risk);
    out.total = out.campaign + out.inspection + out.repair + out.risk;
    return out;
}

ExpectedCost expected_cost(const Problem& problem, const CostParams& costs, const StrategyParams& w,
                           const SimulationStart& start, int n_mc, std::uint64_t seed, std::uint64_t first_history)
{
    if (n_mc < 1) throw std::invalid_argument("expected_cost requires n_mc >= 1");
    std::vector<CostBreakdown> per(static_cast<std::size_t>(n_mc));
    parallel_for(per.size(), [&](std::size_t h) {
        const auto sim = simulate_history(problem, w, start, seed, first_history + h);
        per[h] = conditional_cost(sim.history, sim.annual, sim.cdf, costs);
    });

    ExpectedCost out;
    auto average = [&](const std::function<double(const CostBreakdown&)>& get) {
        std::vector<double> v;
        v.reserve(per.size());
        for (const auto& c : per) v.push_back(get(c));
        return mean_of(v);
    };
    out.mean.campaign = average([](const CostBreakdown& c) { return c.campaign; });
    out.mean.inspection = average([](const CostBreakdown& c) { return c.inspection; });
    out.mean.repair = average([](const CostBreakdown& c) { return c.repair; });
    out.mean.risk = average([](const CostBreakdown& c) { return c.risk; });
    out.mean.total = out.mean.campaign + out.mean.inspection + out.mean.repair + out.mean.risk;

    const std::size_t years = per.front().discounted.size();
    for (std::size_t i = 0; i < years; ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            auto pick = [&](const CostBreakdown& c) -> const YearCost& { return pass ? c.undiscounted[i] : c.discounted[i]; };
            YearCost y;
            y.year = pick(per.front()).year;
            y.campaign = average([&](const CostBreakdown& c) { return pick(c).campaign; });
            y.inspection = average([&](const CostBreakdown& c) { return pick(c).inspection; });
            y.repair = average([&](const CostBreakdown& c) { return pick(c).repair; });
            y.risk = average([&](const CostBreakdown& c) { return pick(c).risk; });
            (pass ? out.mean.undiscounted : out.mean.discounted).push_back(y);
        }
    }

    for (const auto& c : per) out.totals.push_back(c.total);
    out.std_error = std::sqrt(variance_of(out.totals, out.mean.total) / static_cast<double>(n_mc));
    return out;
}

EstimatorReport estimator_study(const Problem& problem, const StrategyParams& w, int n_mc, std::uint64_t seed)
{
    if (n_mc < 2) throw std::invalid_argument("estimator_study requires at least 2 histories");
    const SimulationStart start = prior_start(problem);
    std::vector<std::vector<double>> filtered(static_cast<std::size_t>(n_mc));
    std::vector<std::vector<double>> smoothed(static_cast<std::size_t>(n_mc));
    std::vector<int> first_campaign(static_cast<std::size_t>(n_mc), 0);

    SimulationOptions opts;
    opts.keep_beliefs = true;
    opts.chain_truth = true;
    parallel_for(static_cast<std::size_t>(n_mc), [&](std::size_t h) {
        auto sim = simulate_history(problem, w, start, seed, h, opts);
        filtered[h] = sim.cdf;
        const auto beliefs = smooth(sim.predicted, sim.history.years);
        std::vector<double> interval;
        for (const auto& b : beliefs) interval.push_back(problem.system->interval_failure_prob(b));
        smoothed[h] = cumulative_failure(interval).cdf;
        for (const auto& rec : sim.history.years)
            if (rec.campaign) {
                first_campaign[h] = rec.year;
                break;
            }
    });

    EstimatorReport rep;
    rep.histories = n_mc;
    for (int y : first_campaign)
        if (y > 0 && (rep.first_inspection_year == 0 || y < rep.first_inspection_year)) rep.first_inspection_year = y;

    const std::size_t years = filtered.front().size();
    for (std::size_t i = 0; i < years; ++i) {
        std::vector<double> f;
        std::vector<double> s;
        for (int h = 0; h < n_mc; ++h) {
            f.push_back(filtered[static_cast<std::size_t>(h)][i]);
            s.push_back(smoothed[static_cast<std::size_t>(h)][i]);
        }
        EstimatorYear e;
        e.year = start.belief.year() + static_cast<int>(i) + 1;
        e.filtered_mean = mean_of(f);
        e.smoothed_mean = mean_of(s);
        e.filtered_var = variance_of(f, e.filtered_mean);
        e.smoothed_var = variance_of(s, e.smoothed_mean);
        const double se = std::sqrt((e.filtered_var + e.smoothed_var) / n_mc);
        if (std::abs(e.filtered_mean - e.smoothed_mean) > 2.0 * se + 1e-12 * e.filtered_mean) rep.means_agree = false;
        if (e.filtered_var > e.smoothed_var) rep.variance_ordered = false;
        if (rep.first_inspection_year > 0 && e.year <= rep.first_inspection_year && e.filtered_var != 0.0)
            rep.zero_before_inspection = false;
        rep.years.push_back(e);
    }
    return rep;
}

void write_cost_csv(std::ostream& out, const CostBreakdown& cost)
{
    CsvWriter csv(out);
    csv.header({"year", "campaign", "inspection", "repair", "risk", "total", "campaign_undiscounted",
                "inspection_undiscounted", "repair_undiscounted", "risk_undiscounted", "total_undiscounted"});
    for (std::size_t i = 0; i < cost.discounted.size(); ++i) {
        const auto& d = cost.discounted[i];
        const auto& u = cost.undiscounted[i];
        csv.cell(d.year).cell(d.campaign).cell(d.inspection).cell(d.repair).cell(d.risk).cell(d.total());
        csv.cell(u.campaign).cell(u.inspection).cell(u.repair).cell(u.risk).cell(u.total());
        csv.end_row();
    }
}

void write_estimator_csv(std::ostream& out, const EstimatorReport& report)
{
    CsvWriter csv(out);
    csv.header({"year", "filtered_mean", "filtered_var", "smoothed_mean", "smoothed_var"});
    for (const auto& e : report.years) {
        csv.cell(e.year).cell(e.filtered_mean).cell(e.filtered_var).cell(e.smoothed_mean).cell(e.smoothed_var);
        csv.end_row();
    }
}

}  // namespace imprs
