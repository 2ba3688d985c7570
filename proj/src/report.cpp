#include "imprs/report.hpp"

namespace imprs {

ordered_json to_json(const StrategyParams& w)
{
    return {{"dT", w.dT}, {"p_th", w.p_th}, {"n_I", w.n_I}, {"eta", w.eta}, {"d_rep", w.d_rep}, {"text", format_strategy(w)}};
}

ordered_json to_json(const CostBreakdown& c)
{
    return {{"campaign", c.campaign},
            {"inspection", c.inspection},
            {"repair", c.repair},
            {"risk", c.risk},
            {"total", c.total}};
}

ordered_json to_json(const ExpectedCost& c)
{
    ordered_json j = to_json(c.mean);
    j["std_error"] = c.std_error;
    j["histories"] = c.totals.size();
    return j;
}

ordered_json to_json(const SurrogatePrediction& p)
{
    return {{"cost", p.cost}, {"std_error", p.std_error}, {"log_mean", p.log_mean}, {"log_std", p.log_std}};
}

ordered_json to_json(const SamplingDistribution& d)
{
    return {{"dT_mean", d.dT_mean},         {"dT_std", d.dT_std},           {"nI_mean", d.nI_mean},
            {"nI_std", d.nI_std},           {"ln_pth_mean", d.ln_pth_mean}, {"ln_pth_std", d.ln_pth_std},
            {"ln_eta_mean", d.ln_eta_mean}, {"ln_eta_std", d.ln_eta_std}};
}

ordered_json to_json(const AdaptationStage& s)
{
    return {{"year", s.year},
            {"w_prev", to_json(s.w_prev)},
            {"w_next", to_json(s.w_next)},
            {"surrogate_next", to_json(s.predicted_next)},
            {"cost_prev", to_json(s.cost_prev)},
            {"cost_next", to_json(s.cost_next)},
            {"gain", s.gain},
            {"gain_std_error", s.gain_std_error},
            {"evaluations", s.search.samples.size()},
            {"warnings", s.warnings}};
}

ordered_json to_json(const AdaptationRecord& r)
{
    ordered_json stages = ordered_json::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    return {{"scenario_hash", r.scenario_hash},
            {"seed", r.seed},
            {"w0", to_json(r.w0)},
            {"cost0", r.cost0},
            {"cost0_std_error", r.cost0_std_error},
            {"stages", stages},
            {"gains", expected_gain(r)}};
}

ordered_json to_json(const EstimatorReport& r)
{
    return {{"histories", r.histories},
            {"first_inspection_year", r.first_inspection_year},
            {"means_agree", r.means_agree},
            {"variance_ordered", r.variance_ordered},
            {"zero_before_inspection", r.zero_before_inspection}};
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace imprs
