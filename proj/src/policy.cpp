#include "imprs/policy.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace imprs {

void StrategyParams::validate(int n_components, int max_interval) const
{
    std::ostringstream msg;
    if (dT < 1 || dT > max_interval) msg << "dT must lie in 1.." << max_interval;
    else if (!(p_th >= 0.0 && p_th <= 1.0)) msg << "p_th must lie in [0, 1]";
    else if (n_I < 1 || n_I > n_components) msg << "n_I must lie in 1.." << n_components;
    else if (!(eta >= 0.0) || !std::isfinite(eta)) msg << "eta must be finite and >= 0";
    else if (!(d_rep >= 0.0)) msg << "d_rep must be >= 0";
    else return;
    throw ConfigError("strategy: " + msg.str());
}

StrategyParams parse_strategy(const std::string& text)
{
    StrategyParams w;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("strategy: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        const std::string what = "strategy " + key;
        if (key == "dT") w.dT = parse_int(value, what);
        else if (key == "pth") w.p_th = parse_double(value, what);
        else if (key == "nI") w.n_I = parse_int(value, what);
        else if (key == "eta") w.eta = parse_double(value, what);
        else if (key == "drep") w.d_rep = parse_double(value, what);
        else throw ConfigError("strategy: unknown key '" + key + "'");
    }
    return w;
}

std::string format_strategy(const StrategyParams& w)
{
    return "dT=" + std::to_string(w.dT) + ",pth=" + format_double(w.p_th) + ",nI=" + std::to_string(w.n_I) +
           ",eta=" + format_double(w.eta) + ",drep=" + format_double(w.d_rep);
}

std::vector<int> prioritize(const BeliefState& belief, const std::vector<double>& sei, double eta, int n_I)
{
    const int N = belief.n_components();
    if (static_cast<int>(sei.size()) != N) throw std::invalid_argument("prioritize: SEI size mismatch");
    std::vector<double> pi(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k)
        pi[static_cast<std::size_t>(k)] =
            std::pow(sei[static_cast<std::size_t>(k)], eta) * belief.component_failure_prob(k);
    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return pi[static_cast<std::size_t>(a)] > pi[static_cast<std::size_t>(b)]; });
    order.resize(static_cast<std::size_t>(std::clamp(n_I, 0, N)));
    return order;
}

bool decide_campaign(int year, int last_campaign, double annual_pf, const StrategyParams& w)
{
    return year - last_campaign >= w.dT || annual_pf > w.p_th;
}

SimulationStart prior_start(const Problem& problem)
{
    return {problem.dbn->prior(0), 0, std::nullopt};
}

SimulationResult simulate_history(const Problem& problem, const StrategyParams& w, const SimulationStart& start,
                                  std::uint64_t seed, std::uint64_t history_index, const SimulationOptions& options)
{
    const DbnModel& dbn = *problem.dbn;
    const int N = dbn.n_components();
    const int start_year = start.belief.year();

    SimulationResult out;
    out.history.n_components = N;
    out.history.start_year = start_year;

    Rng truth_rng = substream(seed, "truth", {history_index});
    GroundTruth truth;
    ChainState chain;
    if (options.chain_truth)
        chain = sample_chain_state(start.belief, truth_rng);
    else if (start.truth)
        truth = *start.truth;
    else
        truth = start_year == 0 ? dbn.sample_prior_truth(truth_rng) : posterior_sample(start.belief, truth_rng);

    BeliefState belief = start.belief;
    int last_campaign = start.last_campaign;
    double survive = 1.0;
    double prev_cdf = 0.0;

    for (int year = start_year + 1; year <= problem.horizon; ++year) {
        check_interrupt();
        if (options.chain_truth)
            dbn.advance_chain(chain, truth_rng);
        else
            dbn.grow_truth(truth);
        belief.predict();
        if (options.keep_beliefs) out.predicted.push_back(belief);

        const double p = problem.system->interval_failure_prob(belief);
        survive *= 1.0 - p;
        const double cdf = 1.0 - survive;
        const double annual = cdf - prev_cdf;
        prev_cdf = cdf;
        out.interval.push_back(p);
        out.cdf.push_back(cdf);
        out.annual.push_back(annual);

        YearRecord rec(year, static_cast<std::size_t>(N));
        if (year < problem.horizon && decide_campaign(year, last_campaign, annual, w)) {
            rec.campaign = true;
            last_campaign = year;
            for (int k : prioritize(belief, problem.sei, w.eta, w.n_I)) {
                Rng rng = substream(seed, "inspect",
                                    {history_index, static_cast<std::uint64_t>(year - start_year), static_cast<std::uint64_t>(k)});
                const double depth = options.chain_truth
                                         ? dbn.chain_depth(chain, k, rng)
                                         : dbn.observable_depth(truth.components[static_cast<std::size_t>(k)]);
                const Outcome o = sample_measurement(depth, dbn.inspection(), rng);
                rec.outcomes[static_cast<std::size_t>(k)] = o;
                if (o.kind == Outcome::Kind::Measured && o.value >= w.d_rep) {
                    rec.repaired[static_cast<std::size_t>(k)] = 1;
                    if (options.chain_truth)
                        dbn.repair_chain(chain, k, rng);
                    else
                        dbn.repair_truth(truth.components[static_cast<std::size_t>(k)], rng);
                }
            }
            belief.update(rec.outcomes);
            belief.apply_repairs(rec.repaired);
        }
        out.history.years.push_back(std::move(rec));
    }
    out.final_belief = std::move(belief);
    out.final_truth = std::move(truth);
    return out;
}

}  // namespace imprs
