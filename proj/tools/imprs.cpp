// imprs: command-line front end for calibration, strategy evaluation and
// optimization, adaptive re-planning and the estimator study.

#include "imprs/errors.hpp"
#include "imprs/io.hpp"
#include "imprs/parallel.hpp"
#include "imprs/report.hpp"
#include "imprs/scenario.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace imprs;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kInterrupted = 130 };

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out_dir = ".";
};

struct Loaded {
    Scenario scenario;
    std::string hash;
    std::uint64_t seed = 0;
};

Loaded load(const Common& c)
{
    Loaded l;
    l.scenario = load_scenario(c.scenario);
    l.hash = scenario_hash(l.scenario);
    l.seed = l.scenario.seed;
    if (c.seed) {
        l.seed = *c.seed;
    } else if (const char* env = std::getenv("IMPRS_SEED")) {
        try {
            std::size_t used = 0;
            l.seed = std::stoull(env, &used);
            if (used != std::strlen(env)) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(std::string("IMPRS_SEED is not an unsigned integer: ") + env);
        }
    }
    l.scenario.seed = l.seed;
    l.scenario.optimizer.ce.seed = l.seed;
    l.scenario.optimizer.gp.seed = l.seed;
    l.scenario.optimizer.minimize.seed = l.seed;
    set_worker_threads(c.threads);
    return l;
}

ordered_json provenance(const Loaded& l)
{
    return {{"scenario", l.scenario.name}, {"scenario_hash", l.hash}, {"seed", l.seed}};
}

void write(const Common& c, const std::string& name, const std::string& text)
{
    write_text_file(fs::path(c.out_dir) / name, text);
}

template <class F>
std::string to_text(F&& f)
{
    std::ostringstream os;
    f(os);
    return os.str();
}

void apply_budget(OptimizerSettings& o, std::optional<int> budget, std::optional<int> n_mc)
{
    if (budget) {
        if (*budget < 1) throw ConfigError("--budget must be >= 1");
        o.ce.n_max = *budget;
        o.ce.n_ce = std::min(o.ce.n_ce, *budget);
        o.ce.n_elite = std::min(o.ce.n_elite, o.ce.n_ce);
    }
    if (n_mc) o.n_mc = *n_mc;
}

void write_distribution_trace(std::ostream& out, const CeResult& r)
{
    CsvWriter csv(out);
    csv.header({"iteration", "dT_mean", "dT_std", "nI_mean", "nI_std", "ln_pth_mean", "ln_pth_std", "ln_eta_mean",
                "ln_eta_std"});
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& d = r.trace[i];
        csv.cell(i).cell(d.dT_mean).cell(d.dT_std).cell(d.nI_mean).cell(d.nI_std).cell(d.ln_pth_mean).cell(d.ln_pth_std);
        csv.cell(d.ln_eta_mean).cell(d.ln_eta_std);
        csv.end_row();
    }
}

// Surrogate cost over (dT, n_I) with p_th and eta held at the optimum.
void write_surrogate_grid(std::ostream& out, const StrategySurrogate& model, const StrategyParams& best,
                          const StrategySpace& space)
{
    CsvWriter csv(out);
    csv.header({"dT", "n_I", "p_th", "eta", "cost", "std_error"});
    for (int dT = space.dT_min; dT <= space.dT_max; ++dT)
        for (int nI = space.nI_min; nI <= space.nI_max; ++nI) {
            StrategyParams w = best;
            w.dT = dT;
            w.n_I = nI;
            const auto p = model.predict(w);
            csv.cell(dT).cell(nI).cell(w.p_th).cell(w.eta).cell(p.cost).cell(p.std_error);
            csv.end_row();
        }
}

int cmd_calibrate(const Common& c, std::optional<std::size_t> samples)
{
    Loaded l = load(c);
    Scenario s = l.scenario;
    if (samples) s.calibration.samples = *samples;
    std::vector<CalibrationResult> results;
    const Scenario out = calibrate_scenario(s, &results);

    Scenario written = out;
    written.seed = l.scenario.seed;
    write(c, "scenario.calibrated.toml", canonical_toml(written));

    ordered_json j = provenance(l);
    j["calibrated_hash"] = scenario_hash(written);
    j["groups"] = ordered_json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        j["groups"].push_back({{"name", out.groups[i].name},
                               {"fdf", r.fdf},
                               {"kS", r.kS},
                               {"p_sn", r.p_sn},
                               {"mean_K", r.mean_K},
                               {"p_fm", r.p_fm},
                               {"relative_residual", std::abs(r.p_fm - r.p_sn) / r.p_sn}});
    }
    write(c, "calibration.json", dump(j));

    const double T = s.design_life;
    const double nu = s.fatigue.cycles_per_year;
    write(c, "calibration_sn.csv", to_text([&](std::ostream& os) {
              CsvWriter csv(os);
              csv.header({"fdf", "kS", "p_sn"});
              for (int i = 2; i <= 24; ++i) {
                  const double fdf = 0.5 * i;
                  const double kS = map_fdf_to_kS(fdf, s.sn, T, nu);
                  csv.cell(fdf).cell(kS).cell(sn_failure_probability(kS, s.sn, T, nu));
                  csv.end_row();
              }
          }));
    const FractureMechanicsSample sample(s.fatigue, T, s.calibration);
    write(c, "calibration_fm.csv", to_text([&](std::ostream& os) {
              CsvWriter csv(os);
              csv.header({"mean_K", "p_fm"});
              for (int i = 4; i <= 60; ++i) {
                  const double mk = 0.5 * i;
                  csv.cell(mk).cell(sample.failure_probability(mk));
                  csv.end_row();
              }
          }));
    for (std::size_t i = 0; i < results.size(); ++i)
        std::cout << out.groups[i].name << ": mean_K = " << format_double(results[i].mean_K)
                  << "  P_SN = " << format_double(results[i].p_sn) << '\n';
    return kOk;
}

int cmd_evaluate(const Common& c, const std::string& strategy, std::optional<int> n_mc)
{
    Loaded l = load(c);
    const Problem problem = build_problem(l.scenario);
    const StrategyParams w = parse_strategy(strategy);
    w.validate(problem.n_components(), problem.horizon);
    const int n = n_mc.value_or(l.scenario.optimizer.check_n_mc > 0 ? l.scenario.optimizer.check_n_mc : 100);
    if (n < 1) throw ConfigError("--n-mc must be >= 1");
    const ExpectedCost e = expected_cost(problem, l.scenario.costs, w, prior_start(problem), n, l.seed);

    ordered_json j = provenance(l);
    j["strategy"] = to_json(w);
    j["cost"] = to_json(e);
    j["sei"] = problem.sei;
    write(c, "evaluate.json", dump(j));
    write(c, "cost_by_year.csv", to_text([&](std::ostream& os) { write_cost_csv(os, e.mean); }));
    write(c, "history_totals.csv", to_text([&](std::ostream& os) {
              CsvWriter csv(os);
              csv.header({"history", "total"});
              for (std::size_t i = 0; i < e.totals.size(); ++i) {
                  csv.cell(i).cell(e.totals[i]);
                  csv.end_row();
              }
          }));
    std::cout << format_strategy(w) << ": E[C_tot] = " << format_double(e.mean.total)
              << " +- " << format_double(e.std_error) << '\n';
    return kOk;
}

int cmd_optimize(const Common& c, std::optional<int> budget, std::optional<int> n_mc)
{
    Loaded l = load(c);
    const Problem problem = build_problem(l.scenario);
    OptimizerSettings settings = l.scenario.optimizer;
    apply_budget(settings, budget, n_mc);
    const OptimizedStrategy opt = optimize_initial(problem, l.scenario.costs, settings);

    ordered_json j = provenance(l);
    j["strategy"] = to_json(opt.w);
    j["surrogate"] = to_json(opt.prediction);
    if (!opt.check.totals.empty()) j["monte_carlo"] = to_json(opt.check);
    j["evaluations"] = opt.search.samples.size();
    j["final_distribution"] = to_json(opt.search.trace.back());
    write(c, "optimize.json", dump(j));
    write(c, "trace.csv", to_text([&](std::ostream& os) { write_trace_csv(os, opt.search); }));
    write(c, "ce_distributions.csv", to_text([&](std::ostream& os) { write_distribution_trace(os, opt.search); }));
    write(c, "surrogate_grid.csv", to_text([&](std::ostream& os) {
              write_surrogate_grid(os, *opt.surrogate, opt.w, settings.ce.space);
          }));
    std::cout << "w* = " << format_strategy(opt.w) << "  surrogate cost " << format_double(opt.prediction.cost)
              << " +- " << format_double(opt.prediction.std_error) << '\n';
    return kOk;
}

int cmd_adapt(const Common& c, const std::string& observations, const std::string& strategy, std::vector<int> years,
              std::optional<int> budget, std::optional<int> n_mc, std::optional<int> eval_n_mc)
{
    Loaded l = load(c);
    const Problem problem = build_problem(l.scenario);
    const StrategyParams w0 = parse_strategy(strategy);
    w0.validate(problem.n_components(), problem.horizon);

    std::ifstream in(observations);
    if (!in) throw ConfigError("cannot open observations file " + observations);
    const ObservationHistory obs = read_history_csv(in, problem.n_components(), problem.horizon - 1);
    if (years.empty())
        for (const auto& rec : obs.years)
            if (rec.campaign) years.push_back(rec.year);
    if (years.empty()) throw ConfigError("observations contain no campaign and no --year was given");
    for (std::size_t i = 1; i < years.size(); ++i)
        if (years[i] <= years[i - 1]) throw ConfigError("adaptation years must be strictly increasing");

    AdaptOptions opts;
    opts.optimizer = l.scenario.optimizer;
    apply_budget(opts.optimizer, budget, n_mc);
    opts.eval_n_mc = eval_n_mc.value_or(l.scenario.adapt_eval_n_mc);

    AdaptationRecord record;
    record.seed = l.seed;
    record.scenario_hash = l.hash;
    record.w0 = w0;
    const ExpectedCost c0 = expected_cost(problem, l.scenario.costs, w0, prior_start(problem), opts.eval_n_mc, l.seed);
    record.cost0 = c0.mean.total;
    record.cost0_std_error = c0.std_error;

    StrategyParams w = w0;
    for (int year : years) {
        AdaptOptions stage_opts = opts;
        const std::uint64_t stage_seed = substream(l.seed, "adapt", {static_cast<std::uint64_t>(year)})();
        stage_opts.optimizer.ce.seed = stage_opts.optimizer.gp.seed = stage_opts.optimizer.minimize.seed = stage_seed;
        AdaptationStage stage = adapt(problem, l.scenario.costs, w, obs, year, stage_opts);
        for (const auto& msg : stage.warnings) std::cerr << "warning: " << msg << '\n';
        const std::string tag = "year" + std::to_string(year);
        write(c, "adapt_trace_" + tag + ".csv", to_text([&](std::ostream& os) { write_trace_csv(os, stage.search); }));
        const FilteredStart fs = filter_observations(problem, obs, year, w);
        write(c, "belief_" + tag + ".csv", to_text([&](std::ostream& os) { write_belief_csv(os, fs.start.belief); }));
        std::cout << "year " << year << ": w_prev " << format_strategy(stage.w_prev) << " -> "
                  << format_strategy(stage.w_next) << "  E[C|w_prev,z] = " << format_double(stage.cost_prev.mean.total)
                  << "  E[C|w_next,z] = " << format_double(stage.cost_next.mean.total)
                  << "  gain = " << format_double(stage.gain) << " +- " << format_double(stage.gain_std_error) << '\n';
        w = stage.w_next;
        record.stages.push_back(std::move(stage));
    }
    write(c, "adaptation.json", dump(to_json(record)));
    return kOk;
}

int cmd_validate_estimator(const Common& c, const std::string& strategy, std::optional<int> n_mc)
{
    Loaded l = load(c);
    const Problem problem = build_problem(l.scenario);
    const StrategyParams w = parse_strategy(strategy);
    w.validate(problem.n_components(), problem.horizon);
    const int n = n_mc.value_or(500);
    if (n < 2) throw ConfigError("--n-mc must be >= 2");
    const EstimatorReport r = estimator_study(problem, w, n, l.seed);
    ordered_json j = provenance(l);
    j["strategy"] = to_json(w);
    j["report"] = to_json(r);
    write(c, "estimator.json", dump(j));
    write(c, "estimator.csv", to_text([&](std::ostream& os) { write_estimator_csv(os, r); }));
    std::cout << "means agree: " << (r.means_agree ? "yes" : "no")
              << "  filtered variance <= smoothed: " << (r.variance_ordered ? "yes" : "no")
              << "  zero before first inspection: " << (r.zero_before_inspection ? "yes" : "no") << '\n';
    return kOk;
}

extern "C" void on_sigint(int) { request_interrupt(); }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Risk-based inspection and maintenance planning for fatigue-deteriorating structures"};
    app.require_subcommand(1);

    Common common;
    std::optional<int> budget, n_mc, eval_n_mc;
    std::optional<std::size_t> samples;
    std::string strategy = "dT=40,pth=1,nI=1,eta=1,drep=0";
    std::string observations;
    std::vector<int> years;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", common.scenario, "Scenario file (TOML or JSON)")->required();
        sub->add_option("--seed", common.seed, "Master seed (falls back to IMPRS_SEED, then the scenario)");
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out-dir", common.out_dir, "Directory for result files");
    };

    auto* cal = app.add_subcommand("calibrate", "Calibrate the mean of K of every FDF group");
    add_common(cal);
    cal->add_option("--samples", samples, "Monte Carlo samples of the fracture-mechanics model");

    auto* ev = app.add_subcommand("evaluate", "Expected life-cycle cost of one strategy");
    add_common(ev);
    ev->add_option("--strategy", strategy, "e.g. \"dT=7,pth=2e-2,nI=9,eta=1.3,drep=0\"");
    ev->add_option("--n-mc", n_mc, "Simulated histories");

    auto* opt = app.add_subcommand("optimize", "Optimize the strategy from the prior");
    add_common(opt);
    opt->add_option("--budget", budget, "Objective evaluations");
    opt->add_option("--n-mc", n_mc, "Histories per objective evaluation");

    auto* ad = app.add_subcommand("adapt", "Re-optimize the strategy after observed inspection outcomes");
    add_common(ad);
    ad->add_option("--observations", observations, "CSV: year,component,outcome,repair")->required();
    ad->add_option("--strategy", strategy, "Strategy followed so far")->required();
    ad->add_option("--year", years, "Adaptation years (default: every campaign year in the observations)");
    ad->add_option("--budget", budget, "Objective evaluations per stage");
    ad->add_option("--n-mc", n_mc, "Histories per objective evaluation");
    ad->add_option("--eval-n-mc", eval_n_mc, "Histories for comparing the previous and new strategy");

    auto* est = app.add_subcommand("validate-estimator", "Compare filtered and smoothed failure-probability estimators");
    add_common(est);
    est->add_option("--strategy", strategy, "Strategy to simulate");
    est->add_option("--n-mc", n_mc, "Simulated histories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*cal) return cmd_calibrate(common, samples);
        if (*ev) return cmd_evaluate(common, strategy, n_mc);
        if (*opt) return cmd_optimize(common, budget, n_mc);
        if (*ad) return cmd_adapt(common, observations, strategy, years, budget, n_mc, eval_n_mc);
        if (*est) return cmd_validate_estimator(common, strategy, n_mc);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const Interrupted&) {
        std::cerr << "interrupted\n";
        return kInterrupted;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    return kOk;
}
