// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,4,8] [--threads N]

#include "oracles.hpp"
#include "toy_model.hpp"

#include "imprs/adaptive.hpp"
#include "imprs/ce.hpp"
#include "imprs/cost.hpp"
#include "imprs/history.hpp"
#include "imprs/numerics.hpp"
#include "imprs/parallel.hpp"
#include "imprs/scenario.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace imprs;
namespace fs = std::filesystem;

namespace {

const std::string source_dir = IMPRS_SOURCE_DIR;
const std::string shipped = source_dir + "/scenarios/zayas.toml";
const std::string fixture = source_dir + "/scenarios/zayas_year7_no_detection.csv";

// strategy reported as optimal at t0 for the frame
const char* const reference_w0 = "dT=7,pth=2e-2,nI=9,eta=1.3,drep=0";

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Scenario zayas() { return load_scenario(shipped); }

// 1 ------------------------------------------------------------------------
Verdict dbn_oracle()
{
    const toy::Toy t = toy::make_toy();
    const toy::JointOracle oracle(t);
    const toy::Oracle o = oracle.run();
    std::vector<BeliefState> predicted;
    BeliefState b = t.dbn->prior(0);
    double err = 0.0;
    for (std::size_t y = 0; y < t.records.size(); ++y) {
        b.predict();
        predicted.push_back(b);
        err = std::max(err, max_abs_diff(oracle.joint(b), o.predicted[y]));
        err = std::max(err, std::abs(t.system->interval_failure_prob(b) - o.interval[y]));
        b.update(t.records[y].outcomes);
        b.apply_repairs(t.records[y].repaired);
        err = std::max(err, max_abs_diff(oracle.joint(b), o.filtered[y]));
    }
    const auto s = smooth(predicted, t.records);
    for (std::size_t y = 0; y < s.size(); ++y) err = std::max(err, max_abs_diff(oracle.joint(s[y]), o.smoothed[y]));
    return {err < 1e-10, "max abs error " + fmt("%.2e", err)};
}

// 2 ------------------------------------------------------------------------
Verdict transition_fidelity()
{
    const Scenario sc = zayas();
    const FatigueParams& fp = sc.fatigue;
    const double sd = fp.std_lnK;
    const DiscretizationConfig grid;  // default grid
    const auto dbn = std::make_shared<DbnModel>(fp, CorrelationParams{}, grid, InspectionModel{},
                                                std::vector<double>{std::log(13.0) - sd * sd / 2}, std::vector<int>{0});
    BeliefState b = dbn->prior(0);
    for (int i = 0; i < 10; ++i) b.predict();
    const auto marg = b.crack_marginal(0);

    const int n = 1000000;
    const int chunks = 100;
    std::vector<std::vector<double>> counts(chunks, std::vector<double>(marg.size(), 0.0));
    parallel_for(chunks, [&](std::size_t c) {
        Rng rng = substream(21, "transition", {c});
        for (int i = 0; i < n / chunks; ++i) {
            // continuous model: D0 exponential, ln K normal, M normal, closed-form growth
            const double D0 = -fp.mean_D0 * std::log(uniform01(rng));
            const double lnK = std::log(13.0) - sd * sd / 2 + sd * standard_normal(rng);
            const double M = fp.mean_M + fp.std_M * standard_normal(rng);
            const auto d = crack_depth(10.0, D0, std::exp(lnK), M, fp);
            const bool failed = !d || *d >= fp.critical_depth;
            const int bin = failed ? dbn->grid().failed() : dbn->grid().bin_of(*d);
            counts[c][static_cast<std::size_t>(bin)] += 1.0;
        }
    });
    double tv = 0.0;
    for (std::size_t d = 0; d < marg.size(); ++d) {
        double f = 0.0;
        for (const auto& c : counts) f += c[d];
        tv += 0.5 * std::abs(f / n - marg[d]);
    }
    return {tv < 0.02, "TV distance " + fmt("%.4f", tv) + " (" + std::to_string(marg.size()) + " states, 1e6 samples)"};
}

// 3 ------------------------------------------------------------------------
Verdict paris_closed_form()
{
    const FatigueParams fp;
    Rng rng = substream(3, "paris-acceptance");
    double worst = 0.0;
    int compared = 0;
    while (compared < 100) {
        const double D0 = 0.1 + 2.9 * uniform01(rng);
        const double K = 5.0 + 20.0 * uniform01(rng);
        const double M = 3.0 + 1.0 * uniform01(rng);
        const double t = 1.0 + 39.0 * uniform01(rng);
        const auto d = crack_depth(t, D0, K, M, fp);
        if (!d) continue;
        const double ref = oracle::ode_depth(t, D0, K, M, fp);
        worst = std::max(worst, std::abs(*d - ref) / ref);
        ++compared;
    }
    return {worst < 1e-6, "max rel. error " + fmt("%.2e", worst) + " over 100 points"};
}

// 4 ------------------------------------------------------------------------
Verdict calibration()
{
    const Scenario sc = zayas();
    std::vector<CalibrationResult> res;
    calibrate_scenario(sc, &res);
    const std::vector<std::pair<double, double>> table{{2.0, 16.26}, {3.0, 13.29}, {7.0, 8.88}, {10.0, 7.58}};
    bool ok = true;
    std::ostringstream d;
    std::vector<std::pair<double, double>> by_fdf;
    for (const auto& r : res) {
        by_fdf.emplace_back(r.fdf, r.mean_K);
        const double miss = std::abs(r.p_fm - r.p_sn) / r.p_sn;
        double ref = 0.0;
        for (const auto& [f, k] : table)
            if (f == r.fdf) ref = k;
        const double dev = std::abs(r.mean_K - ref) / ref;
        ok = ok && miss < 0.05 && ref > 0.0 && dev < 0.10;
        d << "FDF" << r.fdf << " mu_K " << fmt("%.2f", r.mean_K) << " (" << fmt("%+.1f", 100 * (r.mean_K - ref) / ref)
          << "%, P mismatch " << fmt("%.1e", miss) << ") ";
    }
    std::sort(by_fdf.begin(), by_fdf.end());
    for (std::size_t i = 1; i < by_fdf.size(); ++i) ok = ok && by_fdf[i].second < by_fdf[i - 1].second;
    ok = ok && by_fdf.size() == 4;
    return {ok, d.str()};
}

// 5 ------------------------------------------------------------------------
Verdict cost_exactness()
{
    ObservationHistory h;
    h.n_components = 3;
    for (int y = 1; y <= 3; ++y) h.years.emplace_back(y, 3);
    h.years[1].campaign = true;
    h.years[1].outcomes[0] = imprs::Outcome{imprs::Outcome::Kind::NoDetection, 0.0};
    h.years[1].outcomes[1] = imprs::Outcome{imprs::Outcome::Kind::Measured, 2.0};
    h.years[1].repaired[1] = 1;
    h.years[2].campaign = true;
    const CostBreakdown c = conditional_cost(h, {0.01, 0.02, 0.03}, {0.01, 0.03, 0.06}, CostParams{});
    // worked by hand in exact rationals
    const double err = std::max({std::abs(c.campaign - 1.8181167122750677), std::abs(c.inspection - 0.18646674356016918),
                                 std::abs(c.repair - 0.27970011534025374), std::abs(c.risk - 171.89090168939549),
                                 std::abs(c.total - 174.17518526057097)});

    ObservationHistory single;
    single.n_components = 22;
    for (int y = 1; y <= 8; ++y) single.years.emplace_back(y, 22);
    single.years[6].campaign = true;
    for (int k = 0; k < 9; ++k) single.years[6].outcomes[static_cast<std::size_t>(k)] = imprs::Outcome{imprs::Outcome::Kind::NoDetection, 0.0};
    const std::vector<double> zero(8, 0.0);
    const double c7 = conditional_cost(single, zero, zero, CostParams{}).total;
    const double exact = 1.9 / std::pow(1.02, 7);
    const bool ok = err < 1e-12 && std::abs(c7 - exact) < 1e-12 && std::abs(c7 - 1.654) < 5e-4;
    return {ok, "fixture error " + fmt("%.1e", err) + ", single campaign " + fmt("%.6f", c7)};
}

// 6 ------------------------------------------------------------------------
Verdict estimators()
{
    Scenario sc = zayas();
    sc.name = "zayas-6";
    sc.n_components = 6;
    sc.horizon = 20;
    std::vector<ComponentGroup> groups;
    for (auto g : sc.groups) {
        std::erase_if(g.components, [](int c) { return c > 6; });
        if (!g.components.empty()) groups.push_back(g);
    }
    sc.groups = groups;
    sc.optimizer.ce.space.nI_max = 6;
    sc.optimizer.ce.space.dT_max = 20;
    sc.optimizer.ce.initial.nI_mean = 3.0;
    sc.optimizer.ce.initial.nI_std = 2.0;
    const Problem p = build_problem(sc);
    const int n = 500;
    const EstimatorReport r = estimator_study(p, parse_strategy("dT=10,pth=1,nI=6,eta=1,drep=1e9"), n, sc.seed);

    bool agree = true, ordered = true, zero = true;
    int worst_year = 0;
    double worst_z = 0.0;
    for (const auto& y : r.years) {
        const double se = std::sqrt((y.filtered_var + y.smoothed_var) / n);
        const double z = se > 0 ? std::abs(y.filtered_mean - y.smoothed_mean) / se : 0.0;
        if (z > worst_z) worst_z = z, worst_year = y.year;
        agree = agree && std::abs(y.filtered_mean - y.smoothed_mean) <= 2.0 * se;
        ordered = ordered && y.filtered_var <= y.smoothed_var;
        if (r.first_inspection_year > 0 && y.year <= r.first_inspection_year) zero = zero && y.filtered_var == 0.0;
    }
    zero = zero && r.first_inspection_year > 0;
    std::ostringstream d;
    d << "means " << (agree ? "agree" : "differ") << " (worst " << fmt("%.2f", worst_z) << " se at year " << worst_year
      << "), variance " << (ordered ? "ordered" : "NOT ordered") << ", zero before first inspection (year "
      << r.first_inspection_year << "): " << (zero ? "yes" : "no");
    return {agree && ordered && zero, d.str()};
}

// 7 ------------------------------------------------------------------------
double bowl(const StrategyParams& w)
{
    const double a = (w.dT - 12.0) / 6.0;
    const double b = (std::log(w.p_th) - std::log(5e-3)) / 2.0;
    const double c = (w.n_I - 7.0) / 5.0;
    const double d = (std::log(w.eta) - std::log(1.5)) / 0.8;
    return 10.0 * std::exp(a * a + b * b + c * c + d * d + 0.3 * a * c);
}

Verdict optimizer_recovery()
{
    std::ostringstream d;
    bool ok = true;
    int worst_evals = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const StrategyObjective noisy = [seed](const StrategyParams& w, std::uint64_t i) {
            Rng rng = substream(seed, "acceptance-noise", {i});
            return bowl(w) * std::exp(0.1 * standard_normal(rng));
        };
        CeConfig ce;
        ce.seed = seed;
        ce.n_max = 800;
        const CeResult r = ce_optimize(noisy, ce);
        GpOptions gp;
        gp.seed = seed;
        MinimizeOptions mo;
        mo.seed = seed;
        const StrategySurrogate model(r.samples, gp);
        const SurrogateMinimum m = minimize_surrogate(model, search_box(r, ce.space), mo);
        worst_evals = std::max(worst_evals, static_cast<int>(r.samples.size()));
        const bool hit = std::abs(m.w.dT - 12) <= 1 && std::abs(m.w.n_I - 7) <= 1 &&
                         std::abs(m.w.p_th / 5e-3 - 1.0) <= 0.10 && std::abs(m.w.eta / 1.5 - 1.0) <= 0.10;
        ok = ok && hit;
        d << "seed " << seed << ": " << format_strategy(m.w) << (hit ? "" : " (miss)") << "; ";
    }
    ok = ok && worst_evals <= 1600;
    d << worst_evals << " evaluations per run";
    return {ok, d.str()};
}

// 8 ------------------------------------------------------------------------
Verdict paper_trends()
{
    const Scenario sc = zayas();
    const Problem p = build_problem(sc);
    const SimulationStart start = prior_start(p);
    const int n = 100;
    const std::uint64_t seed = 8;
    StrategyParams w = parse_strategy(reference_w0);

    std::ostringstream d;
    std::vector<double> risk;
    d << "risk by n_I:";
    for (int nI : {2, 6, 10, 14, 18}) {
        StrategyParams v = w;
        v.n_I = nI;
        risk.push_back(expected_cost(p, sc.costs, v, start, n, seed).mean.risk);
        d << " " << fmt("%.2f", risk.back());
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < risk.size(); ++i) decreasing = decreasing && risk[i] < risk[i - 1];

    std::vector<double> total;
    d << "; total by dT:";
    for (int dT : {2, 5, 10, 20, 40}) {
        StrategyParams v = w;
        v.dT = dT;
        total.push_back(expected_cost(p, sc.costs, v, start, n, seed).mean.total);
        d << " " << fmt("%.2f", total.back());
    }
    const auto lowest = std::min_element(total.begin(), total.end()) - total.begin();
    const bool interior = lowest > 0 && lowest < static_cast<long>(total.size()) - 1;

    const ExpectedCost ref = expected_cost(p, sc.costs, w, start, 200, seed);
    const bool order = ref.mean.total >= 10.0 && ref.mean.total <= 40.0;
    d << "; reference strategy " << fmt("%.2f", ref.mean.total) << " +- " << fmt("%.2f", ref.std_error);

    OptimizerSettings opt = sc.optimizer;
    opt.ce.n_max = 400;
    opt.n_mc = 1;
    opt.check_n_mc = 200;
    opt.ce.seed = seed;
    const OptimizedStrategy best = optimize_initial(p, sc.costs, opt);
    const bool best_order = best.check.mean.total >= 10.0 && best.check.mean.total <= 40.0;
    d << "; optimized (budget 400) " << format_strategy(best.w) << " -> " << fmt("%.2f", best.check.mean.total) << " +- "
      << fmt("%.2f", best.check.std_error);
    return {decreasing && interior && order && best_order, d.str()};
}

// 9 ------------------------------------------------------------------------
AdaptOptions adapt_options(const Scenario& sc, int budget, int eval_n_mc, std::uint64_t seed)
{
    AdaptOptions o;
    o.optimizer = sc.optimizer;
    o.optimizer.ce.n_max = budget;
    o.optimizer.n_mc = 1;
    o.optimizer.ce.seed = seed;
    o.eval_n_mc = eval_n_mc;
    return o;
}

Verdict adaptive_gain()
{
    const Scenario sc = zayas();
    const Problem p = build_problem(sc);
    const StrategyParams w0 = parse_strategy(reference_w0);
    std::ostringstream d;

    std::ifstream in(fixture);
    const ObservationHistory z = read_history_csv(in, p.n_components(), 7);
    const AdaptationStage st = adapt(p, sc.costs, w0, z, 7, adapt_options(sc, 1600, 200, 9));
    const double combined = std::hypot(st.cost_prev.std_error, st.cost_next.std_error);
    const bool fixture_ok = st.cost_next.mean.total <= st.cost_prev.mean.total + 2.0 * combined;
    d << "fixture: w1 " << format_strategy(st.w_next) << ", E[C|w0,z] " << fmt("%.2f", st.cost_prev.mean.total)
      << ", E[C|w1,z] " << fmt("%.2f", st.cost_next.mean.total) << ", gain " << fmt("%.2f", st.gain) << " +- "
      << fmt("%.2f", st.gain_std_error) << " paired, " << fmt("%.2f", combined) << " combined ("
      << st.warnings.size() << " warnings)";

    // observation records drawn under w0 up to year 7
    const int draws = 30;
    std::vector<double> gains, rel;
    for (int i = 0; i < draws; ++i) {
        SimulationResult sim = simulate_history(p, w0, prior_start(p), 90, static_cast<std::uint64_t>(i));
        sim.history.years.resize(7);
        const AdaptationStage s = adapt(p, sc.costs, w0, sim.history, 7, adapt_options(sc, 400, 60, 100 + i));
        gains.push_back(s.gain);
        rel.push_back(s.gain / s.cost_prev.mean.total);
    }
    const double mean = std::accumulate(gains.begin(), gains.end(), 0.0) / draws;
    double var = 0.0;
    for (double g : gains) var += (g - mean) * (g - mean);
    const double se = std::sqrt(var / (draws - 1) / draws);
    const double mean_rel = std::accumulate(rel.begin(), rel.end(), 0.0) / draws;
    const bool draws_ok = mean + 2.0 * se >= 0.0;
    d << "; " << draws << " draws: mean gain " << fmt("%.3f", mean) << " +- " << fmt("%.3f", se) << " ("
      << fmt("%.1f", 100 * mean_rel) << "% of E[C|w0,z])";
    return {fixture_ok && draws_ok, d.str()};
}

// 10 -----------------------------------------------------------------------
Verdict prioritization_and_decomposition()
{
    const Scenario sc = zayas();
    const Problem p = build_problem(sc);
    BeliefState b = p.dbn->prior(0);
    bool ranking = true;
    for (int y = 1; y <= 30; ++y) {
        b.predict();
        std::vector<int> order(static_cast<std::size_t>(p.n_components()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
            return b.component_failure_prob(a) > b.component_failure_prob(c);
        });
        ranking = ranking && prioritize(b, p.sei, 0.0, p.n_components()) == order;
    }

    CapacityModel cap;
    cap.mode = CapacityModel::Mode::General;
    cap.intact_resistance = 200.0;
    cap.sets = {{{0}, 0.7}, {{1}, 0.8}, {{2}, 0.9}, {{0, 1}, 0.35}, {{1, 2}, 0.5}, {{0, 2}, 0.6}, {{0, 1, 2}, 0.1}};
    const SystemModel sys(cap, LoadModel{}, 3);
    const std::vector<double> pf{0.15, 0.35, 0.05};
    const double a = sys.failure_given({0, 0, 0});
    double total = a;
    for (unsigned mask = 1; mask < 8; ++mask) {
        double pr = 1.0;
        std::vector<std::uint8_t> failed(3, 0);
        for (unsigned k = 0; k < 3; ++k) {
            const bool f = mask >> k & 1U;
            failed[k] = f;
            pr *= f ? pf[k] : 1.0 - pf[k];
        }
        const double importance = sys.failure_given(failed) - a;  // SEI for singletons, MEI otherwise
        total += importance * pr;
    }
    const double err = std::abs(sys.interval_failure_prob(pf) - total);
    return {ranking && err < 1e-12,
            std::string("eta=0 ranking ") + (ranking ? "matches" : "differs") + ", decomposition error " + fmt("%.1e", err)};
}

// 11 -----------------------------------------------------------------------
std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict reproducibility()
{
    const fs::path root = fs::temp_directory_path() / "imprs-acceptance";
    fs::remove_all(root);
    const std::string cli = IMPRS_CLI_PATH;
    const std::string common = " --scenario " + shipped + " --seed 5";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"calibrate", "calibrate --samples 20000"},
        {"evaluate", "evaluate --strategy dT=5,pth=1e-2,nI=4,eta=1 --n-mc 12"},
        {"optimize", "optimize --budget 40 --n-mc 1"},
        {"adapt", "adapt --observations " + fixture + " --strategy " + reference_w0 + " --budget 40 --eval-n-mc 8"},
        {"validate-estimator", "validate-estimator --strategy dT=6,pth=1,nI=3,eta=1,drep=1e9 --n-mc 8"},
    };
    bool ok = true;
    int files = 0;
    std::ostringstream d;
    for (const auto& [name, args] : commands) {
        std::vector<fs::path> dirs;
        for (const char* threads : {"1", "4", "1"}) {
            const fs::path out = root / (name + "-" + threads + "-" + std::to_string(dirs.size()));
            const std::string cmd = cli + " " + args + common + " --threads " + threads + " --out-dir " + out.string() +
                                    " > " + (root / (name + ".log")).string() + " 2>&1";
            fs::create_directories(root);
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
                d << name << " failed; ";
            }
            dirs.push_back(out);
        }
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(dirs[0])) names.insert(e.path().filename().string());
        for (std::size_t i = 1; i < dirs.size(); ++i) {
            std::set<std::string> other;
            for (const auto& e : fs::directory_iterator(dirs[i])) other.insert(e.path().filename().string());
            ok = ok && other == names;
            for (const auto& f : names) {
                if (read_file(dirs[0] / f) != read_file(dirs[i] / f)) {
                    ok = false;
                    d << name << "/" << f << " differs; ";
                }
            }
        }
        ok = ok && !names.empty();
        files += static_cast<int>(names.size());
    }
    d << files << " result files identical across --threads 1/4/1";
    return {ok, d.str()};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    int threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream s(argv[++i]);
            std::string item;
            while (std::getline(s, item, ',')) only.insert(std::stoi(item));
        } else if (a == "--threads" && i + 1 < argc) {
            threads = std::stoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...] [--threads N]\n";
            return 2;
        }
    }
    set_worker_threads(threads);

    const std::vector<Criterion> criteria{
        {1, "DBN oracle equivalence", 1, dbn_oracle},
        {2, "transition fidelity", 30, transition_fidelity},
        {3, "Paris closed form vs ODE", 5, paris_closed_form},
        {4, "calibration", 120, calibration},
        {5, "cost accounting", 1, cost_exactness},
        {6, "filtered vs smoothed estimators", 300, estimators},
        {7, "optimizer recovery", 60, optimizer_recovery},
        {8, "qualitative trends", 3600, paper_trends},
        {9, "adaptive inequality", 3600, adaptive_gain},
        {10, "prioritization and decomposition", 1, prioritization_and_decomposition},
        {11, "reproducibility", 600, reproducibility},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.limit_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.detail << " ["
                  << fmt("%.1f", secs) << " s, limit " << c.limit_s << " s" << (in_time ? "" : ", over time") << "]"
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
