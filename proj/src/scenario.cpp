#include "imprs/scenario.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace imprs {
namespace {

// Reads typed keys from one table and rejects whatever is left over.
class Section {
public:
    Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name))
    {
        if (!j_.is_object()) throw ConfigError("section [" + name_ + "] must be a table");
    }

    bool has(const char* key) const { return j_.contains(key); }

    template <class T>
    void get(const char* key, T& out)
    {
        if (!j_.contains(key)) return;
        used_.insert(key);
        out = convert<T>(j_.at(key), key);
    }

    template <class T>
    void require(const char* key, T& out)
    {
        if (!j_.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in section [" + name_ + "]");
        get(key, out);
    }

    const ordered_json* child(const char* key)
    {
        if (!j_.contains(key)) return nullptr;
        used_.insert(key);
        return &j_.at(key);
    }

    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    void finish() const
    {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k))
                throw ConfigError("unknown key '" + k + "' in section [" + (name_.empty() ? "root" : name_) + "]");
    }

private:
    [[noreturn]] void bad(const char* key, const char* what) const
    {
        throw ConfigError("key '" + std::string(key) + "' in section [" + name_ + "] must be " + what);
    }

    template <class T>
    T convert(const ordered_json& v, const char* key) const
    {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) bad(key, "a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) bad(key, "a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) bad(key, "a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
            return convert<double>(v, key);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array()) bad(key, "an array of numbers");
            std::vector<double> out;
            for (const auto& e : v) out.push_back(convert<double>(e, key));
            return out;
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
            if (!v.is_array()) bad(key, "an array of integers");
            std::vector<int> out;
            for (const auto& e : v) out.push_back(convert<int>(e, key));
            return out;
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) bad(key, "an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
                if (v.get<long long>() < 0) bad(key, "a nonnegative integer");
                return static_cast<T>(v.get<long long>());
            } else {
                const long long x = v.get<long long>();
                if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) bad(key, "in integer range");
                return static_cast<T>(x);
            }
        }
    }

    const ordered_json& j_;
    std::string name_;
    std::set<std::string> used_;
};

Section sub(Section& parent, const char* key, std::optional<ordered_json>& holder)
{
    const ordered_json* c = parent.child(key);
    holder = c ? *c : ordered_json::object();
    return Section(*holder, parent.path(key));
}

std::vector<SNSegment> segments_from_curves(const std::vector<std::pair<double, double>>& curves)
{
    if (curves.empty()) throw ConfigError("section [sn_curve] needs at least one [[sn_curve.segment]]");
    std::vector<SNSegment> out;
    double lo = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        double hi = std::numeric_limits<double>::infinity();
        if (i + 1 < curves.size()) {
            const double dm = curves[i].first - curves[i + 1].first;
            if (dm == 0.0) throw ConfigError("adjacent sn_curve segments must have different slopes");
            hi = std::pow(10.0, (curves[i].second - curves[i + 1].second) / dm);
            if (!(hi > lo)) throw ConfigError("sn_curve segments must intersect at increasing stress ranges");
        }
        out.push_back({curves[i].first, curves[i].second, lo, hi});
        lo = hi;
    }
    return out;
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const { return scenario_to_json(*this) == scenario_to_json(o); }

std::vector<int> Scenario::component_groups() const
{
    std::vector<int> g(static_cast<std::size_t>(n_components), -1);
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (int c : groups[i].components) g[static_cast<std::size_t>(c - 1)] = static_cast<int>(i);
    return g;
}

bool Scenario::calibrated() const
{
    for (const auto& g : groups)
        if (!g.mean_K) return false;
    return true;
}

void Scenario::validate() const
{
    if (n_components < 1) throw ConfigError("scenario.components must be >= 1");
    if (horizon < 1) throw ConfigError("scenario.horizon must be >= 1");
    if (!(design_life > 0.0)) throw ConfigError("sn_curve.design_life must be > 0");
    fatigue.validate();
    correlation.validate();
    sn.validate();
    inspection.validate();
    load.validate();
    costs.validate();
    discretization.validate();
    optimizer.ce.validate();
    if (optimizer.n_mc < 1) throw ConfigError("optimizer.n_mc must be >= 1");
    if (optimizer.check_n_mc < 0) throw ConfigError("optimizer.check_n_mc must be >= 0");
    if (adapt_eval_n_mc < 1) throw ConfigError("adapt.eval_n_mc must be >= 1");
    if (optimizer.ce.space.nI_max > n_components) throw ConfigError("optimizer.space.nI_max exceeds the component count");
    if (optimizer.ce.space.dT_max > horizon) throw ConfigError("optimizer.space.dT_max exceeds the horizon");
    if (groups.empty()) throw ConfigError("scenario needs at least one [[group]]");

    std::vector<int> seen(static_cast<std::size_t>(n_components), 0);
    for (const auto& g : groups) {
        if (!(g.fdf > 0.0)) throw ConfigError("group '" + g.name + "': fdf must be > 0");
        if (g.mean_K && !(*g.mean_K > 0.0)) throw ConfigError("group '" + g.name + "': mean_K must be > 0");
        if (!(g.loss_per_failure >= 0.0)) throw ConfigError("group '" + g.name + "': loss_per_failure must be >= 0");
        for (int c : g.components) {
            if (c < 1 || c > n_components)
                throw ConfigError("group '" + g.name + "': component " + std::to_string(c) + " out of range");
            if (seen[static_cast<std::size_t>(c - 1)]++)
                throw ConfigError("component " + std::to_string(c) + " belongs to more than one group");
        }
    }
    for (int k = 0; k < n_components; ++k)
        if (!seen[static_cast<std::size_t>(k)])
            throw ConfigError("component " + std::to_string(k + 1) + " belongs to no group");
    if (capacity.mode == CapacityModel::Mode::General) capacity.validate(n_components);
    else if (!(capacity.intact_resistance > 0.0)) throw ConfigError("capacity.intact_resistance must be > 0");
}

Scenario scenario_from_json(const ordered_json& j)
{
    Scenario s;
    Section root(j, "");
    std::optional<ordered_json> h;

    {
        Section t = sub(root, "scenario", h);
        t.get("name", s.name);
        t.require("components", s.n_components);
        t.get("horizon", s.horizon);
        t.get("seed", s.seed);
        t.finish();
    }
    {
        Section t = sub(root, "fatigue", h);
        auto& f = s.fatigue;
        t.get("std_lnK", f.std_lnK);
        t.get("mean_M", f.mean_M);
        t.get("std_M", f.std_M);
        t.get("lnC_slope", f.lnC_slope);
        t.get("lnC_intercept", f.lnC_intercept);
        t.get("weibull_shape", f.weibull_shape);
        t.get("mean_D0", f.mean_D0);
        t.get("critical_depth", f.critical_depth);
        t.get("cycles_per_year", f.cycles_per_year);
        t.finish();
    }
    {
        Section t = sub(root, "correlation", h);
        t.get("rho_D0", s.correlation.rho_D0);
        t.get("rho_K", s.correlation.rho_K);
        t.get("rho_M", s.correlation.rho_M);
        t.finish();
    }
    {
        Section t = sub(root, "sn_curve", h);
        auto& sn = s.sn;
        t.get("weibull_shape", sn.weibull_shape);
        t.get("delta_mean", sn.delta_mean);
        t.get("delta_std", sn.delta_std);
        t.get("log10_a_std", sn.log10_a_std);
        t.get("characteristic_offset", sn.characteristic_offset);
        t.get("stress_cov", sn.stress_cov);
        t.get("design_life", s.design_life);
        std::vector<std::pair<double, double>> curves;
        if (const ordered_json* segs = t.child("segment")) {
            if (!segs->is_array()) throw ConfigError("sn_curve.segment must be an array of tables");
            for (const auto& e : *segs) {
                Section g(e, "sn_curve.segment");
                double m = 0.0, la = 0.0;
                g.require("slope", m);
                g.require("log10_a", la);
                g.finish();
                curves.emplace_back(m, la);
            }
        }
        sn.segments = segments_from_curves(curves);
        t.finish();
    }
    {
        Section t = sub(root, "calibration", h);
        t.get("seed", s.calibration.seed);
        t.get("samples", s.calibration.samples);
        t.get("mean_K_lo", s.calibration.mean_K_lo);
        t.get("mean_K_hi", s.calibration.mean_K_hi);
        t.finish();
    }
    if (const ordered_json* groups = root.child("group")) {
        if (!groups->is_array()) throw ConfigError("group must be an array of tables");
        for (const auto& e : *groups) {
            Section t(e, "group");
            ComponentGroup g;
            t.require("name", g.name);
            t.require("fdf", g.fdf);
            t.get("mean_K", g.mean_K);
            t.require("components", g.components);
            t.get("loss_per_failure", g.loss_per_failure);
            t.finish();
            s.groups.push_back(std::move(g));
        }
    }
    {
        Section t = sub(root, "inspection", h);
        t.get("pod_scale", s.inspection.pod_scale);
        t.get("sigma", s.inspection.sigma);
        t.finish();
    }
    {
        Section t = sub(root, "capacity", h);
        t.get("intact_resistance", s.capacity.intact_resistance);
        std::string mode = "group-count";
        t.get("mode", mode);
        if (mode == "group-count") s.capacity.mode = CapacityModel::Mode::GroupCount;
        else if (mode == "general") s.capacity.mode = CapacityModel::Mode::General;
        else throw ConfigError("key 'mode' in section [capacity] must be \"group-count\" or \"general\"");
        if (const ordered_json* sets = t.child("set")) {
            if (!sets->is_array()) throw ConfigError("capacity.set must be an array of tables");
            for (const auto& e : *sets) {
                Section g(e, "capacity.set");
                CapacitySet cs;
                std::vector<int> failed;
                g.require("failed", failed);
                g.require("fraction", cs.fraction);
                g.finish();
                for (int c : failed) cs.failed.push_back(c - 1);
                s.capacity.sets.push_back(std::move(cs));
            }
        }
        t.finish();
    }
    {
        Section t = sub(root, "load", h);
        t.get("mean", s.load.mean);
        t.get("cov", s.load.cov);
        t.finish();
    }
    {
        Section t = sub(root, "costs", h);
        t.get("c_C", s.costs.c_C);
        t.get("c_I", s.costs.c_I);
        t.get("c_R", s.costs.c_R);
        t.get("c_F", s.costs.c_F);
        t.get("r", s.costs.r);
        t.finish();
    }
    {
        Section t = sub(root, "discretization", h);
        auto& d = s.discretization;
        t.get("crack_bins", d.crack_bins);
        t.get("d_min", d.d_min);
        t.get("crack_boundaries", d.crack_boundaries);
        t.get("k_bins", d.k_bins);
        t.get("m_bins", d.m_bins);
        t.get("alpha_bins_D0", d.alpha_bins_D0);
        t.get("alpha_bins_K", d.alpha_bins_K);
        t.get("alpha_bins_M", d.alpha_bins_M);
        t.finish();
    }
    {
        Section t = sub(root, "system", h);
        t.get("enumeration_limit", s.system.enumeration_limit);
        t.get("monte_carlo_samples", s.system.monte_carlo_samples);
        t.get("monte_carlo_seed", s.system.monte_carlo_seed);
        t.finish();
    }
    {
        Section t = sub(root, "optimizer", h);
        auto& o = s.optimizer;
        t.get("n_ce", o.ce.n_ce);
        t.get("n_elite", o.ce.n_elite);
        t.get("budget", o.ce.n_max);
        t.get("smoothing", o.ce.smoothing);
        t.get("sigma_floor", o.ce.sigma_floor);
        t.get("n_mc", o.n_mc);
        t.get("check_n_mc", o.check_n_mc);
        t.get("surrogate_points", o.minimize.random_points);
        t.get("refine_starts", o.minimize.refine_starts);
        t.get("gp_restarts", o.gp.restarts);
        t.get("gp_max_fit_points", o.gp.max_fit_points);
        t.get("gp_min_noise_std", o.gp.min_noise_std);
        std::optional<ordered_json> hh;
        {
            Section sp = sub(t, "space", hh);
            auto& b = o.ce.space;
            sp.get("dT_min", b.dT_min);
            sp.get("dT_max", b.dT_max);
            sp.get("nI_min", b.nI_min);
            sp.get("nI_max", b.nI_max);
            sp.get("p_th_min", b.p_th_min);
            sp.get("p_th_max", b.p_th_max);
            sp.get("eta_min", b.eta_min);
            sp.get("eta_max", b.eta_max);
            sp.get("d_rep", b.d_rep);
            sp.finish();
        }
        {
            Section in = sub(t, "initial", hh);
            auto& d = o.ce.initial;
            in.get("dT_mean", d.dT_mean);
            in.get("dT_std", d.dT_std);
            in.get("nI_mean", d.nI_mean);
            in.get("nI_std", d.nI_std);
            in.get("ln_pth_mean", d.ln_pth_mean);
            in.get("ln_pth_std", d.ln_pth_std);
            in.get("ln_eta_mean", d.ln_eta_mean);
            in.get("ln_eta_std", d.ln_eta_std);
            in.finish();
        }
        t.finish();
    }
    {
        Section t = sub(root, "adapt", h);
        t.get("eval_n_mc", s.adapt_eval_n_mc);
        t.finish();
    }
    root.finish();
    s.optimizer.ce.seed = s.seed;
    s.optimizer.gp.seed = s.seed;
    s.optimizer.minimize.seed = s.seed;
    s.validate();
    return s;
}

ordered_json scenario_to_json(const Scenario& s)
{
    ordered_json j;
    j["scenario"] = {{"name", s.name}, {"components", s.n_components}, {"horizon", s.horizon}, {"seed", s.seed}};
    const auto& f = s.fatigue;
    j["fatigue"] = {{"std_lnK", f.std_lnK},           {"mean_M", f.mean_M},
                    {"std_M", f.std_M},               {"lnC_slope", f.lnC_slope},
                    {"lnC_intercept", f.lnC_intercept}, {"weibull_shape", f.weibull_shape},
                    {"mean_D0", f.mean_D0},           {"critical_depth", f.critical_depth},
                    {"cycles_per_year", f.cycles_per_year}};
    j["correlation"] = {{"rho_D0", s.correlation.rho_D0}, {"rho_K", s.correlation.rho_K}, {"rho_M", s.correlation.rho_M}};
    ordered_json sn = {{"weibull_shape", s.sn.weibull_shape},
                       {"delta_mean", s.sn.delta_mean},
                       {"delta_std", s.sn.delta_std},
                       {"log10_a_std", s.sn.log10_a_std},
                       {"characteristic_offset", s.sn.characteristic_offset},
                       {"stress_cov", s.sn.stress_cov},
                       {"design_life", s.design_life}};
    sn["segment"] = ordered_json::array();
    for (const auto& seg : s.sn.segments) sn["segment"].push_back({{"slope", seg.slope}, {"log10_a", seg.log10_a}});
    j["sn_curve"] = sn;
    j["calibration"] = {{"seed", s.calibration.seed},
                        {"samples", s.calibration.samples},
                        {"mean_K_lo", s.calibration.mean_K_lo},
                        {"mean_K_hi", s.calibration.mean_K_hi}};
    j["group"] = ordered_json::array();
    for (const auto& g : s.groups) {
        ordered_json e = {{"name", g.name}, {"fdf", g.fdf}};
        if (g.mean_K) e["mean_K"] = *g.mean_K;
        e["components"] = g.components;
        e["loss_per_failure"] = g.loss_per_failure;
        j["group"].push_back(e);
    }
    j["inspection"] = {{"pod_scale", s.inspection.pod_scale}, {"sigma", s.inspection.sigma}};
    ordered_json cap = {{"intact_resistance", s.capacity.intact_resistance},
                        {"mode", s.capacity.mode == CapacityModel::Mode::General ? "general" : "group-count"}};
    cap["set"] = ordered_json::array();
    for (const auto& cs : s.capacity.sets) {
        std::vector<int> failed;
        for (int c : cs.failed) failed.push_back(c + 1);
        cap["set"].push_back({{"failed", failed}, {"fraction", cs.fraction}});
    }
    j["capacity"] = cap;
    j["load"] = {{"mean", s.load.mean}, {"cov", s.load.cov}};
    j["costs"] = {{"c_C", s.costs.c_C}, {"c_I", s.costs.c_I}, {"c_R", s.costs.c_R}, {"c_F", s.costs.c_F}, {"r", s.costs.r}};
    const auto& d = s.discretization;
    ordered_json disc = {{"crack_bins", d.crack_bins}, {"d_min", d.d_min}};
    if (!d.crack_boundaries.empty()) disc["crack_boundaries"] = d.crack_boundaries;
    disc["k_bins"] = d.k_bins;
    disc["m_bins"] = d.m_bins;
    disc["alpha_bins_D0"] = d.alpha_bins_D0;
    disc["alpha_bins_K"] = d.alpha_bins_K;
    disc["alpha_bins_M"] = d.alpha_bins_M;
    j["discretization"] = disc;
    j["system"] = {{"enumeration_limit", s.system.enumeration_limit},
                   {"monte_carlo_samples", s.system.monte_carlo_samples},
                   {"monte_carlo_seed", s.system.monte_carlo_seed}};
    const auto& o = s.optimizer;
    ordered_json opt = {{"n_ce", o.ce.n_ce},
                        {"n_elite", o.ce.n_elite},
                        {"budget", o.ce.n_max},
                        {"smoothing", o.ce.smoothing},
                        {"sigma_floor", o.ce.sigma_floor},
                        {"n_mc", o.n_mc},
                        {"check_n_mc", o.check_n_mc},
                        {"surrogate_points", o.minimize.random_points},
                        {"refine_starts", o.minimize.refine_starts},
                        {"gp_restarts", o.gp.restarts},
                        {"gp_max_fit_points", o.gp.max_fit_points},
                        {"gp_min_noise_std", o.gp.min_noise_std}};
    const auto& b = o.ce.space;
    opt["space"] = {{"dT_min", b.dT_min},       {"dT_max", b.dT_max},     {"nI_min", b.nI_min},
                    {"nI_max", b.nI_max},       {"p_th_min", b.p_th_min}, {"p_th_max", b.p_th_max},
                    {"eta_min", b.eta_min},     {"eta_max", b.eta_max},   {"d_rep", b.d_rep}};
    const auto& in = o.ce.initial;
    opt["initial"] = {{"dT_mean", in.dT_mean},         {"dT_std", in.dT_std},
                      {"nI_mean", in.nI_mean},         {"nI_std", in.nI_std},
                      {"ln_pth_mean", in.ln_pth_mean}, {"ln_pth_std", in.ln_pth_std},
                      {"ln_eta_mean", in.ln_eta_mean}, {"ln_eta_std", in.ln_eta_std}};
    j["optimizer"] = opt;
    j["adapt"] = {{"eval_n_mc", s.adapt_eval_n_mc}};
    return j;
}

Scenario parse_scenario(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') {
        ordered_json j;
        try {
            j = ordered_json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("scenario JSON: ") + e.what());
        }
        return scenario_from_json(j);
    }
    return scenario_from_json(parse_toml(text));
}

Scenario load_scenario(const std::string& path)
{
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_scenario(text);
}

std::string canonical_toml(const Scenario& s) { return write_toml(scenario_to_json(s)); }

std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string scenario_hash(const Scenario& s) { return fnv1a_hex(canonical_toml(s)); }

Scenario calibrate_scenario(const Scenario& s, std::vector<CalibrationResult>* results)
{
    Scenario out = s;
    const FractureMechanicsSample sample(s.fatigue, s.design_life, s.calibration);
    if (results) results->clear();
    for (auto& g : out.groups) {
        CalibrationResult r;
        try {
            r = calibrate_mean_K(g.fdf, sample, s.sn, s.design_life, s.fatigue.cycles_per_year, s.calibration);
        } catch (const NumericalError& e) {
            throw NumericalError("calibration of group '" + g.name + "' failed: " + e.what());
        }
        g.mean_K = r.mean_K;
        if (results) results->push_back(r);
    }
    return out;
}

Problem build_problem(const Scenario& s)
{
    s.validate();
    if (!s.calibrated()) throw ConfigError("scenario has groups without mean_K; run calibrate first");
    std::vector<double> mean_lnK;
    for (const auto& g : s.groups) mean_lnK.push_back(mean_lnK_from_mean_K(*g.mean_K, s.fatigue.std_lnK));

    CapacityModel capacity = s.capacity;
    if (capacity.mode == CapacityModel::Mode::GroupCount) {
        capacity.groups.clear();
        for (const auto& g : s.groups) {
            CapacityGroup cg;
            for (int c : g.components) cg.components.push_back(c - 1);
            for (std::size_t n = 0; n <= g.components.size(); ++n)
                cg.loss.push_back(std::min(1.0, static_cast<double>(n) * g.loss_per_failure));
            capacity.groups.push_back(std::move(cg));
        }
    }

    Problem p;
    p.dbn = std::make_shared<DbnModel>(s.fatigue, s.correlation, s.discretization, s.inspection, mean_lnK,
                                       s.component_groups());
    p.system = std::make_shared<SystemModel>(capacity, s.load, s.n_components, s.system);
    p.sei = p.system->sei_all();
    p.horizon = s.horizon;
    return p;
}

}  // namespace imprs
