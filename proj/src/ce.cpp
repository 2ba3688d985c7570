#include "imprs/ce.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"
#include "imprs/numerics.hpp"
#include "imprs/parallel.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace imprs {
namespace {

struct Marginals {
    std::array<double, 4> mean{};
    std::array<double, 4> std{};
};

std::array<double, 4> coords(const StrategyParams& w)
{
    return {static_cast<double>(w.dT), static_cast<double>(w.n_I), std::log(w.p_th), std::log(std::max(w.eta, 1e-300))};
}

Marginals unpack(const SamplingDistribution& d)
{
    return {{d.dT_mean, d.nI_mean, d.ln_pth_mean, d.ln_eta_mean}, {d.dT_std, d.nI_std, d.ln_pth_std, d.ln_eta_std}};
}

SamplingDistribution pack(const Marginals& m)
{
    SamplingDistribution d;
    d.dT_mean = m.mean[0];
    d.dT_std = m.std[0];
    d.nI_mean = m.mean[1];
    d.nI_std = m.std[1];
    d.ln_pth_mean = m.mean[2];
    d.ln_pth_std = m.std[2];
    d.ln_eta_mean = m.mean[3];
    d.ln_eta_std = m.std[3];
    return d;
}

int rounded_truncated(Rng& rng, double mean, double sd, int lo, int hi)
{
    const double a = lo - 0.5;
    const double b = hi + 0.5;
    const double x = mean + sd * truncated_standard_normal(rng, (a - mean) / sd, (b - mean) / sd);
    return std::clamp(static_cast<int>(std::lround(x)), lo, hi);
}

}  // namespace

void StrategySpace::validate() const
{
    if (dT_min < 1 || dT_max < dT_min) throw ConfigError("optimizer: invalid dT range");
    if (nI_min < 1 || nI_max < nI_min) throw ConfigError("optimizer: invalid n_I range");
    if (!(p_th_min > 0.0) || p_th_max < p_th_min || p_th_max > 1.0) throw ConfigError("optimizer: invalid p_th range");
    if (!(eta_min > 0.0) || eta_max < eta_min) throw ConfigError("optimizer: invalid eta range");
    if (!(d_rep >= 0.0)) throw ConfigError("optimizer: d_rep must be >= 0");
}

StrategyParams SamplingDistribution::sample(Rng& rng, const StrategySpace& space) const
{
    StrategyParams w;
    w.dT = rounded_truncated(rng, dT_mean, dT_std, space.dT_min, space.dT_max);
    w.n_I = rounded_truncated(rng, nI_mean, nI_std, space.nI_min, space.nI_max);
    w.p_th = std::min(space.p_th_max, std::exp(ln_pth_mean + ln_pth_std * standard_normal(rng)));
    w.eta = std::exp(ln_eta_mean + ln_eta_std * standard_normal(rng));
    w.d_rep = space.d_rep;
    return w;
}

SamplingDistribution SamplingDistribution::fit(const std::vector<StrategyParams>& samples, double sigma_floor)
{
    if (samples.empty()) throw std::invalid_argument("cannot fit a sampling distribution to no samples");
    Marginals m;
    const double n = static_cast<double>(samples.size());
    for (std::size_t d = 0; d < 4; ++d) {
        std::vector<double> v;
        for (const auto& w : samples) v.push_back(coords(w)[d]);
        const double mean = pairwise_sum(v) / n;
        for (double& x : v) x = (x - mean) * (x - mean);
        m.mean[d] = mean;
        m.std[d] = std::max(sigma_floor, std::sqrt(pairwise_sum(v) / n));
    }
    return pack(m);
}

double SamplingDistribution::nll(const std::vector<StrategyParams>& samples) const
{
    const Marginals m = unpack(*this);
    double total = 0.0;
    for (const auto& w : samples) {
        const auto c = coords(w);
        for (std::size_t d = 0; d < 4; ++d) {
            const double z = (c[d] - m.mean[d]) / m.std[d];
            total += 0.5 * z * z + std::log(m.std[d]) + 0.5 * std::log(2.0 * std::numbers::pi);
        }
    }
    return total;
}

void CeConfig::validate() const
{
    space.validate();
    if (n_ce < 1 || n_elite < 1 || n_elite > n_ce) throw ConfigError("optimizer: need 1 <= n_elite <= n_ce");
    if (n_max < n_ce) throw ConfigError("optimizer: n_max must be >= n_ce");
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ConfigError("optimizer: smoothing must lie in (0, 1]");
    if (!(sigma_floor > 0.0)) throw ConfigError("optimizer: sigma_floor must be > 0");
}

CeResult ce_optimize(const StrategyObjective& objective, const CeConfig& config)
{
    config.validate();
    CeResult out;
    SamplingDistribution dist = config.initial;
    out.trace.push_back(dist);
    int used = 0;
    for (int it = 0; used < config.n_max; ++it) {
        const int batch = std::min(config.n_ce, config.n_max - used);
        Rng rng = substream(config.seed, "ce-sample", {static_cast<std::uint64_t>(it)});
        std::vector<Evaluation> evals(static_cast<std::size_t>(batch));
        for (auto& e : evals) {
            e.iteration = it;
            e.w = dist.sample(rng, config.space);
        }
        parallel_for(evals.size(), [&](std::size_t i) {
            evals[i].cost = objective(evals[i].w, static_cast<std::uint64_t>(used) + i);
        });
        for (const auto& e : evals)
            if (!std::isfinite(e.cost)) throw NumericalError("objective returned a non-finite cost for " + format_strategy(e.w));
        used += batch;

        std::vector<std::size_t> order(evals.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return evals[a].cost < evals[b].cost; });
        std::vector<StrategyParams> elite;
        for (std::size_t i = 0; i < std::min<std::size_t>(order.size(), static_cast<std::size_t>(config.n_elite)); ++i)
            elite.push_back(evals[order[i]].w);

        const SamplingDistribution mle = SamplingDistribution::fit(elite, config.sigma_floor);
        const Marginals a = unpack(mle);
        const Marginals b = unpack(dist);
        Marginals s;
        for (std::size_t d = 0; d < 4; ++d) {
            s.mean[d] = config.smoothing * a.mean[d] + (1.0 - config.smoothing) * b.mean[d];
            s.std[d] = std::max(config.sigma_floor, config.smoothing * a.std[d] + (1.0 - config.smoothing) * b.std[d]);
        }
        SamplingDistribution next = pack(s);
        if (next.nll(elite) > dist.nll(elite)) next = mle;
        dist = next;
        out.trace.push_back(dist);
        out.samples.insert(out.samples.end(), evals.begin(), evals.end());
    }
    return out;
}

Eigen::VectorXd strategy_features(const StrategyParams& w)
{
    Eigen::VectorXd x(4);
    x << static_cast<double>(w.dT), std::log(w.p_th), static_cast<double>(w.n_I), std::log(std::max(w.eta, 1e-300));
    return x;
}

namespace {

GaussianProcess build_gp(const std::vector<Evaluation>& samples, const GpOptions& options)
{
    if (samples.size() < 10) throw std::invalid_argument("surrogate needs at least 10 samples");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), 4);
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].cost > 0.0)) throw std::invalid_argument("surrogate needs strictly positive costs");
        X.row(static_cast<Eigen::Index>(i)) = strategy_features(samples[i].w).transpose();
        y(static_cast<Eigen::Index>(i)) = std::log(samples[i].cost);
    }
    return GaussianProcess(X, y, options);
}

}  // namespace

StrategySurrogate::StrategySurrogate(const std::vector<Evaluation>& samples, const GpOptions& options)
    : gp_(build_gp(samples, options))
{
}

SurrogatePrediction StrategySurrogate::predict(const StrategyParams& w) const
{
    const Eigen::VectorXd x = strategy_features(w);
    SurrogatePrediction p;
    p.log_mean = gp_.mean(x);
    p.log_std = std::sqrt(gp_.variance(x));
    p.cost = std::exp(p.log_mean);
    p.std_error = p.cost * p.log_std;
    return p;
}

StrategySurrogate fit_surrogate(const std::vector<Evaluation>& samples, const GpOptions& options)
{
    return StrategySurrogate(samples, options);
}

SurrogateMinimum minimize_surrogate(const StrategySurrogate& model, const StrategySpace& box, const MinimizeOptions& options)
{
    box.validate();
    const GaussianProcess& gp = model.gp();
    Eigen::VectorXd lo(4), hi(4);
    lo << box.dT_min, std::log(box.p_th_min), box.nI_min, std::log(box.eta_min);
    hi << box.dT_max, std::log(box.p_th_max), box.nI_max, std::log(box.eta_max);
    const Eigen::VectorXd width = hi - lo;
    auto to_x = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return lo + u.cwiseProduct(width); };

    Rng rng = substream(options.seed, "surrogate-min");
    const int n = std::max(1, options.random_points);
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> val;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd u(4);
        for (int d = 0; d < 4; ++d) u(d) = uniform01(rng);
        val.push_back(gp.mean(to_x(u)));
        pts.push_back(std::move(u));
    }
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });

    Eigen::VectorXd best_u = pts[order[0]];
    double best = val[order[0]];
    const std::size_t starts = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(1, options.refine_starts)));
    for (std::size_t s = 0; s < starts; ++s) {
        Eigen::VectorXd u = pts[order[s]];
        double f = val[order[s]];
        double step = 0.1;
        for (int it = 0; it < 200 && step > 1e-7; ++it) {
            const Eigen::VectorXd g = gp.mean_gradient(to_x(u)).cwiseProduct(width);
            const double gn = g.lpNorm<Eigen::Infinity>();
            if (!(gn > 0.0)) break;
            const Eigen::VectorXd trial = (u - step * g / gn).cwiseMax(0.0).cwiseMin(1.0);
            const double ft = gp.mean(to_x(trial));
            if (ft < f) {
                u = trial;
                f = ft;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        if (f < best) {
            best = f;
            best_u = u;
        }
    }

    const Eigen::VectorXd x = to_x(best_u);
    SurrogateMinimum out;
    out.w.dT = std::clamp(static_cast<int>(std::lround(x(0))), box.dT_min, box.dT_max);
    out.w.p_th = std::clamp(std::exp(x(1)), box.p_th_min, box.p_th_max);
    out.w.n_I = std::clamp(static_cast<int>(std::lround(x(2))), box.nI_min, box.nI_max);
    out.w.eta = std::clamp(std::exp(x(3)), box.eta_min, box.eta_max);
    out.w.d_rep = box.d_rep;
    out.prediction = model.predict(out.w);
    return out;
}

StrategySpace sampled_box(const std::vector<Evaluation>& samples, const StrategySpace& space)
{
    if (samples.empty()) return space;
    StrategySpace b = space;
    b.dT_min = b.nI_min = std::numeric_limits<int>::max();
    b.dT_max = b.nI_max = std::numeric_limits<int>::min();
    b.p_th_min = b.eta_min = std::numeric_limits<double>::infinity();
    b.p_th_max = b.eta_max = 0.0;
    for (const auto& e : samples) {
        b.dT_min = std::min(b.dT_min, e.w.dT);
        b.dT_max = std::max(b.dT_max, e.w.dT);
        b.nI_min = std::min(b.nI_min, e.w.n_I);
        b.nI_max = std::max(b.nI_max, e.w.n_I);
        b.p_th_min = std::min(b.p_th_min, e.w.p_th);
        b.p_th_max = std::max(b.p_th_max, e.w.p_th);
        b.eta_min = std::min(b.eta_min, e.w.eta);
        b.eta_max = std::max(b.eta_max, e.w.eta);
    }
    b.dT_min = std::max(b.dT_min, space.dT_min);
    b.dT_max = std::min(b.dT_max, space.dT_max);
    b.nI_min = std::max(b.nI_min, space.nI_min);
    b.nI_max = std::min(b.nI_max, space.nI_max);
    b.p_th_min = std::clamp(b.p_th_min, space.p_th_min, space.p_th_max);
    b.p_th_max = std::clamp(b.p_th_max, b.p_th_min, space.p_th_max);
    b.eta_min = std::clamp(b.eta_min, space.eta_min, space.eta_max);
    b.eta_max = std::clamp(b.eta_max, b.eta_min, space.eta_max);
    return b;
}

StrategySpace search_box(const CeResult& result, const StrategySpace& space, double n_std)
{
    StrategySpace b = sampled_box(result.samples, space);
    if (result.trace.empty()) return b;
    const SamplingDistribution& d = result.trace.back();
    auto narrow_int = [n_std](int& lo, int& hi, double mean, double sd) {
        const int a = static_cast<int>(std::floor(mean - n_std * sd));
        const int c = static_cast<int>(std::ceil(mean + n_std * sd));
        const int new_lo = std::clamp(a, lo, hi);
        hi = std::clamp(c, new_lo, hi);
        lo = new_lo;
    };
    auto narrow_log = [n_std](double& lo, double& hi, double mean, double sd) {
        const double new_lo = std::clamp(std::exp(mean - n_std * sd), lo, hi);
        hi = std::clamp(std::exp(mean + n_std * sd), new_lo, hi);
        lo = new_lo;
    };
    narrow_int(b.dT_min, b.dT_max, d.dT_mean, d.dT_std);
    narrow_int(b.nI_min, b.nI_max, d.nI_mean, d.nI_std);
    narrow_log(b.p_th_min, b.p_th_max, d.ln_pth_mean, d.ln_pth_std);
    narrow_log(b.eta_min, b.eta_max, d.ln_eta_mean, d.ln_eta_std);
    return b;
}

void write_trace_csv(std::ostream& out, const CeResult& result)
{
    CsvWriter csv(out);
    csv.header({"evaluation", "iteration", "dT", "p_th", "n_I", "eta", "d_rep", "cost"});
    for (std::size_t i = 0; i < result.samples.size(); ++i) {
        const auto& e = result.samples[i];
        csv.cell(i).cell(e.iteration).cell(e.w.dT).cell(e.w.p_th).cell(e.w.n_I).cell(e.w.eta).cell(e.w.d_rep).cell(e.cost);
        csv.end_row();
    }
}

}  // namespace imprs
