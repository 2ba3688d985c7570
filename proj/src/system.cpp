#include "imprs/system.hpp"

#include "imprs/errors.hpp"
#include "imprs/numerics.hpp"
#include "imprs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace imprs {
namespace {

// Distribution of the number of failures among independent components.
std::vector<double> poisson_binomial(const std::vector<double>& pf, const std::vector<int>& members)
{
    std::vector<double> dist(members.size() + 1, 0.0);
    dist[0] = 1.0;
    std::size_t n = 0;
    for (int k : members) {
        const double p = pf[static_cast<std::size_t>(k)];
        ++n;
        for (std::size_t c = n; c > 0; --c) dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
        dist[0] *= 1.0 - p;
    }
    return dist;
}

}  // namespace

void LoadModel::validate() const
{
    if (!(mean > 0.0)) throw ConfigError("load.mean must be > 0");
    if (!(cov > 0.0)) throw ConfigError("load.cov must be > 0");
}

double LoadModel::exceedance(double r) const
{
    if (r <= 0.0) return 1.0;
    const auto ln = lognormal_from_moments(mean, mean * cov);
    return normal_sf((std::log(r) - ln.mu) / ln.sigma);
}

void CapacityModel::validate(int n_components) const
{
    if (!(intact_resistance > 0.0)) throw ConfigError("capacity.intact_resistance must be > 0");
    auto check_component = [&](int k, const std::string& where) {
        if (k < 0 || k >= n_components)
            throw ConfigError(where + ": component " + std::to_string(k + 1) + " out of range 1.." +
                              std::to_string(n_components));
    };
    if (mode == Mode::GroupCount) {
        std::vector<int> seen(static_cast<std::size_t>(n_components), 0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const std::string where = "capacity.groups[" + std::to_string(g) + "]";
            const auto& grp = groups[g];
            if (grp.components.empty()) throw ConfigError(where + ": empty component list");
            for (int k : grp.components) {
                check_component(k, where);
                if (seen[static_cast<std::size_t>(k)]++)
                    throw ConfigError(where + ": component " + std::to_string(k + 1) + " listed in two groups");
            }
            if (grp.loss.empty() || grp.loss.front() != 0.0) throw ConfigError(where + ": loss must start with 0");
            for (std::size_t i = 1; i < grp.loss.size(); ++i)
                if (grp.loss[i] < grp.loss[i - 1]) throw ConfigError(where + ": loss must be nondecreasing");
        }
    } else {
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const std::string where = "capacity.sets[" + std::to_string(s) + "]";
            if (sets[s].failed.empty()) throw ConfigError(where + ": empty failed set");
            for (int k : sets[s].failed) check_component(k, where);
            if (!(sets[s].fraction >= 0.0 && sets[s].fraction <= 1.0))
                throw ConfigError(where + ": fraction must lie in [0, 1]");
        }
    }
}

double CapacityModel::fraction(const std::vector<std::uint8_t>& failed) const
{
    if (mode == Mode::GroupCount) {
        double lost = 0.0;
        for (const auto& g : groups) {
            std::size_t n = 0;
            for (int k : g.components) n += failed[static_cast<std::size_t>(k)] ? 1 : 0;
            lost += g.loss[std::min(n, g.loss.size() - 1)];
        }
        return std::clamp(1.0 - lost, 0.0, 1.0);
    }
    double f = 1.0;
    for (const auto& s : sets)
        if (std::all_of(s.failed.begin(), s.failed.end(), [&](int k) { return failed[static_cast<std::size_t>(k)] != 0; }))
            f = std::min(f, s.fraction);
    return f;
}

SystemModel::SystemModel(CapacityModel capacity, LoadModel load, int n_components, SystemOptions options)
    : capacity_(std::move(capacity)), load_(load), n_(n_components), options_(options)
{
    load_.validate();
    capacity_.validate(n_);
    std::vector<std::uint8_t> failed(static_cast<std::size_t>(n_), 0);
    if (capacity_.mode == CapacityModel::Mode::GroupCount) {
        std::size_t total = 1;
        for (const auto& g : capacity_.groups) {
            group_size_.push_back(static_cast<int>(g.components.size()));
            stride_.push_back(total);
            total *= g.components.size() + 1;
        }
        exceed_.resize(total);
        for (std::size_t idx = 0; idx < total; ++idx) {
            double lost = 0.0;
            for (std::size_t g = 0; g < group_size_.size(); ++g) {
                const std::size_t count = (idx / stride_[g]) % (static_cast<std::size_t>(group_size_[g]) + 1);
                const auto& loss = capacity_.groups[g].loss;
                lost += loss[std::min(count, loss.size() - 1)];
            }
            exceed_[idx] = load_.exceedance(capacity_.intact_resistance * std::clamp(1.0 - lost, 0.0, 1.0));
        }
    } else if (n_ <= options_.enumeration_limit) {
        const std::size_t total = std::size_t{1} << n_;
        exceed_.resize(total);
        for (std::size_t mask = 0; mask < total; ++mask) {
            for (int k = 0; k < n_; ++k) failed[static_cast<std::size_t>(k)] = (mask >> k) & 1U;
            exceed_[mask] = failure_given(failed);
        }
    }
}

double SystemModel::failure_given(const std::vector<std::uint8_t>& failed) const
{
    return load_.exceedance(capacity_.resistance(failed));
}

double SystemModel::conditional(const std::vector<double>& pf, std::uint64_t stream) const
{
    if (capacity_.mode == CapacityModel::Mode::GroupCount) {
        std::vector<std::vector<double>> dists;
        for (const auto& g : capacity_.groups) dists.push_back(poisson_binomial(pf, g.components));
        // Sum over all count vectors, skipping zero-probability branches.
        const std::size_t G = dists.size();
        std::function<double(std::size_t, std::size_t, double)> walk = [&](std::size_t g, std::size_t idx, double w) {
            if (g == G) return w * exceed_[idx];
            double s = 0.0;
            for (std::size_t c = 0; c < dists[g].size(); ++c) {
                const double p = dists[g][c];
                if (p == 0.0) continue;
                s += walk(g + 1, idx + c * stride_[g], w * p);
            }
            return s;
        };
        return walk(0, 0, 1.0);
    }
    if (n_ <= options_.enumeration_limit) {
        std::function<double(int, std::size_t, double)> walk = [&](int k, std::size_t mask, double w) {
            if (k == n_) return w * exceed_[mask];
            const double p = pf[static_cast<std::size_t>(k)];
            double s = 0.0;
            if (p < 1.0) s += walk(k + 1, mask, w * (1.0 - p));
            if (p > 0.0) s += walk(k + 1, mask | (std::size_t{1} << k), w * p);
            return s;
        };
        return walk(0, 0, 1.0);
    }
    Rng rng = substream(options_.monte_carlo_seed, "capacity-mc", {stream});
    std::vector<std::uint8_t> failed(static_cast<std::size_t>(n_));
    std::vector<double> values(static_cast<std::size_t>(options_.monte_carlo_samples));
    for (auto& v : values) {
        for (int k = 0; k < n_; ++k) failed[static_cast<std::size_t>(k)] = uniform01(rng) < pf[static_cast<std::size_t>(k)];
        v = failure_given(failed);
    }
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double SystemModel::interval_failure_prob(const BeliefState& belief) const
{
    if (belief.n_components() != n_) throw std::invalid_argument("belief and system differ in component count");
    const auto& w = belief.alpha_weights();
    std::vector<double> pf(static_cast<std::size_t>(n_));
    double total = 0.0;
    for (std::size_t a = 0; a < w.size(); ++a) {
        if (w[a] == 0.0) continue;
        for (int k = 0; k < n_; ++k) pf[static_cast<std::size_t>(k)] = belief.component(k).failed[a];
        total += w[a] * conditional(pf, a);
    }
    return std::clamp(total, 0.0, 1.0);
}

double SystemModel::interval_failure_prob(const std::vector<double>& component_pf) const
{
    if (static_cast<int>(component_pf.size()) != n_) throw std::invalid_argument("component count mismatch");
    return std::clamp(conditional(component_pf, 0), 0.0, 1.0);
}

double SystemModel::sei(int k) const
{
    std::vector<std::uint8_t> failed(static_cast<std::size_t>(n_), 0);
    const double intact = failure_given(failed);
    failed[static_cast<std::size_t>(k)] = 1;
    return failure_given(failed) - intact;
}

std::vector<double> SystemModel::sei_all() const
{
    std::vector<double> out;
    for (int k = 0; k < n_; ++k) out.push_back(sei(k));
    return out;
}

CumulativeFailure cumulative_failure(const std::vector<double>& interval_probs)
{
    CumulativeFailure out;
    double survive = 1.0;
    double prev = 0.0;
    for (double p : interval_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("interval probabilities must lie in [0, 1]");
        survive *= 1.0 - p;
        const double cdf = 1.0 - survive;
        out.cdf.push_back(cdf);
        out.annual.push_back(cdf - prev);
        prev = cdf;
    }
    return out;
}

}  // namespace imprs
