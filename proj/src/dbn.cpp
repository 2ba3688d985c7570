#include "imprs/dbn.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"
#include "imprs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace imprs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Phi(hi) - Phi(lo) without cancellation in the upper tail.
double normal_mass(double lo, double hi)
{
    if (lo > 0.0) return normal_sf(lo) - normal_sf(hi);
    return normal_cdf(hi) - normal_cdf(lo);
}

void normalize(std::vector<double>& v)
{
    const double s = pairwise_sum(v);
    for (double& x : v) x /= s;
}

double equicorrelated(double mean, double sd, double rho, double alpha, double eps)
{
    return mean + sd * (std::sqrt(rho) * alpha + std::sqrt(1.0 - rho) * eps);
}

std::pair<double, double> normal_bin_bounds(int bin, int n)
{
    return {normal_quantile(static_cast<double>(bin) / n), normal_quantile(static_cast<double>(bin + 1) / n)};
}

std::string describe(const Outcome& o)
{
    if (o.kind == Outcome::Kind::NoDetection) return "no detection";
    return "measurement " + format_double(o.value) + " mm";
}

}  // namespace

void DiscretizationConfig::validate() const
{
    if (crack_boundaries.empty()) {
        if (crack_bins < 2) throw ConfigError("discretization.crack_bins must be >= 2");
        if (!(d_min > 0.0)) throw ConfigError("discretization.d_min must be > 0");
    }
    for (int n : {k_bins, m_bins, alpha_bins_D0, alpha_bins_K, alpha_bins_M})
        if (n < 1) throw ConfigError("discretization bin counts must be >= 1");
}

CrackGrid::CrackGrid(const DiscretizationConfig& config, double critical_depth)
{
    config.validate();
    if (!config.crack_boundaries.empty()) {
        bounds_ = config.crack_boundaries;
        if (bounds_.size() < 2 || bounds_.front() != 0.0)
            throw ConfigError("discretization.crack_boundaries must start at 0 and contain at least two values");
        for (std::size_t i = 1; i < bounds_.size(); ++i)
            if (!(bounds_[i] > bounds_[i - 1]))
                throw ConfigError("discretization.crack_boundaries must be strictly increasing");
        if (std::abs(bounds_.back() - critical_depth) > 1e-12 * critical_depth)
            throw ConfigError("discretization.crack_boundaries must end at the critical depth");
        bounds_.back() = critical_depth;
        return;
    }
    if (!(config.d_min < critical_depth)) throw ConfigError("discretization.d_min must be below the critical depth");
    const int n = config.crack_bins;
    bounds_.resize(static_cast<std::size_t>(n) + 1);
    bounds_[0] = 0.0;
    const double ratio = std::log(critical_depth / config.d_min);
    for (int i = 1; i < n; ++i)
        bounds_[static_cast<std::size_t>(i)] = config.d_min * std::exp(ratio * (i - 1) / (n - 1));
    bounds_[static_cast<std::size_t>(n)] = critical_depth;
}

double CrackGrid::upper(int bin) const
{
    return bin < failed() ? bounds_[static_cast<std::size_t>(bin) + 1] : kInf;
}

int CrackGrid::bin_of(double d) const
{
    if (!(d < critical_depth())) return failed();
    if (d <= 0.0) return 0;
    return static_cast<int>(std::upper_bound(bounds_.begin(), bounds_.end(), d) - bounds_.begin()) - 1;
}

double CrackGrid::cdf_within(int bin, double x) const
{
    const double lo = lower(bin);
    const double hi = upper(bin);
    if (bin == failed()) return x >= lo ? 1.0 : 0.0;
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    if (lo == 0.0) return x / hi;
    return std::log(x / lo) / std::log(hi / lo);
}

double CrackGrid::quantile_within(int bin, double u) const
{
    if (bin == failed()) return critical_depth();
    const double lo = lower(bin);
    const double hi = upper(bin);
    const double x = lo == 0.0 ? u * hi : lo * std::pow(hi / lo, u);
    return std::clamp(x, lo, std::nextafter(hi, 0.0));
}

double CrackGrid::average(int bin, const std::function<double(double)>& f, double resolution) const
{
    if (bin == failed()) return f(critical_depth());
    const double lo = lower(bin);
    const double hi = upper(bin);
    const int pieces = std::clamp(static_cast<int>(std::ceil((hi - lo) / resolution)), 1, 64);
    const auto& q = gauss_legendre(8);
    const bool linear = lo == 0.0;
    const double a = linear ? 0.0 : std::log(lo);
    const double b = linear ? hi : std::log(hi);
    const double h = (b - a) / pieces;
    double total = 0.0;
    for (int piece = 0; piece < pieces; ++piece) {
        const double mid = a + h * (piece + 0.5);
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            const double t = mid + 0.5 * h * q.nodes[i];
            total += q.weights[i] * f(linear ? t : std::exp(t));
        }
    }
    return total * 0.5 / pieces;
}

void ComponentState::refresh_failed(int cells, int block, int nD)
{
    failed.assign(static_cast<std::size_t>(cells), 0.0);
    const int sub = block / nD;
    for (int a = 0; a < cells; ++a) {
        double s = 0.0;
        for (int j = 0; j < sub; ++j) s += p[static_cast<std::size_t>(a * block + j * nD + nD - 1)];
        failed[static_cast<std::size_t>(a)] = s;
    }
}

DbnModel::DbnModel(const FatigueParams& fatigue, const CorrelationParams& correlation,
                   const DiscretizationConfig& disc, const InspectionModel& inspection,
                   std::vector<double> group_mean_lnK, std::vector<int> component_group)
    : fatigue_(fatigue),
      corr_(correlation),
      inspection_(inspection),
      grid_(disc, fatigue.critical_depth),
      group_mean_lnK_(std::move(group_mean_lnK)),
      component_group_(std::move(component_group)),
      nK_(disc.k_bins),
      nM_(disc.m_bins),
      nA_{disc.alpha_bins_D0, disc.alpha_bins_K, disc.alpha_bins_M}
{
    fatigue_.validate();
    corr_.validate();
    inspection_.validate();
    if (group_mean_lnK_.empty()) throw ConfigError("at least one component group is required");
    if (component_group_.empty()) throw ConfigError("at least one component is required");
    for (int g : component_group_)
        if (g < 0 || g >= n_groups()) throw ConfigError("component group index out of range");
    if (grid_.size() > 65535) throw ConfigError("too many crack bins");

    for (int d = 0; d < 3; ++d) alpha_reps_[static_cast<std::size_t>(d)] = equal_probability_normal_bins(nA_[static_cast<std::size_t>(d)]);
    epsK_reps_ = equal_probability_normal_bins(nK_);
    epsM_reps_ = equal_probability_normal_bins(nM_);
    for (int aM = 0; aM < nA_[2]; ++aM)
        for (int iM = 0; iM < nM_; ++iM)
            if (!(M_value(aM, iM) > 0.0)) throw ConfigError("discretized M values must be > 0; reduce fatigue.std_M");

    // Initial depth: exponential marginal through a Gaussian copula on alpha_D0.
    const int n = grid_.failed();
    const double mu = fatigue_.mean_D0;
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) z[static_cast<std::size_t>(i)] = -normal_quantile(std::exp(-grid_.lower(i) / mu));
    d0_marginal_.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i)
        d0_marginal_[static_cast<std::size_t>(i)] = std::exp(-grid_.lower(i) / mu) - std::exp(-grid_.upper(i) / mu);
    d0_marginal_[static_cast<std::size_t>(n)] = std::exp(-grid_.critical_depth() / mu);
    normalize(d0_marginal_);

    const double rho = corr_.rho_D0;
    const double s = std::sqrt(1.0 - rho);
    for (double alpha : alpha_reps_[0]) {
        std::vector<double> p(static_cast<std::size_t>(n) + 1);
        const double c = std::sqrt(rho) * alpha;
        for (int i = 0; i <= n; ++i) {
            const double lo = z[static_cast<std::size_t>(i)];
            const double hi = i < n ? z[static_cast<std::size_t>(i) + 1] : kInf;
            if (s < 1e-12)
                p[static_cast<std::size_t>(i)] = (c >= lo && c < hi) ? 1.0 : 0.0;
            else
                p[static_cast<std::size_t>(i)] = normal_mass((lo - c) / s, (hi - c) / s);
        }
        normalize(p);
        d0_cond_.push_back(std::move(p));
    }

    no_detection_ = likelihood({Outcome::Kind::NoDetection, 0.0});
    build_kernels();
}

std::array<int, 3> DbnModel::cell_coords(int cell) const
{
    const int aM = cell % nA_[2];
    const int rest = cell / nA_[2];
    return {rest / nA_[1], rest % nA_[1], aM};
}

double DbnModel::lnK_value(int group, int aK, int iK) const
{
    return equicorrelated(group_mean_lnK(group), fatigue_.std_lnK, corr_.rho_K,
                          alpha_reps_[1][static_cast<std::size_t>(aK)], epsK_reps_[static_cast<std::size_t>(iK)]);
}

double DbnModel::M_value(int aM, int iM) const
{
    return equicorrelated(fatigue_.mean_M, fatigue_.std_M, corr_.rho_M, alpha_reps_[2][static_cast<std::size_t>(aM)],
                          epsM_reps_[static_cast<std::size_t>(iM)]);
}

const SparseKernel& DbnModel::kernel(int group, int aK, int iK, int aM, int iM) const
{
    const std::size_t idx =
        static_cast<std::size_t>((((group * nA_[1] + aK) * nK_ + iK) * nA_[2] + aM) * nM_ + iM);
    return kernels_[idx];
}

void DbnModel::build_kernels()
{
    const int nD = grid_.size();
    const int n = grid_.failed();
    kernels_.resize(static_cast<std::size_t>(n_groups() * nA_[1] * nK_ * nA_[2] * nM_));
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    std::vector<double> mass(static_cast<std::size_t>(nD));
    for (int g = 0; g < n_groups(); ++g)
        for (int aK = 0; aK < nA_[1]; ++aK)
            for (int iK = 0; iK < nK_; ++iK)
                for (int aM = 0; aM < nA_[2]; ++aM)
                    for (int iM = 0; iM < nM_; ++iM) {
                        const ParisMap step(lnK_value(g, aK, iK), M_value(aM, iM), fatigue_, 1.0);
                        for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = step.inverse(grid_.lower(i));
                        auto& ker = kernels_[static_cast<std::size_t>(
                            (((g * nA_[1] + aK) * nK_ + iK) * nA_[2] + aM) * nM_ + iM)];
                        ker.offset.assign(1, 0);
                        ker.first.clear();
                        ker.weight.clear();
                        for (int j = 0; j < nD; ++j) {
                            if (j == n) {
                                mass.assign(static_cast<std::size_t>(nD), 0.0);
                                mass[static_cast<std::size_t>(n)] = 1.0;
                            } else {
                                double prev = 0.0;
                                for (int i = 0; i < n; ++i) {
                                    const double c = grid_.cdf_within(j, x[static_cast<std::size_t>(i) + 1]);
                                    mass[static_cast<std::size_t>(i)] = std::max(0.0, c - prev);
                                    prev = c;
                                }
                                mass[static_cast<std::size_t>(n)] = std::max(0.0, 1.0 - prev);
                            }
                            int lo = 0;
                            while (mass[static_cast<std::size_t>(lo)] == 0.0) ++lo;
                            int hi = nD - 1;
                            while (mass[static_cast<std::size_t>(hi)] == 0.0) --hi;
                            ker.first.push_back(static_cast<std::uint16_t>(lo));
                            for (int i = lo; i <= hi; ++i) ker.weight.push_back(mass[static_cast<std::size_t>(i)]);
                            ker.offset.push_back(static_cast<std::uint32_t>(ker.weight.size()));
                        }
                    }
}

std::vector<double> DbnModel::likelihood(const Outcome& outcome) const
{
    const int nD = grid_.size();
    if (outcome.kind == Outcome::Kind::NoDetection && !no_detection_.empty()) return no_detection_;
    std::vector<double> L(static_cast<std::size_t>(nD), 1.0);
    if (!outcome.inspected()) return L;
    const double resolution =
        outcome.kind == Outcome::Kind::Measured ? 0.5 * inspection_.sigma : 0.25 * inspection_.pod_scale;
    for (int d = 0; d < nD; ++d)
        L[static_cast<std::size_t>(d)] =
            grid_.average(d, [&](double depth) { return outcome_likelihood(outcome, depth, inspection_); }, resolution);
    return L;
}

BeliefState DbnModel::prior(int year) const
{
    const int nD = grid_.size();
    const int sub = nK_ * nM_;
    const std::vector<double> alpha(static_cast<std::size_t>(cells()), 1.0 / cells());
    std::vector<std::shared_ptr<const ComponentState>> per_group;
    for (int g = 0; g < n_groups(); ++g) {
        auto st = std::make_shared<ComponentState>();
        st->group = g;
        st->p.resize(static_cast<std::size_t>(cells()) * static_cast<std::size_t>(block()));
        for (int a = 0; a < cells(); ++a) {
            const auto& d0 = d0_cond_[static_cast<std::size_t>(cell_coords(a)[0])];
            for (int j = 0; j < sub; ++j)
                for (int d = 0; d < nD; ++d)
                    st->p[static_cast<std::size_t>((a * sub + j) * nD + d)] = d0[static_cast<std::size_t>(d)] / sub;
        }
        st->refresh_failed(cells(), block(), nD);
        per_group.push_back(std::move(st));
    }
    std::vector<std::shared_ptr<const ComponentState>> comps;
    for (int g : component_group_) comps.push_back(per_group[static_cast<std::size_t>(g)]);
    return BeliefState(shared_from_this(), year, alpha, std::move(comps));
}

GroundTruth DbnModel::sample_prior_truth(Rng& rng) const
{
    GroundTruth t;
    for (double& a : t.alpha) a = standard_normal(rng);
    const double mu = fatigue_.mean_D0;
    for (int k = 0; k < n_components(); ++k) {
        const double eD = standard_normal(rng);
        const double eK = standard_normal(rng);
        const double eM = standard_normal(rng);
        ComponentTruth c;
        c.depth = -mu * std::log(normal_sf(equicorrelated(0.0, 1.0, corr_.rho_D0, t.alpha[0], eD)));
        c.lnK = equicorrelated(group_mean_lnK(group_of(k)), fatigue_.std_lnK, corr_.rho_K, t.alpha[1], eK);
        c.M = equicorrelated(fatigue_.mean_M, fatigue_.std_M, corr_.rho_M, t.alpha[2], eM);
        c.failed = !(c.depth < fatigue_.critical_depth);
        if (c.failed) c.depth = fatigue_.critical_depth;
        t.components.push_back(c);
    }
    return t;
}

void DbnModel::grow_truth(GroundTruth& truth) const
{
    for (auto& c : truth.components) {
        if (c.failed) continue;
        const double d = ParisMap(c.lnK, c.M, fatigue_, 1.0).forward(c.depth);
        if (d < fatigue_.critical_depth) {
            c.depth = d;
        } else {
            c.failed = true;
            c.depth = fatigue_.critical_depth;
        }
    }
}

void DbnModel::repair_truth(ComponentTruth& c, Rng& rng) const
{
    c.depth = -fatigue_.mean_D0 * std::log(uniform01(rng));
    c.failed = !(c.depth < fatigue_.critical_depth);
    if (c.failed) c.depth = fatigue_.critical_depth;
}

double DbnModel::observable_depth(const ComponentTruth& c) const
{
    return c.failed ? fatigue_.critical_depth : c.depth;
}

BeliefState::BeliefState(std::shared_ptr<const DbnModel> model, int year, std::vector<double> alpha,
                         std::vector<std::shared_ptr<const ComponentState>> components)
    : model_(std::move(model)), year_(year), alpha_(std::move(alpha)), components_(std::move(components))
{
}

void BeliefState::replace_component(int k, std::shared_ptr<const ComponentState> state)
{
    components_[static_cast<std::size_t>(k)] = std::move(state);
}

void BeliefState::predict()
{
    const DbnModel& m = *model_;
    const int nD = m.nD();
    const int nK = m.nK();
    const int nM = m.nM();
    std::map<const ComponentState*, std::shared_ptr<const ComponentState>> done;
    for (auto& comp : components_) {
        auto it = done.find(comp.get());
        if (it != done.end()) {
            comp = it->second;
            continue;
        }
        auto next = std::make_shared<ComponentState>();
        next->group = comp->group;
        next->p.assign(comp->p.size(), 0.0);
        for (int a = 0; a < m.cells(); ++a) {
            const auto [a0, aK, aM] = m.cell_coords(a);
            (void)a0;
            for (int iK = 0; iK < nK; ++iK)
                for (int iM = 0; iM < nM; ++iM) {
                    const SparseKernel& ker = m.kernel(comp->group, aK, iK, aM, iM);
                    const std::size_t base = static_cast<std::size_t>(((a * nK + iK) * nM + iM) * nD);
                    const double* src = comp->p.data() + base;
                    double* dst = next->p.data() + base;
                    for (int d = 0; d < nD; ++d) {
                        const double v = src[d];
                        if (v == 0.0) continue;
                        const double* w = ker.weight.data() + ker.offset[static_cast<std::size_t>(d)];
                        const int len = static_cast<int>(ker.offset[static_cast<std::size_t>(d) + 1] -
                                                         ker.offset[static_cast<std::size_t>(d)]);
                        double* out = dst + ker.first[static_cast<std::size_t>(d)];
                        for (int t = 0; t < len; ++t) out[t] += v * w[t];
                    }
                }
        }
        next->refresh_failed(m.cells(), m.block(), nD);
        done.emplace(comp.get(), next);
        comp = std::move(next);
    }
    ++year_;
}

void BeliefState::update(const std::vector<Outcome>& outcomes)
{
    const DbnModel& m = *model_;
    if (outcomes.size() != components_.size()) throw std::invalid_argument("outcome count does not match components");
    const int nD = m.nD();
    const int block = m.block();
    const int cells = m.cells();

    using Key = std::tuple<const ComponentState*, Outcome::Kind, double>;
    std::map<Key, std::pair<std::shared_ptr<const ComponentState>, std::vector<double>>> done;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const Outcome& o = outcomes[k];
        if (!o.inspected()) continue;
        const Key key{components_[k].get(), o.kind, o.value};
        auto it = done.find(key);
        if (it == done.end()) {
            const auto L = m.likelihood(o);
            const auto& src = components_[k]->p;
            auto next = std::make_shared<ComponentState>();
            next->group = components_[k]->group;
            next->p.resize(src.size());
            std::vector<double> evidence(static_cast<std::size_t>(cells));
            for (int a = 0; a < cells; ++a) {
                const std::size_t base = static_cast<std::size_t>(a) * static_cast<std::size_t>(block);
                double e = 0.0;
                for (int j = 0; j < block; ++j) {
                    const double v = src[base + static_cast<std::size_t>(j)] * L[static_cast<std::size_t>(j % nD)];
                    next->p[base + static_cast<std::size_t>(j)] = v;
                    e += v;
                }
                evidence[static_cast<std::size_t>(a)] = e;
                if (e > 0.0) {
                    for (int j = 0; j < block; ++j) next->p[base + static_cast<std::size_t>(j)] /= e;
                } else {
                    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(base), block,
                                next->p.begin() + static_cast<std::ptrdiff_t>(base));
                }
            }
            next->refresh_failed(cells, block, nD);
            it = done.emplace(key, std::make_pair(std::shared_ptr<const ComponentState>(std::move(next)),
                                                  std::move(evidence)))
                     .first;
        }
        const auto& evidence = it->second.second;
        double total = 0.0;
        for (int a = 0; a < cells; ++a) {
            alpha_[static_cast<std::size_t>(a)] *= evidence[static_cast<std::size_t>(a)];
            total += alpha_[static_cast<std::size_t>(a)];
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            std::ostringstream msg;
            msg << "year " << year_ << ": " << describe(o) << " on component " << k + 1
                << " has zero probability under the discretized model (crack bin "
                << (o.kind == Outcome::Kind::Measured ? m.grid().bin_of(o.value) : 0) << ")";
            throw NumericalError(msg.str());
        }
        for (double& w : alpha_) w /= total;
        components_[k] = it->second.first;
    }
}

void BeliefState::apply_repairs(const std::vector<std::uint8_t>& repaired)
{
    const DbnModel& m = *model_;
    if (repaired.size() != components_.size()) throw std::invalid_argument("repair count does not match components");
    const int nD = m.nD();
    const auto& p0 = m.d0_marginal();
    std::map<const ComponentState*, std::shared_ptr<const ComponentState>> done;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        if (!repaired[k]) continue;
        auto it = done.find(components_[k].get());
        if (it == done.end()) {
            const auto& src = components_[k]->p;
            auto next = std::make_shared<ComponentState>();
            next->group = components_[k]->group;
            next->p.resize(src.size());
            for (std::size_t base = 0; base < src.size(); base += static_cast<std::size_t>(nD)) {
                double s = 0.0;
                for (int d = 0; d < nD; ++d) s += src[base + static_cast<std::size_t>(d)];
                for (int d = 0; d < nD; ++d) next->p[base + static_cast<std::size_t>(d)] = s * p0[static_cast<std::size_t>(d)];
            }
            next->refresh_failed(m.cells(), m.block(), nD);
            it = done.emplace(components_[k].get(), std::move(next)).first;
        }
        components_[k] = it->second;
    }
}

void BeliefState::filter_step(const YearRecord& record)
{
    predict();
    if (record.year != year_) {
        std::ostringstream msg;
        msg << "record for year " << record.year << " applied to belief at year " << year_;
        throw std::invalid_argument(msg.str());
    }
    update(record.outcomes);
    apply_repairs(record.repaired);
}

double BeliefState::component_failure_prob(int k) const
{
    const auto& f = components_[static_cast<std::size_t>(k)]->failed;
    double s = 0.0;
    for (std::size_t a = 0; a < alpha_.size(); ++a) s += alpha_[a] * f[a];
    return std::clamp(s, 0.0, 1.0);
}

std::vector<double> BeliefState::crack_marginal(int k) const
{
    const DbnModel& m = *model_;
    const int nD = m.nD();
    const int sub = m.nK() * m.nM();
    const auto& p = components_[static_cast<std::size_t>(k)]->p;
    std::vector<double> out(static_cast<std::size_t>(nD), 0.0);
    for (int a = 0; a < m.cells(); ++a)
        for (int j = 0; j < sub; ++j)
            for (int d = 0; d < nD; ++d)
                out[static_cast<std::size_t>(d)] +=
                    alpha_[static_cast<std::size_t>(a)] * p[static_cast<std::size_t>((a * sub + j) * nD + d)];
    return out;
}

double BeliefState::normalization_error() const
{
    const DbnModel& m = *model_;
    double err = std::abs(pairwise_sum(alpha_) - 1.0);
    for (const auto& c : components_)
        for (int a = 0; a < m.cells(); ++a) {
            const std::span<const double> blk(c->p.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(m.block()),
                                              static_cast<std::size_t>(m.block()));
            err = std::max(err, std::abs(pairwise_sum(blk) - 1.0));
        }
    return err;
}

std::vector<BeliefState> smooth(const std::vector<BeliefState>& predicted, const std::vector<YearRecord>& records)
{
    if (predicted.size() != records.size()) throw std::invalid_argument("smooth: beliefs and records differ in length");
    if (predicted.empty()) return {};
    const DbnModel& m = predicted.front().model();
    const int nD = m.nD();
    const int nK = m.nK();
    const int nM = m.nM();
    const int cells = m.cells();
    const int block = m.block();
    const std::size_t size = static_cast<std::size_t>(cells) * static_cast<std::size_t>(block);
    const std::size_t n = predicted.size();
    const int N = predicted.front().n_components();

    BeliefState posterior = predicted.back();
    posterior.update(records.back().outcomes);

    std::vector<std::vector<std::shared_ptr<const ComponentState>>> comps(n);
    for (std::size_t j = 0; j < n; ++j)
        for (int k = 0; k < N; ++k) comps[j].push_back(predicted[j].component_ptr(k));

    const auto& p0 = m.d0_marginal();
    std::vector<double> beta(size);
    std::vector<double> carry(size);
    for (int k = 0; k < N; ++k) {
        std::ptrdiff_t last = -1;
        for (std::size_t j = 0; j < n; ++j)
            if (records[j].outcomes[static_cast<std::size_t>(k)].inspected() || records[j].repaired[static_cast<std::size_t>(k)])
                last = static_cast<std::ptrdiff_t>(j);
        if (last < 0) continue;

        std::fill(carry.begin(), carry.end(), 1.0);
        for (std::ptrdiff_t j = last; j >= 0; --j) {
            const std::size_t ju = static_cast<std::size_t>(j);
            const int group = predicted[ju].component(k).group;
            if (j < last) {
                // Pull the next year's message back through the transition.
                for (int a = 0; a < cells; ++a) {
                    const auto [a0, aK, aM] = m.cell_coords(a);
                    (void)a0;
                    for (int iK = 0; iK < nK; ++iK)
                        for (int iM = 0; iM < nM; ++iM) {
                            const SparseKernel& ker = m.kernel(group, aK, iK, aM, iM);
                            const std::size_t base = static_cast<std::size_t>(((a * nK + iK) * nM + iM) * nD);
                            for (int d = 0; d < nD; ++d) {
                                const double* w = ker.weight.data() + ker.offset[static_cast<std::size_t>(d)];
                                const int len = static_cast<int>(ker.offset[static_cast<std::size_t>(d) + 1] -
                                                                 ker.offset[static_cast<std::size_t>(d)]);
                                const double* in = beta.data() + base + ker.first[static_cast<std::size_t>(d)];
                                double s = 0.0;
                                for (int t = 0; t < len; ++t) s += w[t] * in[t];
                                carry[base + static_cast<std::size_t>(d)] = s;
                            }
                        }
                }
            }
            if (records[ju].repaired[static_cast<std::size_t>(k)]) {
                for (std::size_t base = 0; base < size; base += static_cast<std::size_t>(nD)) {
                    double s = 0.0;
                    for (int d = 0; d < nD; ++d) s += p0[static_cast<std::size_t>(d)] * carry[base + static_cast<std::size_t>(d)];
                    std::fill_n(carry.begin() + static_cast<std::ptrdiff_t>(base), nD, s);
                }
            }
            const auto L = m.likelihood(records[ju].outcomes[static_cast<std::size_t>(k)]);
            for (std::size_t i = 0; i < size; ++i) beta[i] = carry[i] * L[i % static_cast<std::size_t>(nD)];

            // Per-cell rescaling keeps the message representable; the cell weights
            // come from the forward pass, so per-cell constants do not matter.
            const auto& fwd = predicted[ju].component(k).p;
            auto st = std::make_shared<ComponentState>();
            st->group = group;
            st->p.resize(size);
            for (int a = 0; a < cells; ++a) {
                const std::size_t base = static_cast<std::size_t>(a) * static_cast<std::size_t>(block);
                double mx = 0.0;
                for (int i = 0; i < block; ++i) mx = std::max(mx, beta[base + static_cast<std::size_t>(i)]);
                if (mx > 0.0)
                    for (int i = 0; i < block; ++i) beta[base + static_cast<std::size_t>(i)] /= mx;
                double s = 0.0;
                for (int i = 0; i < block; ++i) {
                    const double v = fwd[base + static_cast<std::size_t>(i)] * beta[base + static_cast<std::size_t>(i)];
                    st->p[base + static_cast<std::size_t>(i)] = v;
                    s += v;
                }
                if (s > 0.0) {
                    for (int i = 0; i < block; ++i) st->p[base + static_cast<std::size_t>(i)] /= s;
                } else {
                    std::copy_n(fwd.begin() + static_cast<std::ptrdiff_t>(base), block,
                                st->p.begin() + static_cast<std::ptrdiff_t>(base));
                }
            }
            st->refresh_failed(cells, block, nD);
            comps[ju][static_cast<std::size_t>(k)] = std::move(st);
        }
    }

    std::vector<BeliefState> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        out.emplace_back(predicted[j].model_ptr(), predicted[j].year(), posterior.alpha_weights(), std::move(comps[j]));
    return out;
}

namespace {

std::size_t pick_weighted(const double* w, std::size_t n, Rng& rng)
{
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += w[i];
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] <= 0.0) continue;
        acc += w[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

}  // namespace

ChainState sample_chain_state(const BeliefState& belief, Rng& rng)
{
    const DbnModel& m = belief.model();
    const auto block = static_cast<std::size_t>(m.block());
    ChainState s;
    const auto& w = belief.alpha_weights();
    s.cell = static_cast<int>(pick_weighted(w.data(), w.size(), rng));
    for (int k = 0; k < belief.n_components(); ++k) {
        const double* blk = belief.component(k).p.data() + static_cast<std::size_t>(s.cell) * block;
        s.index.push_back(static_cast<int>(pick_weighted(blk, block, rng)));
    }
    return s;
}

void DbnModel::advance_chain(ChainState& state, Rng& rng) const
{
    const auto [a0, aK, aM] = cell_coords(state.cell);
    (void)a0;
    const int nD = this->nD();
    for (std::size_t k = 0; k < state.index.size(); ++k) {
        int& idx = state.index[k];
        const int d = idx % nD;
        const int iM = (idx / nD) % nM_;
        const int iK = idx / (nD * nM_);
        const SparseKernel& ker = kernel(group_of(static_cast<int>(k)), aK, iK, aM, iM);
        const auto from = ker.offset[static_cast<std::size_t>(d)];
        const auto len = ker.offset[static_cast<std::size_t>(d) + 1] - from;
        const std::size_t t = pick_weighted(ker.weight.data() + from, len, rng);
        idx += ker.first[static_cast<std::size_t>(d)] + static_cast<int>(t) - d;
    }
}

double DbnModel::chain_depth(const ChainState& state, int k, Rng& rng) const
{
    const int d = state.index[static_cast<std::size_t>(k)] % nD();
    if (d == grid_.failed()) return fatigue_.critical_depth;
    return grid_.quantile_within(d, uniform01(rng));
}

void DbnModel::repair_chain(ChainState& state, int k, Rng& rng) const
{
    int& idx = state.index[static_cast<std::size_t>(k)];
    const int d = idx % nD();
    idx += static_cast<int>(pick_weighted(d0_marginal_.data(), d0_marginal_.size(), rng)) - d;
}

GroundTruth posterior_sample(const BeliefState& belief, Rng& rng)
{
    const DbnModel& m = belief.model();
    const auto& fp = m.fatigue();
    const auto& corr = m.correlation();
    const int nD = m.nD();
    const int nM = m.nM();
    const int block = m.block();

    auto within_normal_bin = [&rng](int bin, int n) {
        const auto [lo, hi] = normal_bin_bounds(bin, n);
        return truncated_standard_normal(rng, lo, hi);
    };

    GroundTruth t;
    const auto& w = belief.alpha_weights();
    const int cell = static_cast<int>(pick_weighted(w.data(), w.size(), rng));
    const auto coords = m.cell_coords(cell);
    for (int d = 0; d < 3; ++d)
        t.alpha[static_cast<std::size_t>(d)] = within_normal_bin(coords[static_cast<std::size_t>(d)], m.alpha_bins(d));

    for (int k = 0; k < belief.n_components(); ++k) {
        const auto& st = belief.component(k);
        const double* blk = st.p.data() + static_cast<std::size_t>(cell) * static_cast<std::size_t>(block);
        const int idx = static_cast<int>(pick_weighted(blk, static_cast<std::size_t>(block), rng));
        const int d = idx % nD;
        const int iM = (idx / nD) % nM;
        const int iK = idx / (nD * nM);
        ComponentTruth c;
        c.lnK = equicorrelated(m.group_mean_lnK(st.group), fp.std_lnK, corr.rho_K, t.alpha[1], within_normal_bin(iK, m.nK()));
        c.M = equicorrelated(fp.mean_M, fp.std_M, corr.rho_M, t.alpha[2], within_normal_bin(iM, nM));
        c.failed = d == m.grid().failed();
        c.depth = c.failed ? fp.critical_depth : m.grid().quantile_within(d, uniform01(rng));
        t.components.push_back(c);
    }
    return t;
}

void write_belief_csv(std::ostream& out, const BeliefState& belief)
{
    const CrackGrid& grid = belief.model().grid();
    CsvWriter csv(out);
    csv.header({"component", "bin", "lower_mm", "upper_mm", "probability"});
    for (int k = 0; k < belief.n_components(); ++k) {
        const auto marginal = belief.crack_marginal(k);
        for (int d = 0; d < grid.size(); ++d) {
            csv.cell(k + 1).cell(d).cell(grid.lower(d)).cell(grid.upper(d)).cell(marginal[static_cast<std::size_t>(d)]);
            csv.end_row();
        }
    }
}

}  // namespace imprs
