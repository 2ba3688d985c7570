#pragma once

// Discretized dynamic Bayesian network over N fatigue-cracked components whose
// initial depth, stress scale and Paris exponent are equicorrelated through
// three standard-normal hyperparameters (alpha_D0, alpha_K, alpha_M).
//
// State of component k given a hyperparameter cell: (crack bin, K bin, M bin).
// K and M bins are equal-probability bins of the component-specific normal
// residual eps_k, so X_k = mu + sigma * (sqrt(rho) * alpha + sqrt(1 - rho) * eps_k).

#include "imprs/fatigue.hpp"
#include "imprs/history.hpp"
#include "imprs/inspection.hpp"
#include "imprs/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace imprs {

struct DiscretizationConfig {
    int crack_bins = 60;      ///< finite bins: [0, d_min) plus log-spaced bins up to d_cr
    double d_min = 1e-4;      ///< mm
    std::vector<double> crack_boundaries;  ///< optional explicit 0 = b0 < ... < bn = d_cr
    int k_bins = 8;
    int m_bins = 8;
    int alpha_bins_D0 = 8;
    int alpha_bins_K = 8;
    int alpha_bins_M = 8;

    void validate() const;
    bool operator==(const DiscretizationConfig&) const = default;
};

/// Crack-depth bins. Bin 0 is uniform on [0, b1); other finite bins are
/// log-uniform; the last index is the absorbing failed bin (depth >= d_cr).
class CrackGrid {
public:
    CrackGrid(const DiscretizationConfig& config, double critical_depth);

    int size() const { return static_cast<int>(bounds_.size()); }  ///< finite bins + failed
    int failed() const { return size() - 1; }
    double lower(int bin) const { return bounds_[static_cast<std::size_t>(bin)]; }
    double upper(int bin) const;
    const std::vector<double>& boundaries() const { return bounds_; }
    double critical_depth() const { return bounds_.back(); }
    int bin_of(double d) const;
    /// Fraction of bin mass below x under the within-bin density.
    double cdf_within(int bin, double x) const;
    /// Depth at within-bin probability level u in (0, 1).
    double quantile_within(int bin, double u) const;
    /// Average of f over the bin under its within-bin density (f(d_cr) for the failed bin).
    double average(int bin, const std::function<double(double)>& f, double resolution) const;

private:
    std::vector<double> bounds_;  // lower bounds of the finite bins, then d_cr
};

/// One-year crack transition for a fixed (K, M): sparse rows of contiguous targets.
struct SparseKernel {
    std::vector<std::uint32_t> offset;  ///< size nD + 1
    std::vector<std::uint16_t> first;   ///< first target bin of each row
    std::vector<double> weight;
};

/// Hidden state of the discrete model: alpha cell and, per component, the flat
/// (iK, iM, crack bin) index (iK * nM + iM) * nD + d.
struct ChainState {
    int cell = 0;
    std::vector<int> index;
};

struct ComponentState {
    int group = 0;
    std::vector<double> p;       ///< [cell][iK][iM][crack], each cell block sums to 1
    std::vector<double> failed;  ///< failed-bin mass per cell

    void refresh_failed(int cells, int block, int nD);
};

struct ComponentTruth {
    double lnK = 0.0;
    double M = 0.0;
    double depth = 0.0;
    bool failed = false;
};

struct GroundTruth {
    std::array<double, 3> alpha{};  ///< alpha_D0, alpha_K, alpha_M
    std::vector<ComponentTruth> components;
};

class BeliefState;

/// Immutable discretized model; shareable across threads. Create with make_shared.
class DbnModel : public std::enable_shared_from_this<DbnModel> {
public:
    DbnModel(const FatigueParams& fatigue, const CorrelationParams& correlation, const DiscretizationConfig& disc,
             const InspectionModel& inspection, std::vector<double> group_mean_lnK, std::vector<int> component_group);

    const FatigueParams& fatigue() const { return fatigue_; }
    const CorrelationParams& correlation() const { return corr_; }
    const InspectionModel& inspection() const { return inspection_; }
    const CrackGrid& grid() const { return grid_; }
    int n_components() const { return static_cast<int>(component_group_.size()); }
    int n_groups() const { return static_cast<int>(group_mean_lnK_.size()); }
    int group_of(int k) const { return component_group_[static_cast<std::size_t>(k)]; }
    double group_mean_lnK(int g) const { return group_mean_lnK_[static_cast<std::size_t>(g)]; }

    int nD() const { return grid_.size(); }
    int nK() const { return nK_; }
    int nM() const { return nM_; }
    int block() const { return nK_ * nM_ * grid_.size(); }
    int cells() const { return nA_[0] * nA_[1] * nA_[2]; }
    int alpha_bins(int dim) const { return nA_[static_cast<std::size_t>(dim)]; }
    int cell_index(int a0, int aK, int aM) const { return (a0 * nA_[1] + aK) * nA_[2] + aM; }
    std::array<int, 3> cell_coords(int cell) const;

    /// Bin-mean representatives of the alpha bins (dim 0 = D0, 1 = K, 2 = M) and of eps bins.
    const std::vector<double>& alpha_reps(int dim) const { return alpha_reps_[static_cast<std::size_t>(dim)]; }
    const std::vector<double>& eps_reps_K() const { return epsK_reps_; }
    const std::vector<double>& eps_reps_M() const { return epsM_reps_; }
    double lnK_value(int group, int aK, int iK) const;
    double M_value(int aM, int iM) const;

    const SparseKernel& kernel(int group, int aK, int iK, int aM, int iM) const;
    /// Crack-bin probabilities of D0 given the alpha_D0 bin, and unconditionally.
    const std::vector<double>& d0_given_alpha(int a0) const { return d0_cond_[static_cast<std::size_t>(a0)]; }
    const std::vector<double>& d0_marginal() const { return d0_marginal_; }

    /// Per-crack-bin likelihood of an inspection outcome.
    std::vector<double> likelihood(const Outcome& outcome) const;

    BeliefState prior(int year = 0) const;
    GroundTruth sample_prior_truth(Rng& rng) const;
    /// Advances the true crack depths by one year.
    void grow_truth(GroundTruth& truth) const;
    /// Redraws the depth of a repaired component (independent of everything else).
    void repair_truth(ComponentTruth& c, Rng& rng) const;
    /// Depth seen by an inspector: d_cr for failed components.
    double observable_depth(const ComponentTruth& c) const;

    /// One transition of every component of a discrete-model state.
    void advance_chain(ChainState& state, Rng& rng) const;
    /// Depth drawn within the current crack bin (log-uniform), d_cr when failed.
    double chain_depth(const ChainState& state, int k, Rng& rng) const;
    /// Redraws the crack bin of component k from the unconditional D0 distribution.
    void repair_chain(ChainState& state, int k, Rng& rng) const;

private:
    void build_kernels();

    FatigueParams fatigue_;
    CorrelationParams corr_;
    InspectionModel inspection_;
    CrackGrid grid_;
    std::vector<double> group_mean_lnK_;
    std::vector<int> component_group_;
    int nK_;
    int nM_;
    std::array<int, 3> nA_;
    std::array<std::vector<double>, 3> alpha_reps_;
    std::vector<double> epsK_reps_;
    std::vector<double> epsM_reps_;
    std::vector<SparseKernel> kernels_;  // [group][aK][iK][aM][iM]
    std::vector<std::vector<double>> d0_cond_;
    std::vector<double> d0_marginal_;
    std::vector<double> no_detection_;
};

/// Joint belief: hyperparameter cell weights and, per component, the state
/// distribution conditional on each cell. Component states are immutable and
/// shared between components (and copies of the belief) until modified.
class BeliefState {
public:
    BeliefState() = default;
    BeliefState(std::shared_ptr<const DbnModel> model, int year, std::vector<double> alpha,
                std::vector<std::shared_ptr<const ComponentState>> components);

    const DbnModel& model() const { return *model_; }
    const std::shared_ptr<const DbnModel>& model_ptr() const { return model_; }
    int year() const { return year_; }
    const std::vector<double>& alpha_weights() const { return alpha_; }
    const ComponentState& component(int k) const { return *components_[static_cast<std::size_t>(k)]; }
    const std::shared_ptr<const ComponentState>& component_ptr(int k) const
    {
        return components_[static_cast<std::size_t>(k)];
    }
    int n_components() const { return static_cast<int>(components_.size()); }

    /// One-year crack growth for every component.
    void predict();
    /// Conditions on per-component outcomes (NotInspected entries are ignored).
    /// Throws NumericalError if the outcomes have zero probability.
    void update(const std::vector<Outcome>& outcomes);
    /// Resets repaired components' crack depth to the initial-depth distribution.
    void apply_repairs(const std::vector<std::uint8_t>& repaired);
    /// predict, then update and repair with the record of the new year.
    void filter_step(const YearRecord& record);

    /// Pr(component k has failed).
    double component_failure_prob(int k) const;
    /// Marginal crack-bin distribution of component k.
    std::vector<double> crack_marginal(int k) const;
    /// Largest deviation of any normalization constraint from 1.
    double normalization_error() const;

    void replace_component(int k, std::shared_ptr<const ComponentState> state);

private:
    std::shared_ptr<const DbnModel> model_;
    int year_ = 0;
    std::vector<double> alpha_;
    std::vector<std::shared_ptr<const ComponentState>> components_;
};

/// Smoothed beliefs: entry j is the state distribution in year predicted[j].year()
/// (before that year's inspections) conditioned on all records. predicted[j] must
/// be the belief after prediction into year j, records[j] that year's record.
std::vector<BeliefState> smooth(const std::vector<BeliefState>& predicted, const std::vector<YearRecord>& records);

/// Draws a continuous state consistent with the belief: a cell by weight, then each
/// component's bins, then values within bins.
GroundTruth posterior_sample(const BeliefState& belief, Rng& rng);

/// Draws a discrete-model state from the belief.
ChainState sample_chain_state(const BeliefState& belief, Rng& rng);

/// CSV of marginal crack distributions: component,bin,lower_mm,upper_mm,probability.
void write_belief_csv(std::ostream& out, const BeliefState& belief);

}  // namespace imprs
