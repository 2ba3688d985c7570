#pragma once

#include "imprs/dbn.hpp"

#include <cstdint>
#include <vector>

namespace imprs {

/// Annual maximum load, lognormal and i.i.d. across years.
struct LoadModel {
    double mean = 50.0;  ///< kN
    double cov = 0.53;

    void validate() const;
    /// P[S > r]; 1 for r <= 0.
    double exceedance(double r) const;
    bool operator==(const LoadModel&) const = default;
};

struct CapacityGroup {
    std::vector<int> components;  ///< 0-based
    std::vector<double> loss;     ///< loss[n] = capacity fraction lost with n failures in the group
    bool operator==(const CapacityGroup&) const = default;
};

struct CapacitySet {
    std::vector<int> failed;  ///< 0-based
    double fraction = 1.0;    ///< residual capacity fraction once all of these have failed
    bool operator==(const CapacitySet&) const = default;
};

/// Residual resistance of the damaged system as a function of the failed set.
///  - group-count: fraction = clamp(1 - sum_g loss_g[n_g], 0, 1), n_g = failures in group g
///  - general: fraction = min over listed sets contained in the failed set (1 if none)
struct CapacityModel {
    enum class Mode { GroupCount, General };

    double intact_resistance = 282.0;  ///< kN
    Mode mode = Mode::GroupCount;
    std::vector<CapacityGroup> groups;
    std::vector<CapacitySet> sets;

    void validate(int n_components) const;
    double fraction(const std::vector<std::uint8_t>& failed) const;
    double resistance(const std::vector<std::uint8_t>& failed) const { return intact_resistance * fraction(failed); }
    bool operator==(const CapacityModel&) const = default;
};

struct SystemOptions {
    int enumeration_limit = 12;          ///< general mode: exact enumeration up to this many components
    int monte_carlo_samples = 20000;     ///< general mode otherwise
    std::uint64_t monte_carlo_seed = 7;
};

/// Capacity + load with precomputed exceedance tables; immutable.
class SystemModel {
public:
    SystemModel(CapacityModel capacity, LoadModel load, int n_components, SystemOptions options = {});

    const CapacityModel& capacity() const { return capacity_; }
    const LoadModel& load() const { return load_; }
    int n_components() const { return n_; }

    /// P[S > R(failed set)].
    double failure_given(const std::vector<std::uint8_t>& failed) const;
    /// Pr(F_i* | belief): system failure in the year the belief describes.
    double interval_failure_prob(const BeliefState& belief) const;
    /// Same, for components independent with the given failure probabilities.
    double interval_failure_prob(const std::vector<double>& component_pf) const;
    /// SEI_k = P[S > R({k})] - P[S > R0].
    double sei(int k) const;
    std::vector<double> sei_all() const;

private:
    double conditional(const std::vector<double>& pf, std::uint64_t stream) const;

    CapacityModel capacity_;
    LoadModel load_;
    int n_;
    SystemOptions options_;
    std::vector<int> group_size_;
    std::vector<std::size_t> stride_;  // mixed-radix strides of the count vector
    std::vector<double> exceed_;       // by flattened count vector, or by failed-set mask
};

/// Pr(F_i) = 1 - prod_{j<=i}(1 - p_j) and its annual increments.
struct CumulativeFailure {
    std::vector<double> cdf;
    std::vector<double> annual;
};
CumulativeFailure cumulative_failure(const std::vector<double>& interval_probs);

}  // namespace imprs
