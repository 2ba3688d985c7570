#pragma once

// Scenario file: every model, cost and optimizer setting of one study. Read from
// TOML (or JSON), validated against a fixed schema, written back in canonical form.

#include "imprs/adaptive.hpp"
#include "imprs/fatigue.hpp"
#include "imprs/system.hpp"
#include "imprs/toml.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace imprs {

/// Components sharing one fatigue design factor (and one mean of K).
struct ComponentGroup {
    std::string name;
    double fdf = 1.0;
    std::optional<double> mean_K;  ///< filled by calibration
    std::vector<int> components;   ///< 1-based
    double loss_per_failure = 0.0; ///< capacity fraction lost per failed member (group-count mode)
    bool operator==(const ComponentGroup&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    int n_components = 0;
    int horizon = 40;
    std::uint64_t seed = 1;

    FatigueParams fatigue;
    CorrelationParams correlation;
    SNModel sn;                ///< segment bounds derived from curve intersections
    double design_life = 40.0; ///< years, calibration reference time
    CalibrationOptions calibration;
    std::vector<ComponentGroup> groups;
    InspectionModel inspection;
    CapacityModel capacity;    ///< groups derived from `groups` in group-count mode
    LoadModel load;
    CostParams costs;
    DiscretizationConfig discretization;
    SystemOptions system;
    OptimizerSettings optimizer;
    int adapt_eval_n_mc = 200;

    void validate() const;
    bool calibrated() const;
    /// 0-based group index of every component.
    std::vector<int> component_groups() const;
    bool operator==(const Scenario&) const;
};

Scenario scenario_from_json(const ordered_json& j);
ordered_json scenario_to_json(const Scenario& s);

/// TOML, or JSON when the first non-blank character is '{'.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string canonical_toml(const Scenario& s);
/// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string scenario_hash(const Scenario& s);
std::string fnv1a_hex(std::string_view data);

/// Mean of K per group by the FDF calibration chain; results in group order.
Scenario calibrate_scenario(const Scenario& s, std::vector<CalibrationResult>* results = nullptr);

/// Model objects for a calibrated scenario.
Problem build_problem(const Scenario& s);

}  // namespace imprs
