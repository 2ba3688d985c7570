#pragma once

#include "imprs/rng.hpp"

#include <cstdint>
#include <vector>

namespace imprs {

struct InspectionModel {
    double pod_scale = 10.0;  ///< xi, mm
    double sigma = 1.0;       ///< measurement standard deviation, mm

    void validate() const;
    bool operator==(const InspectionModel&) const = default;
};

/// Probability of detection 1 - exp(-d / xi).
double pod(double d, const InspectionModel& model);

struct Outcome {
    enum class Kind : std::uint8_t { NotInspected, NoDetection, Measured };
    Kind kind = Kind::NotInspected;
    double value = 0.0;  ///< measured depth in mm when kind == Measured

    bool inspected() const { return kind != Kind::NotInspected; }
    bool operator==(const Outcome&) const = default;
};

/// Draws an inspection outcome for true depth d: no detection with probability
/// 1 - PoD(d), otherwise a normal measurement truncated to z > 0.
Outcome sample_measurement(double d, const InspectionModel& model, Rng& rng);

/// Likelihood of an outcome given true depth d (density for measurements).
double outcome_likelihood(const Outcome& outcome, double d, const InspectionModel& model);

}  // namespace imprs
