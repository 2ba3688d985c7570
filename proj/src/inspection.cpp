#include "imprs/inspection.hpp"

#include "imprs/errors.hpp"
#include "imprs/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace imprs {

void InspectionModel::validate() const
{
    if (!(pod_scale > 0.0)) throw ConfigError("inspection.pod_scale must be > 0");
    if (!(sigma > 0.0)) throw ConfigError("inspection.sigma must be > 0");
}

double pod(double d, const InspectionModel& model)
{
    if (d < 0.0) throw std::invalid_argument("pod requires d >= 0");
    return -std::expm1(-d / model.pod_scale);
}

Outcome sample_measurement(double d, const InspectionModel& model, Rng& rng)
{
    if (d < 0.0) throw std::invalid_argument("sample_measurement requires d >= 0");
    // Both draws are always consumed so streams stay aligned across outcomes.
    const double u = uniform01(rng);
    const double z = d + model.sigma * truncated_standard_normal(rng, -d / model.sigma, INFINITY);
    if (u >= pod(d, model)) return {Outcome::Kind::NoDetection, 0.0};
    return {Outcome::Kind::Measured, z > 0.0 ? z : std::nextafter(0.0, 1.0)};
}

double outcome_likelihood(const Outcome& outcome, double d, const InspectionModel& model)
{
    switch (outcome.kind) {
    case Outcome::Kind::NotInspected:
        return 1.0;
    case Outcome::Kind::NoDetection:
        return 1.0 - pod(d, model);
    case Outcome::Kind::Measured: {
        const double s = model.sigma;
        return pod(d, model) * normal_pdf((outcome.value - d) / s) / (s * normal_cdf(d / s));
    }
    }
    return 1.0;
}

}  // namespace imprs
