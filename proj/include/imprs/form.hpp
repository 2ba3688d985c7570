#pragma once

#include <functional>
#include <vector>

namespace imprs {

using LimitState = std::function<double(const std::vector<double>&)>;
using LimitStateGradient = std::function<std::vector<double>(const std::vector<double>&)>;

struct FormOptions {
    double tolerance = 1e-8;  ///< stop once the design-point step is shorter than this
    int max_iterations = 100;
    double fd_step = 1e-5;
};

struct FormResult {
    double beta = 0.0;
    double pf = 0.0;
    std::vector<double> design_point;
    int iterations = 0;
    bool converged = false;
};

/// First-order reliability in standard-normal space (Hasofer-Lind / Rackwitz-Fiessler
/// iteration). Failure is g(u) < 0. The step is halved whenever the iteration
/// oscillates. If no gradient is given, fourth-order central differences are used.
FormResult form_reliability(const LimitState& g, int dim, const FormOptions& options = {},
                            const LimitStateGradient& gradient = nullptr);

}  // namespace imprs
