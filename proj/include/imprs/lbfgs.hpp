#pragma once

#include <functional>
#include <vector>

namespace imprs {

/// f(x, grad) returns the objective and fills grad.
using GradientObjective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsOptions {
    int max_iterations = 200;
    int memory = 8;
    double gradient_tolerance = 1e-6;
    double value_tolerance = 1e-12;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

/// Limited-memory BFGS with backtracking Armijo line search. Points where f is
/// not finite are rejected by the line search.
LbfgsResult lbfgs_minimize(const GradientObjective& f, std::vector<double> x0, const LbfgsOptions& options = {});

}  // namespace imprs
