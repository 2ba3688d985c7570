#include "imprs/form.hpp"

#include "imprs/numerics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace imprs {
namespace {

std::vector<double> fd_gradient(const LimitState& g, const std::vector<double>& u, double step)
{
    std::vector<double> grad(u.size());
    std::vector<double> x = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(u[i]));
        const double xi = u[i];
        x[i] = xi + h;
        const double f1 = g(x);
        x[i] = xi - h;
        const double fm1 = g(x);
        x[i] = xi + 2 * h;
        const double f2 = g(x);
        x[i] = xi - 2 * h;
        const double fm2 = g(x);
        x[i] = xi;
        grad[i] = (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
    }
    return grad;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

FormResult form_reliability(const LimitState& g, int dim, const FormOptions& options,
                            const LimitStateGradient& gradient)
{
    if (dim < 1) throw std::invalid_argument("FORM dimension must be >= 1");
    FormResult result;
    std::vector<double> u(static_cast<std::size_t>(dim), 0.0);
    const double g0 = g(u);
    double damping = 1.0;
    std::vector<double> prev_step;

    for (int it = 1; it <= options.max_iterations; ++it) {
        const double gu = g(u);
        const std::vector<double> grad = gradient ? gradient(u) : fd_gradient(g, u, options.fd_step);
        const double gg = dot(grad, grad);
        result.iterations = it;
        if (!(gg > 0.0) || !std::isfinite(gg)) break;
        const double scale = (dot(grad, u) - gu) / gg;
        std::vector<double> step(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) step[i] = scale * grad[i] - u[i];
        if (!prev_step.empty() && dot(step, prev_step) < 0.0) damping = std::max(damping * 0.5, 1.0 / 1024.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            step[i] *= damping;
            u[i] += step[i];
            norm += step[i] * step[i];
        }
        prev_step = step;
        if (std::sqrt(norm) < options.tolerance) {
            result.converged = true;
            break;
        }
    }

    const double r = std::sqrt(dot(u, u));
    result.beta = g0 >= 0.0 ? r : -r;
    result.pf = normal_cdf(-result.beta);
    result.design_point = std::move(u);
    return result;
}

}  // namespace imprs
