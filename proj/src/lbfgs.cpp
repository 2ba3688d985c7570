#include "imprs/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace imprs {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

LbfgsResult lbfgs_minimize(const GradientObjective& f, std::vector<double> x0, const LbfgsOptions& options)
{
    const std::size_t n = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);
    std::vector<double> g(n);
    res.value = f(res.x, g);
    if (!std::isfinite(res.value)) return res;

    std::deque<std::vector<double>> S;
    std::deque<std::vector<double>> Y;
    std::vector<double> dir(n), xn(n), gn(n);
    for (int it = 0; it < options.max_iterations; ++it) {
        res.iterations = it + 1;
        if (std::sqrt(dot(g, g)) < options.gradient_tolerance) break;

        // Two-loop recursion.
        dir = g;
        std::vector<double> alpha(S.size());
        for (std::size_t i = S.size(); i-- > 0;) {
            alpha[i] = dot(S[i], dir) / dot(Y[i], S[i]);
            for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha[i] * Y[i][j];
        }
        if (!S.empty()) {
            const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            for (double& d : dir) d *= gamma;
        }
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double beta = dot(Y[i], dir) / dot(Y[i], S[i]);
            for (std::size_t j = 0; j < n; ++j) dir[j] += S[i][j] * (alpha[i] - beta);
        }
        for (double& d : dir) d = -d;
        double slope = dot(dir, g);
        if (!(slope < 0.0)) {
            S.clear();
            Y.clear();
            for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
            slope = dot(dir, g);
        }

        double step = S.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
        double fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t j = 0; j < n; ++j) xn[j] = res.x[j] + step * dir[j];
            fn = f(xn, gn);
            if (std::isfinite(fn) && fn <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> s(n), y(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = xn[j] - res.x[j];
            y[j] = gn[j] - g[j];
        }
        const double improvement = res.value - fn;
        res.x = xn;
        g = gn;
        res.value = fn;
        if (dot(s, y) > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            if (static_cast<int>(S.size()) > options.memory) {
                S.pop_front();
                Y.pop_front();
            }
        }
        if (improvement < options.value_tolerance * (1.0 + std::abs(fn))) break;
    }
    return res;
}

}  // namespace imprs
