#pragma once

// Reference computations shared by the unit tests and the acceptance run.

#include "imprs/fatigue.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

// dD/dt = exp(q) * D^(M/2), integrated with an adaptive Dormand-Prince stepper.
inline double ode_depth(double t, double D0, double K, double M, const imprs::FatigueParams& fp)
{
    namespace ode = boost::numeric::odeint;
    const double q = std::exp(imprs::log_growth_rate(std::log(K), M, fp));
    std::vector<double> x{D0};
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& dxdt, double) {
        dxdt[0] = q * std::pow(s[0], 0.5 * M);
    };
    ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-13, ode::runge_kutta_dopri5<std::vector<double>>()), rhs, x,
                            0.0, t, t / 100.0);
    return x[0];
}

// DoE curve D: log10 N = log10_a - m log10 S, knee at the intersection.
inline imprs::SNModel doe_d()
{
    imprs::SNModel sn;
    const double knee = std::pow(10.0, (15.637 - 12.182) / 2.0);
    sn.segments = {{5.0, 15.637, 0.0, knee}, {3.0, 12.182, knee, std::numeric_limits<double>::infinity()}};
    sn.log10_a_std = 0.2095;
    sn.characteristic_offset = 2.0;
    sn.stress_cov = 0.26;
    return sn;
}

}  // namespace oracle
