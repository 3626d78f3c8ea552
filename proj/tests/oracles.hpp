#pragma once

// Independent reference values computed by direct numerical integration.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

namespace oracle {

inline double integrate(const auto& f, double a, double b) {
    static boost::math::quadrature::tanh_sinh<double> integrator(15);
    return integrator.integrate(f, a, b, 1e-15);
}

/// P(a, x) = int_0^x t^(a-1) e^(-t) dt / Gamma(a)
inline double incomplete_gamma(double a, double x) {
    const double lg = std::lgamma(a);
    return integrate([&](double t) { return std::exp((a - 1.0) * std::log(t) - t - lg); }, 0.0, x);
}

/// I_x(a, b) = int_0^x t^(a-1) (1-t)^(b-1) dt / B(a, b)
inline double incomplete_beta(double a, double b, double x) {
    const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return integrate([&](double t) { return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - lb); },
                     0.0, x);
}

/// Chi-squared(k) CDF from its density.
inline double chi_squared_cdf(double x, double k) {
    const double c = -0.5 * k * std::log(2.0) - std::lgamma(0.5 * k);
    return integrate([&](double t) { return std::exp(c + (0.5 * k - 1.0) * std::log(t) - 0.5 * t); }, 0.0, x);
}

/// F(d1, d2) CDF from its density.
inline double fisher_cdf(double x, double d1, double d2) {
    const double lb = std::lgamma(0.5 * d1) + std::lgamma(0.5 * d2) - std::lgamma(0.5 * (d1 + d2));
    const double c = 0.5 * d1 * std::log(d1 / d2) - lb;
    return integrate(
        [&](double t) {
            return std::exp(c + (0.5 * d1 - 1.0) * std::log(t) - 0.5 * (d1 + d2) * std::log1p(d1 * t / d2));
        },
        0.0, x);
}

} // namespace oracle
