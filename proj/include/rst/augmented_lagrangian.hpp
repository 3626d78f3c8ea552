#pragma once

#include "rst/types.hpp"

#include <functional>
#include <vector>

namespace rst::optim {

/// Scalar function with gradient: returns f(z) and writes grad f(z) when asked.
using SmoothFunction = std::function<double(const Vector& z, Vector* gradient)>;

/// min f(z) subject to h_j(z) <= 0.
struct Problem {
    SmoothFunction objective;
    std::vector<SmoothFunction> inequalities;
};

struct Options {
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    int penalty_rounds = 6;       ///< number of times the penalty may grow
    int max_outer_iterations = 60;
    int max_inner_iterations = 400;
    double feasibility_tolerance = 1e-8;
    double stationarity_tolerance = 1e-8;
};

struct Result {
    Vector z;
    double objective = 0.0;
    double max_violation = 0.0;  ///< max_j max(h_j(z), 0)
    double stationarity = 0.0;   ///< |grad of the Lagrangian| at the final multipliers
    std::vector<double> multipliers;
    int outer_iterations = 0;
    int inner_iterations = 0;
    bool converged = false;
};

/// Powell-Hestenes-Rockafellar augmented Lagrangian for inequality constraints,
/// with each subproblem solved by BFGS and a backtracking Armijo line search.
Result minimize(const Problem& problem, Vector z0, const Options& options = {});

struct InnerResult {
    Vector z;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool stalled = false; ///< line search could not decrease further
};

/// Unconstrained BFGS; exposed for testing.
InnerResult minimize_bfgs(const SmoothFunction& f, Vector z0, double gradient_tolerance, int max_iterations);

} // namespace rst::optim
