#include "rst/augmented_lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rst::optim {

InnerResult minimize_bfgs(const SmoothFunction& f, Vector z, double gradient_tolerance, int max_iterations) {
    const auto n = z.size();
    Vector grad(n);
    double value = f(z, &grad);
    Matrix inv_hessian = Matrix::Identity(n, n);
    bool fresh_hessian = true;

    InnerResult out;
    for (int iter = 0; iter < max_iterations; ++iter) {
        out.iterations = iter;
        const double gnorm = grad.norm();
        if (gnorm <= gradient_tolerance) break;

        Vector direction = -inv_hessian * grad;
        double slope = grad.dot(direction);
        if (!(slope < 0.0)) {
            inv_hessian.setIdentity();
            fresh_hessian = true;
            direction = -grad;
            slope = -gnorm * gnorm;
        }
        if (fresh_hessian) {
            // Keep the first steepest-descent step from leaping across the domain.
            const double len = direction.norm();
            if (len > 1.0) {
                direction /= len;
                slope /= len;
            }
        }

        // Armijo backtracking with a round-off allowance so the search still
        // accepts steps once f has flattened to machine precision.
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
        double step = 1.0;
        Vector candidate(n), cand_grad(n);
        double cand_value = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            candidate = z + step * direction;
            cand_value = f(candidate, &cand_grad);
            if (std::isfinite(cand_value) && cand_value <= value + 1e-4 * step * slope + slack) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!fresh_hessian) {
                inv_hessian.setIdentity();
                fresh_hessian = true;
                continue;
            }
            out.stalled = true;
            break;
        }

        const Vector s = candidate - z;
        const Vector y = cand_grad - grad;
        z = candidate;
        value = cand_value;
        grad = cand_grad;
        if (s.norm() <= 1e-15 * (1.0 + z.norm())) {
            out.stalled = true;
            break;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_hessian) {
                // Shanno-Phua scaling of the initial inverse Hessian.
                inv_hessian *= sy / y.squaredNorm();
                fresh_hessian = false;
            }
            const double rho = 1.0 / sy;
            const Vector hy = inv_hessian * y;
            inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                           rho * (hy * s.transpose() + s * hy.transpose());
        }
    }
    out.z = std::move(z);
    out.value = value;
    out.gradient_norm = grad.norm();
    return out;
}

Result minimize(const Problem& problem, Vector z, const Options& options) {
    const std::size_t m = problem.inequalities.size();
    std::vector<double> lambda(m, 0.0);
    double penalty = options.initial_penalty;
    int growths = 0;

    auto violation_at = [&](const Vector& point, std::vector<double>* values) {
        double worst = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double h = problem.inequalities[j](point, nullptr);
            if (values) (*values)[j] = h;
            worst = std::max(worst, h);
        }
        return worst;
    };

    Result result;
    std::vector<double> h_values(m);
    double previous_violation = std::numeric_limits<double>::infinity();
    Vector grad_f(z.size()), grad_h(z.size());

    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
        const SmoothFunction merit = [&](const Vector& point, Vector* gradient) {
            double value = problem.objective(point, gradient ? &grad_f : nullptr);
            if (gradient) *gradient = grad_f;
            for (std::size_t j = 0; j < m; ++j) {
                const double h = problem.inequalities[j](point, gradient ? &grad_h : nullptr);
                const double shifted = std::max(0.0, lambda[j] + penalty * h);
                value += (shifted * shifted - lambda[j] * lambda[j]) / (2.0 * penalty);
                if (gradient && shifted > 0.0) *gradient += shifted * grad_h;
            }
            return value;
        };

        const auto inner = minimize_bfgs(merit, z, options.stationarity_tolerance, options.max_inner_iterations);
        z = inner.z;
        result.inner_iterations += inner.iterations;
        result.outer_iterations = outer + 1;
        result.stationarity = inner.gradient_norm;

        const double violation = violation_at(z, &h_values);
        double complementarity = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            lambda[j] = std::max(0.0, lambda[j] + penalty * h_values[j]);
            complementarity = std::max(complementarity, std::min(lambda[j], std::abs(h_values[j])));
        }
        result.max_violation = violation;

        const bool stationary = inner.gradient_norm <= options.stationarity_tolerance ||
                                (inner.stalled && inner.gradient_norm <= 1e3 * options.stationarity_tolerance);
        if (violation <= options.feasibility_tolerance && complementarity <= options.feasibility_tolerance &&
            stationary) {
            result.converged = true;
            break;
        }
        if (violation > 0.25 * previous_violation && growths < options.penalty_rounds) {
            penalty *= options.penalty_growth;
            ++growths;
        }
        previous_violation = violation;
    }

    result.z = z;
    result.objective = problem.objective(z, nullptr);
    result.multipliers = lambda;
    return result;
}

} // namespace rst::optim
