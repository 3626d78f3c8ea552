#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rst {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point s = (g, x) of the scenario space. Coordinate 0 is always the
/// geopolitical shock g; the remaining d-1 entries are macro-financial shocks.
using ScenarioVector = Vector;

inline double geopolitical(const ScenarioVector& s) { return s[0]; }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (files, dimensions, parameter domains).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// No scenario satisfies the breach condition within the admissible bounds.
class InfeasibleProblem : public Error {
public:
    using Error::Error;
};

/// The solver could not reach the requested tolerances. The best iterate found
/// is attached so callers can still report it.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, ScenarioVector best)
        : Error(what), best_(std::move(best)) {}
    const ScenarioVector& best_iterate() const { return best_; }

private:
    ScenarioVector best_;
};

void require_finite(const Vector& v, const char* what);

} // namespace rst
