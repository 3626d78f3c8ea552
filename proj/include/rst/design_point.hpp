#pragma once

#include "rst/capital.hpp"
#include "rst/reference_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rst {

/// Admissible region of the scenario space. g > 0 is imposed as g >= g_min.
/// Entries of x_min / x_max may be infinite to leave a coordinate unbounded.
struct ConstraintSet {
    double g_min = 1e-6;
    std::optional<double> g_max;
    std::optional<Vector> x_min;
    std::optional<Vector> x_max;
    bool enforce_monotonicity = false;

    void validate(std::size_t dimension) const;
    double lower(std::size_t i) const; ///< -inf when unbounded
    double upper(std::size_t i) const; ///< +inf when unbounded
    bool within_bounds(const ScenarioVector& s) const;
    ScenarioVector clamp(ScenarioVector s) const;
};

struct SolverConfig {
    int n_starts = 32;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    int penalty_rounds = 6;
    int max_outer_iterations = 60;
    int max_inner_iterations = 400;
    double fd_step = 1e-5;               ///< central differences, whitened units
    double feasibility_tolerance = 1e-8;
    double stationarity_tolerance = 1e-8;
    double dedup_radius = 1e-3;          ///< whitened distance
    double monotonicity_temperature = 1e-3;
    std::uint64_t seed = 0;
    unsigned threads = 0;                ///< 0 = hardware concurrency

    void validate() const;
};

struct LocalOptimum {
    ScenarioVector s;
    double mahalanobis_sq = 0.0;
    double objective = 0.0; ///< negative log-density up to a constant
    double ratio = 0.0;
    int start = -1;         ///< first start that reached it
};

enum class StartKind { Sphere, GridAnchor, Probe };

struct StartRecord {
    int index = 0;
    StartKind kind = StartKind::Sphere;
    ScenarioVector initial;
    ScenarioVector final_point;
    double mahalanobis_sq = 0.0;
    double ratio = 0.0;
    bool feasible = false;
    bool converged = false;
    int outer_iterations = 0;
    int inner_iterations = 0;
};

struct DesignPointResult {
    ScenarioVector s_star;
    double mahalanobis_sq = 0.0;
    double tail_probability = 1.0;
    double rarity = 0.0;
    double objective = 0.0;
    double ratio_at_optimum = 0.0;
    double threshold = 0.0;
    bool active = false;    ///< |R(s*) - R*| <= 1e-6 R_0
    bool converged = false; ///< the start that produced s* met both tolerances
    std::vector<LocalOptimum> local_optima; ///< deduplicated, by objective
    std::vector<StartRecord> starts;
};

/// Most plausible admissible scenario with R(s) <= R*. Throws InfeasibleProblem
/// when neither the starts nor a coarse probe find an admissible breach, and
/// NonConvergence when the probe does but no start ends feasible.
DesignPointResult solve_design_point(const ReferenceModel& model, const CapitalModel& capital,
                                     const ConstraintSet& constraints, const SolverConfig& config = {});

struct ConditionalAnchor {
    bool feasible = false;
    double g = 0.0;
    ScenarioVector s;
    double mahalanobis_sq = 0.0;
    double ratio = 0.0;
};

/// (g_j, x*(g_j)) with x*(g_j) the most plausible companion shock that still
/// breaches at fixed g_j. feasible is false when the slice has no breach.
ConditionalAnchor conditional_anchor(const ReferenceModel& model, const CapitalModel& capital,
                                     const ConstraintSet& constraints, double g_j, const SolverConfig& config = {});

struct GridOracleResult {
    bool feasible = false;
    ScenarioVector s;
    double mahalanobis_sq = 0.0;
    /// Bound on how much d^2 can change within one grid cell around the optimum.
    double cell_slack = 0.0;
    std::size_t feasible_cells = 0;
};

/// Exhaustive resolution x resolution scan of a 2-D box; needs g_max, x_min
/// and x_max. The lower g edge is g_min.
GridOracleResult grid_oracle(const ReferenceModel& model, const CapitalModel& capital,
                             const ConstraintSet& constraints, int resolution, double monotonicity_temperature = 1e-3);

/// Upper end of the default g range: g_max if set, else the 99.9% marginal quantile.
double default_g_upper(const ReferenceModel& model, const ConstraintSet& constraints);

/// n equally spaced points from g_min to default_g_upper, both included.
std::vector<double> default_g_grid(const ReferenceModel& model, const ConstraintSet& constraints, int n = 8);

const char* to_string(StartKind kind);

} // namespace rst
