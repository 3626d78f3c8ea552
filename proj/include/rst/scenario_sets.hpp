#pragma once

#include "rst/capital.hpp"
#include "rst/design_point.hpp"
#include "rst/reference_model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rst {

enum class TargetSet {
    Neighbourhood, ///< S_eta: breach and d^2(s - s*) <= eta
    NearOptimal,   ///< N_eps: breach, g > 0 and nll(s) <= nll(s*) + eps / 2
};

struct TargetSpec {
    TargetSet set = TargetSet::NearOptimal;
    double radius = 1.0; ///< eta or epsilon

    static TargetSpec neighbourhood(double eta) { return {TargetSet::Neighbourhood, eta}; }
    static TargetSpec near_optimal(double epsilon) { return {TargetSet::NearOptimal, epsilon}; }
    void validate() const;
    /// Whitened radius interval used for local draws around an anchor.
    double local_radius() const;
};

const char* to_string(TargetSet set);

/// Yes/no test for one target set, bound to a design point. Boundaries are inclusive.
class Membership {
public:
    Membership(const ReferenceModel& model, const CapitalModel& capital, ScenarioVector s_star, TargetSpec target);

    bool operator()(const ScenarioVector& s) const;
    const TargetSpec& target() const { return target_; }
    const ScenarioVector& s_star() const { return s_star_; }

private:
    const ReferenceModel& model_;
    const CapitalModel& capital_;
    ScenarioVector s_star_;
    TargetSpec target_;
    double nll_star_;
};

bool membership(const TargetSpec& target, const ReferenceModel& model, const CapitalModel& capital,
                const ScenarioVector& s, const ScenarioVector& s_star);

using MembershipFn = std::function<bool(const ScenarioVector&)>;

struct LocalSample {
    std::vector<ScenarioVector> accepted;
    std::size_t drawn = 0;
    double acceptance_rate = 0.0;
    bool thin = false; ///< acceptance below 1%
};

/// Draws s = unwhiten(whiten(anchor) + r u) with u uniform on the unit sphere
/// and r uniform on [r_lo, r_hi]; keeps the draws that pass `member`.
LocalSample local_sample(const ReferenceModel& model, const ScenarioVector& anchor, double r_lo, double r_hi,
                         std::size_t n, std::uint64_t seed, const MembershipFn& member);

struct HitAndRunOptions {
    double initial_step = 1.0; ///< whitened units
    int max_expansions = 30;   ///< bracket doubles at most this often
    int bisection_iterations = 40;
    int max_shrinks = 60;
};

struct HitAndRunChain {
    std::vector<ScenarioVector> points; ///< one per step
    std::size_t stalls = 0;
    bool stall_warning = false; ///< more than half of the steps stalled
};

/// Hit-and-run walk driven only by the membership oracle. Along each random
/// whitened direction the chord through the current point is bracketed by
/// doubling and bisection; draws that miss the set shrink the chord towards
/// the current point.
HitAndRunChain hit_and_run(const ReferenceModel& model, const ScenarioVector& start, std::size_t n_steps,
                           std::uint64_t seed, const MembershipFn& member, const HitAndRunOptions& options = {});

enum class Origin { Anchor, GridAnchor, LocalDraw, HitAndRun };
const char* to_string(Origin origin);

struct PoolEntry {
    ScenarioVector s;
    Origin origin = Origin::Anchor;
    int anchor = 0;      ///< index into CandidatePool::anchors
};

struct PoolAnchor {
    ScenarioVector s;
    Origin origin = Origin::Anchor;
    double g_grid_value = 0.0; ///< for grid anchors
};

struct CandidatePool {
    TargetSpec target;
    std::vector<PoolAnchor> anchors;
    std::vector<PoolEntry> entries; ///< anchors first, then draws by anchor
    std::vector<std::string> warnings;
    std::size_t skipped_grid_points = 0;
};

struct PoolOptions {
    std::size_t n_target = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    HitAndRunOptions hit_and_run;
};

/// Anchors are s*, the other local optima and the conditional anchors on
/// g_grid, each kept only if it passes membership; local draws are taken
/// around every anchor, switching to hit-and-run where acceptance is thin.
CandidatePool build_pool(const ReferenceModel& model, const CapitalModel& capital, const ConstraintSet& constraints,
                         const SolverConfig& solver, const DesignPointResult& design, const TargetSpec& target,
                         const std::vector<double>& g_grid, const PoolOptions& options = {});

/// Greedy maximin selection in whitened space starting from s_star. Ties go to
/// the lexicographically smallest whitened point. Returns P points, s_star first.
std::vector<ScenarioVector> farthest_point_selection(const ReferenceModel& model, const std::vector<ScenarioVector>& pool,
                                                     const ScenarioVector& s_star, std::size_t p);

struct Driver {
    std::size_t index = 0;
    std::string label;
    int sign = 0;
    double magnitude = 0.0;
};

struct DriverDecomposition {
    double g = 0.0;
    std::vector<Driver> top;
};

/// Top-k whitened coordinates by absolute value; ties keep factor order.
DriverDecomposition driver_decomposition(const ReferenceModel& model, const ScenarioVector& s, std::size_t k);

struct ScenarioEntry {
    ScenarioVector s;
    double ratio = 0.0;
    double mahalanobis_sq = 0.0;
    double tail_probability = 1.0;
    double rarity = 0.0;
    DriverDecomposition drivers;
};

struct ScenarioList {
    TargetSpec target;
    std::vector<ScenarioEntry> entries;
};

ScenarioList reduce_farthest_point(const ReferenceModel& model, const CapitalModel& capital,
                                   const CandidatePool& pool, const ScenarioVector& s_star, std::size_t p,
                                   std::size_t k = 3);

} // namespace rst
