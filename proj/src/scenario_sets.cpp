#include "rst/scenario_sets.hpp"

#include "rst/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace rst {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(a),
                      static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

Vector random_unit(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> normal;
    Vector u(n);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
        norm = u.norm();
    }
    return u / norm;
}

bool lexicographically_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

constexpr std::uint64_t kLocalTag = 0x10ca1;
constexpr std::uint64_t kChainTag = 0xc4a1;

} // namespace

void TargetSpec::validate() const {
    if (!(radius >= 0.0) || !std::isfinite(radius))
        throw InvalidInput(set == TargetSet::Neighbourhood ? "eta must be a non-negative finite number"
                                                           : "epsilon must be a non-negative finite number");
}

double TargetSpec::local_radius() const { return std::sqrt(radius); }

const char* to_string(TargetSet set) {
    return set == TargetSet::Neighbourhood ? "neighbourhood" : "near-optimal";
}

const char* to_string(Origin origin) {
    switch (origin) {
    case Origin::Anchor: return "anchor";
    case Origin::GridAnchor: return "grid_anchor";
    case Origin::LocalDraw: return "local_draw";
    case Origin::HitAndRun: return "hit_and_run";
    }
    return "unknown";
}

Membership::Membership(const ReferenceModel& model, const CapitalModel& capital, ScenarioVector s_star,
                       TargetSpec target)
    : model_(model), capital_(capital), s_star_(std::move(s_star)), target_(target),
      nll_star_(model.neg_log_density(s_star_)) {
    target.validate();
}

bool Membership::operator()(const ScenarioVector& s) const {
    if (!capital_.breach(s)) return false;
    if (target_.set == TargetSet::Neighbourhood) return model_.mahalanobis_sq(s - s_star_) <= target_.radius;
    if (!(geopolitical(s) > 0.0)) return false;
    return model_.neg_log_density(s) <= nll_star_ + 0.5 * target_.radius;
}

bool membership(const TargetSpec& target, const ReferenceModel& model, const CapitalModel& capital,
                const ScenarioVector& s, const ScenarioVector& s_star) {
    return Membership(model, capital, s_star, target)(s);
}

LocalSample local_sample(const ReferenceModel& model, const ScenarioVector& anchor, double r_lo, double r_hi,
                         std::size_t n, std::uint64_t seed, const MembershipFn& member) {
    if (!(r_lo >= 0.0) || !(r_hi >= r_lo)) throw InvalidInput("local draw radius interval is invalid");
    const Vector y0 = model.whiten(anchor);
    auto rng = stream(seed, kLocalTag, 0);
    std::uniform_real_distribution<double> radius(r_lo, r_hi);

    LocalSample out;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector u = random_unit(rng, y0.size());
        const double r = r_hi > r_lo ? radius(rng) : r_lo;
        ScenarioVector s = model.unwhiten(y0 + r * u);
        if (member(s)) out.accepted.push_back(std::move(s));
    }
    out.drawn = n;
    out.acceptance_rate = n ? static_cast<double>(out.accepted.size()) / static_cast<double>(n) : 0.0;
    out.thin = n > 0 && out.acceptance_rate < 0.01;
    return out;
}

HitAndRunChain hit_and_run(const ReferenceModel& model, const ScenarioVector& start, std::size_t n_steps,
                           std::uint64_t seed, const MembershipFn& member, const HitAndRunOptions& options) {
    if (!member(start)) throw InvalidInput("hit-and-run start point is not a member of the target set");
    Vector y = model.whiten(start);
    ScenarioVector current = start;
    auto rng = stream(seed, kChainTag, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    HitAndRunChain chain;
    chain.points.reserve(n_steps);
    for (std::size_t step = 0; step < n_steps; ++step) {
        const Vector u = random_unit(rng, y.size());
        auto inside = [&](double t) { return member(model.unwhiten(y + t * u)); };
        // Distance from the current point to the set boundary along sign * u.
        auto reach = [&](double sign) {
            double t_in = 0.0;
            double t = options.initial_step;
            bool escaped = false;
            for (int e = 0; e <= options.max_expansions; ++e) {
                if (!inside(sign * t)) {
                    escaped = true;
                    break;
                }
                t_in = t;
                t *= 2.0;
            }
            if (!escaped) return t_in;
            double hi = t;
            for (int b = 0; b < options.bisection_iterations; ++b) {
                const double mid = 0.5 * (t_in + hi);
                (inside(sign * mid) ? t_in : hi) = mid;
            }
            return t_in;
        };
        double upper = reach(1.0);
        double lower = -reach(-1.0);

        bool moved = false;
        for (int k = 0; k < options.max_shrinks && upper - lower >= 1e-10; ++k) {
            const double t = lower + (upper - lower) * unit(rng);
            ScenarioVector candidate = model.unwhiten(y + t * u);
            if (member(candidate)) {
                y += t * u;
                current = std::move(candidate);
                moved = true;
                break;
            }
            (t > 0.0 ? upper : lower) = t;
        }
        if (!moved) ++chain.stalls;
        chain.points.push_back(current);
    }
    chain.stall_warning = n_steps > 0 && 2 * chain.stalls > n_steps;
    return chain;
}

CandidatePool build_pool(const ReferenceModel& model, const CapitalModel& capital, const ConstraintSet& constraints,
                         const SolverConfig& solver, const DesignPointResult& design, const TargetSpec& target,
                         const std::vector<double>& g_grid, const PoolOptions& options) {
    const Membership member(model, capital, design.s_star, target);
    CandidatePool pool;
    pool.target = target;

    std::vector<Vector> anchor_white;
    auto add_anchor = [&](const ScenarioVector& s, Origin origin, double g) {
        if (!member(s)) return false;
        const Vector y = model.whiten(s);
        for (const auto& other : anchor_white) {
            if ((other - y).norm() <= solver.dedup_radius) return true;
        }
        anchor_white.push_back(y);
        pool.anchors.push_back(PoolAnchor{s, origin, g});
        return true;
    };

    add_anchor(design.s_star, Origin::Anchor, 0.0);
    for (std::size_t i = 1; i < design.local_optima.size(); ++i)
        add_anchor(design.local_optima[i].s, Origin::Anchor, 0.0);

    std::vector<ConditionalAnchor> grid_anchors(g_grid.size());
    parallel_for(g_grid.size(), options.threads, [&](std::size_t j) {
        const double g = g_grid[j];
        if (!(g >= constraints.g_min) || (constraints.g_max && g > *constraints.g_max)) return;
        grid_anchors[j] = conditional_anchor(model, capital, constraints, g, solver);
    });
    for (std::size_t j = 0; j < g_grid.size(); ++j) {
        if (!grid_anchors[j].feasible || !add_anchor(grid_anchors[j].s, Origin::GridAnchor, g_grid[j]))
            ++pool.skipped_grid_points;
    }
    if (pool.anchors.empty()) throw Error("no anchor passes the membership test of the target set");

    const std::size_t n_anchors = pool.anchors.size();
    const std::size_t remaining = options.n_target > n_anchors ? options.n_target - n_anchors : 0;
    const std::size_t quota = (remaining + n_anchors - 1) / n_anchors;
    const double r_hi = target.local_radius();
    const MembershipFn oracle = [&member](const ScenarioVector& s) { return member(s); };

    struct AnchorDraws {
        std::vector<ScenarioVector> local;
        std::vector<ScenarioVector> chain;
        bool thin = false;
        double acceptance = 0.0;
        bool stall_warning = false;
    };
    std::vector<AnchorDraws> draws(n_anchors);
    parallel_for(n_anchors, options.threads, [&](std::size_t a) {
        AnchorDraws& out = draws[a];
        if (quota == 0) return;
        const std::size_t batch = std::max<std::size_t>(quota, 100);
        std::size_t drawn = 0;
        for (std::uint64_t round = 0; round < 20 && out.local.size() < quota; ++round) {
            const std::uint64_t seed = stream(options.seed, kLocalTag, a, round)();
            LocalSample sample = local_sample(model, pool.anchors[a].s, 0.0, r_hi, batch, seed, oracle);
            drawn += sample.drawn;
            for (auto& s : sample.accepted) out.local.push_back(std::move(s));
            if (sample.thin) {
                out.thin = true;
                break;
            }
        }
        out.acceptance = drawn ? static_cast<double>(out.local.size()) / static_cast<double>(drawn) : 0.0;
        if (out.local.size() > quota) out.local.resize(quota);
        if (out.local.size() < quota) {
            const std::uint64_t seed = stream(options.seed, kChainTag, a)();
            HitAndRunChain chain =
                hit_and_run(model, pool.anchors[a].s, quota - out.local.size(), seed, oracle, options.hit_and_run);
            out.chain = std::move(chain.points);
            out.stall_warning = chain.stall_warning;
        }
    });

    for (std::size_t a = 0; a < n_anchors; ++a)
        pool.entries.push_back(PoolEntry{pool.anchors[a].s, pool.anchors[a].origin, static_cast<int>(a)});
    for (std::size_t a = 0; a < n_anchors; ++a) {
        const auto anchor = static_cast<int>(a);
        for (auto& s : draws[a].local) pool.entries.push_back(PoolEntry{std::move(s), Origin::LocalDraw, anchor});
        for (auto& s : draws[a].chain) pool.entries.push_back(PoolEntry{std::move(s), Origin::HitAndRun, anchor});
        std::ostringstream msg;
        if (draws[a].thin) {
            msg << "anchor " << a << ": local acceptance " << draws[a].acceptance
                << " below 1%, switched to hit-and-run";
            pool.warnings.push_back(msg.str());
        }
        if (draws[a].stall_warning)
            pool.warnings.push_back("anchor " + std::to_string(a) + ": hit-and-run stalled on most steps");
    }
    if (pool.entries.size() < options.n_target) {
        pool.warnings.push_back("pool holds " + std::to_string(pool.entries.size()) + " of the requested " +
                                std::to_string(options.n_target) + " scenarios");
    }
    return pool;
}

std::vector<ScenarioVector> farthest_point_selection(const ReferenceModel& model, const std::vector<ScenarioVector>& pool,
                                                     const ScenarioVector& s_star, std::size_t p) {
    if (p == 0) throw InvalidInput("scenario list size must be at least 1");
    if (p > pool.size() + 1) throw InvalidInput("scenario list size exceeds the pool size plus the design point");

    std::vector<Vector> white;
    white.reserve(pool.size());
    for (const auto& s : pool) white.push_back(model.whiten(s));
    const Vector y_star = model.whiten(s_star);

    std::vector<double> nearest(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) nearest[i] = (white[i] - y_star).squaredNorm();
    std::vector<bool> used(pool.size(), false);

    std::vector<ScenarioVector> selected{s_star};
    while (selected.size() < p) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            if (best == pool.size() || nearest[i] > nearest[best] ||
                (nearest[i] == nearest[best] && lexicographically_less(white[i], white[best])))
                best = i;
        }
        used[best] = true;
        selected.push_back(pool[best]);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!used[i]) nearest[i] = std::min(nearest[i], (white[i] - white[best]).squaredNorm());
        }
    }
    return selected;
}

DriverDecomposition driver_decomposition(const ReferenceModel& model, const ScenarioVector& s, std::size_t k) {
    if (k > model.dimension()) throw InvalidInput("driver count exceeds the scenario dimension");
    const Vector y = model.whiten(s);
    std::vector<std::size_t> order(static_cast<std::size_t>(y.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(y[static_cast<Eigen::Index>(a)]) > std::abs(y[static_cast<Eigen::Index>(b)]);
    });
    DriverDecomposition out;
    out.g = geopolitical(s);
    for (std::size_t j = 0; j < k; ++j) {
        const double v = y[static_cast<Eigen::Index>(order[j])];
        out.top.push_back(Driver{order[j], model.factor_names()[order[j]], (v > 0.0) - (v < 0.0), std::abs(v)});
    }
    return out;
}

ScenarioList reduce_farthest_point(const ReferenceModel& model, const CapitalModel& capital,
                                   const CandidatePool& pool, const ScenarioVector& s_star, std::size_t p,
                                   std::size_t k) {
    std::vector<ScenarioVector> points;
    points.reserve(pool.entries.size());
    for (const auto& e : pool.entries) points.push_back(e.s);
    const auto selected = farthest_point_selection(model, points, s_star, p);

    ScenarioList list;
    list.target = pool.target;
    for (const auto& s : selected) {
        ScenarioEntry entry;
        entry.s = s;
        entry.ratio = capital.ratio(s);
        const PlausibilityScore score = model.plausibility(s);
        entry.mahalanobis_sq = score.mahalanobis_sq;
        entry.tail_probability = score.tail_probability;
        entry.rarity = score.rarity;
        entry.drivers = driver_decomposition(model, s, std::min(k, model.dimension()));
        list.entries.push_back(std::move(entry));
    }
    return list;
}

} // namespace rst
