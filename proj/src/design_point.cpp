#include "rst/design_point.hpp"

#include "rst/augmented_lagrangian.hpp"
#include "rst/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

namespace rst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRadii[] = {1.0, 2.0, 3.0, 4.0};

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
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

// Affine parametrisation s = A z + offset of the search space. The free block
// is s.tail(k) = offset.tail(k) + L_free z with L_free lower triangular, so
// d^2(s) = base_m2 + |z|^2. The unconditional problem uses the Cholesky factor
// of Sigma; the conditional one fixes g and uses the factor of Sigma_{x|g}.
struct Slice {
    Matrix l_free;
    Vector offset;
    double base_m2 = 0.0;
    Eigen::Index fixed = 0; ///< number of leading fixed coordinates (0 or 1)

    Eigen::Index free_dim() const { return l_free.rows(); }
    ScenarioVector point(const Vector& z) const {
        ScenarioVector s = offset;
        s.tail(free_dim()) += l_free * z;
        return s;
    }
    Vector coordinates(const ScenarioVector& s) const {
        return l_free.triangularView<Eigen::Lower>().solve(s.tail(free_dim()) - offset.tail(free_dim()));
    }
    /// Row i of A as a vector over z.
    Vector row(Eigen::Index i) const {
        if (i < fixed) return Vector::Zero(free_dim());
        return l_free.row(i - fixed).transpose();
    }
    /// A^T v
    Vector pull_back(const Vector& v) const { return l_free.transpose() * v.tail(free_dim()); }
};

Slice unconditional_slice(const ReferenceModel& model) {
    Slice slice;
    slice.l_free = model.chol();
    slice.offset = Vector::Zero(static_cast<Eigen::Index>(model.dimension()));
    return slice;
}

Slice conditional_slice(const ReferenceModel& model, double g) {
    const auto d = static_cast<Eigen::Index>(model.dimension());
    const Matrix& sigma = model.sigma();
    const double s_gg = sigma(0, 0);
    Slice slice;
    slice.fixed = 1;
    slice.base_m2 = g * g / s_gg;
    slice.offset = Vector(d);
    slice.offset[0] = g;
    if (d > 1) {
        const Vector s_xg = sigma.col(0).tail(d - 1);
        slice.offset.tail(d - 1) = s_xg * (g / s_gg);
        const Matrix cond = sigma.bottomRightCorner(d - 1, d - 1) - s_xg * s_xg.transpose() / s_gg;
        Eigen::LLT<Matrix> llt(cond);
        if (llt.info() != Eigen::Success) throw InvalidInput("conditional covariance of x given g is not positive definite");
        slice.l_free = llt.matrixL();
    } else {
        slice.l_free = Matrix(0, 0);
    }
    return slice;
}

double nll_slope(const ReferenceModel& model, double m2) {
    if (model.family() == Family::Gaussian) return 0.5;
    const double nu = model.nu();
    return 0.5 * (nu + static_cast<double>(model.dimension())) / (nu + m2);
}

struct StartOutcome {
    ScenarioVector s;
    double m2 = kInf;
    double ratio = 0.0;
    bool feasible = false;
    bool converged = false;
    int outer = 0;
    int inner = 0;
};

class Engine {
public:
    Engine(const ReferenceModel& model, const CapitalModel& capital, const ConstraintSet& constraints,
           const SolverConfig& config)
        : model_(model), capital_(capital), constraints_(constraints), config_(config),
          r_star_(capital.threshold()), scale_(1.0 / (capital.baseline_ratio() - capital.threshold())) {
        if (capital.dimension() != model.dimension())
            throw InvalidInput("capital model and reference model disagree on the scenario dimension");
        constraints.validate(model.dimension());
        config.validate();
        if (!(scale_ > 0.0 && std::isfinite(scale_)))
            throw InvalidInput("capital threshold must lie strictly below the baseline ratio");
        if (constraints.enforce_monotonicity && !capital.supports_monotonicity())
            throw InvalidInput("monotonicity requested but the capital model does not define it");
    }

    const ReferenceModel& model() const { return model_; }
    const CapitalModel& capital() const { return capital_; }
    const ConstraintSet& constraints() const { return constraints_; }
    const SolverConfig& config() const { return config_; }

    double ratio(const ScenarioVector& s) const { return capital_.ratio(s); }

    Vector ratio_gradient_z(const Slice& slice, const Vector& z) const {
        if (capital_.has_ratio_gradient()) return slice.pull_back(capital_.ratio_gradient(slice.point(z)));
        const double h = config_.fd_step;
        Vector grad(slice.free_dim());
        Vector zp = z;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            zp[k] = z[k] + h;
            const double up = ratio(slice.point(zp));
            zp[k] = z[k] - h;
            const double down = ratio(slice.point(zp));
            zp[k] = z[k];
            grad[k] = (up - down) / (2.0 * h);
        }
        return grad;
    }

    Vector ratio_gradient_s(const ScenarioVector& s) const {
        if (capital_.has_ratio_gradient()) return capital_.ratio_gradient(s);
        const Slice full = unconditional_slice(model_);
        const Vector gy = ratio_gradient_z(full, full.coordinates(s));
        return model_.chol().transpose().triangularView<Eigen::Upper>().solve(gy);
    }

    double monotonicity(const ScenarioVector& s, Vector* gradient) const {
        return capital_.smooth_monotonicity(s, config_.monotonicity_temperature, gradient);
    }

    bool admissible(const ScenarioVector& s, double ratio_slack) const {
        if (!constraints_.within_bounds(s)) return false;
        const double r = ratio(s);
        if (!(r <= r_star_ + ratio_slack)) return false;
        if (constraints_.enforce_monotonicity && !(monotonicity(s, nullptr) <= config_.feasibility_tolerance))
            return false;
        return true;
    }

    optim::Problem problem(const Slice& slice) const {
        optim::Problem p;
        p.objective = [this, &slice](const Vector& z, Vector* grad) {
            const double m2 = slice.base_m2 + z.squaredNorm();
            if (grad) *grad = (2.0 * nll_slope(model_, m2)) * z;
            return model_.neg_log_density_from_m2(m2);
        };
        p.inequalities.push_back([this, &slice](const Vector& z, Vector* grad) {
            const ScenarioVector s = slice.point(z);
            if (grad) *grad = scale_ * ratio_gradient_z(slice, z);
            return scale_ * (ratio(s) - r_star_);
        });
        const auto d = static_cast<Eigen::Index>(model_.dimension());
        for (Eigen::Index i = slice.fixed; i < d; ++i) {
            const Vector a = slice.row(i);
            const double norm = a.norm();
            if (norm == 0.0) continue;
            const double off = slice.offset[i];
            const double lo = constraints_.lower(static_cast<std::size_t>(i));
            const double hi = constraints_.upper(static_cast<std::size_t>(i));
            if (std::isfinite(lo)) {
                p.inequalities.push_back([a, norm, off, lo](const Vector& z, Vector* grad) {
                    if (grad) *grad = -a / norm;
                    return (lo - a.dot(z) - off) / norm;
                });
            }
            if (std::isfinite(hi)) {
                p.inequalities.push_back([a, norm, off, hi](const Vector& z, Vector* grad) {
                    if (grad) *grad = a / norm;
                    return (a.dot(z) + off - hi) / norm;
                });
            }
        }
        if (constraints_.enforce_monotonicity) {
            p.inequalities.push_back([this, &slice](const Vector& z, Vector* grad) {
                Vector gs;
                const double v = monotonicity(slice.point(z), grad ? &gs : nullptr);
                if (grad) *grad = slice.pull_back(gs);
                return v;
            });
        }
        return p;
    }

    // Moves a point that sits on or marginally outside the capital frontier
    // onto its breach side, keeping fixed and bound-active coordinates in place.
    ScenarioVector polish(ScenarioVector s, Eigen::Index fixed) const {
        s = constraints_.clamp(std::move(s));
        const double target = 1e-12 / scale_;
        for (int it = 0; it < 40; ++it) {
            const double gap = ratio(s) - r_star_;
            if (!(gap > -target)) break;
            if (gap * scale_ > 1e-6) break; // too far out: not a near-feasible iterate
            const Vector gs = ratio_gradient_s(s);
            Vector dir = gs;
            bool masked = false;
            for (Eigen::Index j = 0; j < s.size(); ++j) {
                const auto ju = static_cast<std::size_t>(j);
                const bool blocked = j < fixed || (s[j] <= constraints_.lower(ju) && gs[j] > 0.0) ||
                                     (s[j] >= constraints_.upper(ju) && gs[j] < 0.0);
                if (blocked) {
                    dir[j] = 0.0;
                    masked = true;
                }
            }
            if (!masked) dir = model_.sigma() * gs;
            const double denom = gs.dot(dir);
            if (!(denom > 0.0)) break;
            s -= ((gap + target) / denom) * dir;
            s = constraints_.clamp(std::move(s));
        }
        return s;
    }

    StartOutcome run(const Slice& slice, const Vector& z0) const {
        optim::Options options;
        options.initial_penalty = config_.initial_penalty;
        options.penalty_growth = config_.penalty_growth;
        options.penalty_rounds = config_.penalty_rounds;
        options.max_outer_iterations = config_.max_outer_iterations;
        options.max_inner_iterations = config_.max_inner_iterations;
        options.feasibility_tolerance = config_.feasibility_tolerance;
        options.stationarity_tolerance = config_.stationarity_tolerance;

        StartOutcome out;
        optim::Result res;
        if (slice.free_dim() == 0) {
            res.z = z0;
            res.converged = true;
        } else {
            res = optim::minimize(problem(slice), z0, options);
        }
        out.s = polish(slice.point(res.z), slice.fixed);
        out.m2 = model_.mahalanobis_sq(out.s);
        out.ratio = ratio(out.s);
        out.feasible = std::isfinite(out.m2) && admissible(out.s, config_.feasibility_tolerance);
        out.converged = res.converged && out.feasible;
        out.outer = res.outer_iterations;
        out.inner = res.inner_iterations;
        return out;
    }

    // Point on the slice reached by walking from its centre along the steepest
    // descent of R until the threshold is crossed, then bisecting onto the frontier.
    Vector warm_start(const Slice& slice) const {
        const Vector zero = Vector::Zero(slice.free_dim());
        if (slice.free_dim() == 0) return zero;
        const Vector g = ratio_gradient_z(slice, zero);
        const double norm = g.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) return zero;
        const Vector dir = -g / norm;
        auto breach_at = [&](double t) { return ratio(slice.point(t * dir)) <= r_star_; };
        if (breach_at(0.0)) return zero;
        double lo = 0.0;
        double hi = 0.5;
        bool found = false;
        for (int k = 0; k < 9; ++k) {
            if (breach_at(hi)) {
                found = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if (!found) return zero;
        for (int k = 0; k < 30; ++k) {
            const double mid = 0.5 * (lo + hi);
            (breach_at(mid) ? hi : lo) = mid;
        }
        return hi * dir;
    }

    // Coarse search for any admissible breach on the slice: its centre, rays
    // along the whitened axes and random directions at growing radii, and the
    // box corners when every bound is finite.
    std::optional<ScenarioVector> probe(const Slice& slice, std::uint64_t tag) const {
        const auto k = slice.free_dim();
        auto check = [&](const ScenarioVector& s) -> std::optional<ScenarioVector> {
            ScenarioVector c = constraints_.clamp(s);
            for (Eigen::Index j = 0; j < slice.fixed; ++j) c[j] = slice.offset[j];
            if (admissible(c, 0.0)) return c;
            return std::nullopt;
        };
        if (auto hit = check(slice.point(Vector::Zero(k)))) return hit;
        if (k == 0) return std::nullopt;

        std::vector<Vector> directions;
        for (Eigen::Index j = 0; j < k; ++j) {
            directions.push_back(Vector::Unit(k, j));
            directions.push_back(-Vector::Unit(k, j));
        }
        auto rng = stream(config_.seed, tag, 0);
        for (int j = 0; j < 64; ++j) directions.push_back(random_unit(rng, k));
        for (double radius : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
            for (const auto& u : directions) {
                if (auto hit = check(slice.point(radius * u))) return hit;
            }
        }

        const auto d = static_cast<Eigen::Index>(model_.dimension());
        bool finite_box = d - slice.fixed <= 12;
        for (Eigen::Index j = slice.fixed; j < d && finite_box; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            finite_box = std::isfinite(constraints_.lower(ju)) && std::isfinite(constraints_.upper(ju));
        }
        if (finite_box) {
            const auto free = d - slice.fixed;
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free); ++mask) {
                ScenarioVector s = slice.offset;
                for (Eigen::Index j = 0; j < free; ++j) {
                    const auto ju = static_cast<std::size_t>(j + slice.fixed);
                    s[j + slice.fixed] = (mask >> j) & 1 ? constraints_.upper(ju) : constraints_.lower(ju);
                }
                if (auto hit = check(s)) return hit;
            }
        }
        return std::nullopt;
    }

private:
    const ReferenceModel& model_;
    const CapitalModel& capital_;
    const ConstraintSet& constraints_;
    const SolverConfig& config_;
    double r_star_;
    double scale_;
};

StartRecord make_record(int index, StartKind kind, const ScenarioVector& initial, const StartOutcome& out) {
    StartRecord rec;
    rec.index = index;
    rec.kind = kind;
    rec.initial = initial;
    rec.final_point = out.s;
    rec.mahalanobis_sq = out.m2;
    rec.ratio = out.ratio;
    rec.feasible = out.feasible;
    rec.converged = out.converged;
    rec.outer_iterations = out.outer;
    rec.inner_iterations = out.inner;
    return rec;
}

constexpr std::uint64_t kProbeTag = 0x9e0b;
constexpr std::uint64_t kStartTag = 0x5a17;
constexpr std::uint64_t kAnchorTag = 0xa4c7;

} // namespace

void ConstraintSet::validate(std::size_t dimension) const {
    if (!(g_min > 0.0) || !std::isfinite(g_min)) throw InvalidInput("g_min must be a positive finite number");
    if (g_max && !(*g_max > g_min)) throw InvalidInput("g_max must exceed g_min");
    const auto n = static_cast<Eigen::Index>(dimension) - 1;
    if (x_min && x_min->size() != n) throw InvalidInput("x_min has the wrong number of entries");
    if (x_max && x_max->size() != n) throw InvalidInput("x_max has the wrong number of entries");
    if (x_min && x_max) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!((*x_min)[i] < (*x_max)[i])) throw InvalidInput("x_min must be below x_max in every coordinate");
        }
    }
}

double ConstraintSet::lower(std::size_t i) const {
    if (i == 0) return g_min;
    if (!x_min) return -kInf;
    const double v = (*x_min)[static_cast<Eigen::Index>(i) - 1];
    return std::isnan(v) ? -kInf : v;
}

double ConstraintSet::upper(std::size_t i) const {
    if (i == 0) return g_max ? *g_max : kInf;
    if (!x_max) return kInf;
    const double v = (*x_max)[static_cast<Eigen::Index>(i) - 1];
    return std::isnan(v) ? kInf : v;
}

bool ConstraintSet::within_bounds(const ScenarioVector& s) const {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        if (!(s[i] >= lower(iu) && s[i] <= upper(iu))) return false;
    }
    return true;
}

ScenarioVector ConstraintSet::clamp(ScenarioVector s) const {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        s[i] = std::clamp(s[i], lower(iu), upper(iu));
    }
    return s;
}

void SolverConfig::validate() const {
    if (n_starts < 1) throw InvalidInput("n_starts must be at least 1");
    if (!(initial_penalty > 0.0) || !(penalty_growth > 1.0) || penalty_rounds < 0)
        throw InvalidInput("penalty schedule needs a positive weight and growth above 1");
    if (max_outer_iterations < 1 || max_inner_iterations < 1) throw InvalidInput("iteration limits must be positive");
    if (!(fd_step > 0.0) || !(feasibility_tolerance > 0.0) || !(stationarity_tolerance > 0.0) ||
        !(dedup_radius > 0.0) || !(monotonicity_temperature > 0.0))
        throw InvalidInput("solver tolerances must be positive");
}

const char* to_string(StartKind kind) {
    switch (kind) {
    case StartKind::Sphere: return "sphere";
    case StartKind::GridAnchor: return "g_grid";
    case StartKind::Probe: return "probe";
    }
    return "unknown";
}

double default_g_upper(const ReferenceModel& model, const ConstraintSet& constraints) {
    const double upper = constraints.g_max ? *constraints.g_max : model.marginal_quantile(0, 0.999);
    if (!(upper > constraints.g_min)) throw InvalidInput("the g range above g_min is empty");
    return upper;
}

std::vector<double> default_g_grid(const ReferenceModel& model, const ConstraintSet& constraints, int n) {
    if (n < 1) throw InvalidInput("g grid needs at least one point");
    const double lo = constraints.g_min;
    const double hi = default_g_upper(model, constraints);
    std::vector<double> grid(static_cast<std::size_t>(n), lo);
    for (int i = 1; i < n; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return grid;
}

DesignPointResult solve_design_point(const ReferenceModel& model, const CapitalModel& capital,
                                     const ConstraintSet& constraints, const SolverConfig& config) {
    const Engine engine(model, capital, constraints, config);
    const Slice full = unconditional_slice(model);
    const auto d = static_cast<Eigen::Index>(model.dimension());

    const int n = config.n_starts;
    const int n_sphere = (n + 1) / 2;
    const int n_grid = n - n_sphere;
    std::vector<double> g_values;
    if (n_grid == 1) {
        g_values.push_back(0.5 * (constraints.g_min + default_g_upper(model, constraints)));
    } else if (n_grid > 1) {
        g_values = default_g_grid(model, constraints, n_grid);
    }

    std::vector<ScenarioVector> initial(static_cast<std::size_t>(n));
    std::vector<StartOutcome> outcomes(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), config.threads, [&](std::size_t i) {
        Vector z0;
        if (static_cast<int>(i) < n_sphere) {
            auto rng = stream(config.seed, kStartTag, i);
            z0 = kRadii[i % 4] * random_unit(rng, d);
        } else {
            const Slice slice = conditional_slice(model, g_values[i - static_cast<std::size_t>(n_sphere)]);
            z0 = full.coordinates(slice.point(engine.warm_start(slice)));
        }
        initial[i] = full.point(z0);
        outcomes[i] = engine.run(full, z0);
    });

    DesignPointResult result;
    for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        result.starts.push_back(
            make_record(i, i < n_sphere ? StartKind::Sphere : StartKind::GridAnchor, initial[iu], outcomes[iu]));
    }

    const bool any_feasible = std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.feasible; });
    if (!any_feasible) {
        const auto hit = engine.probe(full, kProbeTag);
        if (!hit) throw InfeasibleProblem("no admissible scenario breaches the capital threshold within the bounds");
        const StartOutcome rescue = engine.run(full, full.coordinates(*hit));
        result.starts.push_back(make_record(n, StartKind::Probe, *hit, rescue));
        outcomes.push_back(rescue);
        if (!rescue.feasible) throw NonConvergence("no solver start ended at an admissible breach scenario", *hit);
    }

    // Deduplicate feasible end points, lowest d^2 first.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].feasible) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return outcomes[a].m2 < outcomes[b].m2; });
    std::vector<Vector> kept_white;
    std::vector<bool> kept_converged;
    for (std::size_t i : order) {
        const Vector y = model.whiten(outcomes[i].s);
        bool duplicate = false;
        for (std::size_t k = 0; k < kept_white.size(); ++k) {
            if ((kept_white[k] - y).norm() <= config.dedup_radius) {
                duplicate = true;
                if (outcomes[i].converged) kept_converged[k] = true;
                break;
            }
        }
        if (duplicate) continue;
        kept_white.push_back(y);
        kept_converged.push_back(outcomes[i].converged);
        LocalOptimum opt;
        opt.s = outcomes[i].s;
        opt.mahalanobis_sq = outcomes[i].m2;
        opt.objective = model.neg_log_density_from_m2(outcomes[i].m2);
        opt.ratio = outcomes[i].ratio;
        opt.start = static_cast<int>(i);
        result.local_optima.push_back(opt);
    }

    // Optima whose d^2 agree to rounding are ties; the smallest whitened
    // coordinates (lexicographic) win.
    const double best = result.local_optima.front().mahalanobis_sq;
    const double tie = 1e-9 * std::max(1.0, best);
    std::size_t chosen = 0;
    for (std::size_t k = 1; k < result.local_optima.size(); ++k) {
        if (result.local_optima[k].mahalanobis_sq > best + tie) break;
        if (lexicographically_less(kept_white[k], kept_white[chosen])) chosen = k;
    }
    if (chosen != 0) {
        std::swap(result.local_optima[0], result.local_optima[chosen]);
        std::swap(kept_converged[0], kept_converged[chosen]);
    }

    const LocalOptimum& star = result.local_optima.front();
    const PlausibilityScore score = model.plausibility_from_m2(star.mahalanobis_sq);
    result.s_star = star.s;
    result.mahalanobis_sq = star.mahalanobis_sq;
    result.tail_probability = score.tail_probability;
    result.rarity = score.rarity;
    result.objective = star.objective;
    result.ratio_at_optimum = star.ratio;
    result.threshold = capital.threshold();
    result.active = std::abs(star.ratio - capital.threshold()) <= 1e-6 * capital.baseline_ratio();
    result.converged = kept_converged[0];
    return result;
}

ConditionalAnchor conditional_anchor(const ReferenceModel& model, const CapitalModel& capital,
                                     const ConstraintSet& constraints, double g_j, const SolverConfig& config) {
    const Engine engine(model, capital, constraints, config);
    if (!(g_j >= constraints.g_min) || (constraints.g_max && g_j > *constraints.g_max))
        throw InvalidInput("conditional anchor g lies outside [g_min, g_max]");

    const Slice slice = conditional_slice(model, g_j);
    const auto k = slice.free_dim();
    const std::uint64_t g_bits = std::bit_cast<std::uint64_t>(g_j);

    std::vector<Vector> starts{engine.warm_start(slice)};
    const int n_extra = k == 0 ? 0 : std::min(config.n_starts, 8) - 1;
    for (int i = 0; i < n_extra; ++i) {
        auto rng = stream(config.seed ^ g_bits, kAnchorTag, static_cast<std::uint64_t>(i));
        starts.push_back(kRadii[i % 4] * random_unit(rng, k));
    }
    std::vector<StartOutcome> outcomes(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) outcomes[i] = engine.run(slice, starts[i]);

    const StartOutcome* best = nullptr;
    auto better = [&](const StartOutcome& a, const StartOutcome& b) {
        if (a.m2 < b.m2 - 1e-9 * std::max(1.0, b.m2)) return true;
        if (a.m2 > b.m2 + 1e-9 * std::max(1.0, b.m2)) return false;
        return lexicographically_less(model.whiten(a.s), model.whiten(b.s));
    };
    for (const auto& o : outcomes) {
        if (o.feasible && (!best || better(o, *best))) best = &o;
    }
    StartOutcome rescue;
    if (!best) {
        const auto hit = engine.probe(slice, kProbeTag ^ g_bits);
        if (!hit) return ConditionalAnchor{false, g_j, {}, 0.0, 0.0};
        rescue = engine.run(slice, slice.coordinates(*hit));
        if (!rescue.feasible) return ConditionalAnchor{false, g_j, {}, 0.0, 0.0};
        best = &rescue;
    }
    return ConditionalAnchor{true, g_j, best->s, best->m2, best->ratio};
}

GridOracleResult grid_oracle(const ReferenceModel& model, const CapitalModel& capital,
                             const ConstraintSet& constraints, int resolution, double monotonicity_temperature) {
    if (model.dimension() != 2 || capital.dimension() != 2) throw InvalidInput("grid oracle needs a 2-D problem");
    if (resolution < 2) throw InvalidInput("grid resolution must be at least 2");
    constraints.validate(2);
    const double g_lo = constraints.lower(0), g_hi = constraints.upper(0);
    const double x_lo = constraints.lower(1), x_hi = constraints.upper(1);
    if (!std::isfinite(g_hi) || !std::isfinite(x_lo) || !std::isfinite(x_hi))
        throw InvalidInput("grid oracle needs finite bounds on g and x");

    const Matrix inv = model.sigma().inverse();
    const double hg = (g_hi - g_lo) / (resolution - 1);
    const double hx = (x_hi - x_lo) / (resolution - 1);
    const double r_star = capital.threshold();

    GridOracleResult out;
    out.mahalanobis_sq = kInf;
    ScenarioVector s(2);
    for (int i = 0; i < resolution; ++i) {
        s[0] = i + 1 == resolution ? g_hi : g_lo + i * hg;
        for (int j = 0; j < resolution; ++j) {
            s[1] = j + 1 == resolution ? x_hi : x_lo + j * hx;
            if (!(capital.ratio(s) <= r_star)) continue;
            if (constraints.enforce_monotonicity &&
                !(capital.smooth_monotonicity(s, monotonicity_temperature, nullptr) <= 0.0))
                continue;
            ++out.feasible_cells;
            const double m2 = inv(0, 0) * s[0] * s[0] + 2.0 * inv(0, 1) * s[0] * s[1] + inv(1, 1) * s[1] * s[1];
            if (m2 < out.mahalanobis_sq) {
                out.mahalanobis_sq = m2;
                out.s = s;
            }
        }
    }
    out.feasible = out.feasible_cells > 0;
    if (out.feasible) {
        const double diag = std::hypot(hg, hx);
        const double lambda_max = Eigen::SelfAdjointEigenSolver<Matrix>(inv).eigenvalues().maxCoeff();
        out.cell_slack = diag * (2.0 * inv * out.s).norm() + diag * diag * lambda_max;
    } else {
        out.mahalanobis_sq = 0.0;
    }
    return out;
}

} // namespace rst
