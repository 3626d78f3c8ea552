// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"
#include "rst/config.hpp"
#include "rst/design_point.hpp"
#include "rst/report.hpp"
#include "rst/scenario_sets.hpp"
#include "rst/sector_view.hpp"
#include "rst/special_functions.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace rst;

namespace {

// Pinned tolerances and budgets.
constexpr double kHalfPlaneTol = 1e-6;
constexpr double kHalfPlaneSeconds = 1.0;
constexpr int kOracleMaps = 10;
constexpr int kOracleResolution = 1001;
constexpr double kOracleSeconds = 30.0;
constexpr double kActivityTol = 1e-6;
constexpr double kMcSigmas = 3.0;
constexpr std::size_t kMcSims = 200000;
constexpr double kMcSeconds = 20.0;
constexpr double kChiExpTol = 1e-12;
constexpr double kCdfTol = 1e-10;
constexpr double kStudentTol = 1e-6;
constexpr double kNearOptimalSlack = 1e-9;
constexpr int kShuffles = 100;
constexpr double kDepletionTol = 1e-15;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

SolverConfig solver(std::uint64_t seed = 1) {
    SolverConfig c;
    c.seed = seed;
    return c;
}

/// Smooth nonlinear 2-D capital maps with a breach set away from the origin.
struct OracleCase {
    ReferenceModel model;
    FunctionCapitalModel capital;
    ConstraintSet box;
};

std::vector<OracleCase> oracle_suite() {
    std::mt19937_64 rng(20240);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<OracleCase> out;
    for (int k = 0; k < kOracleMaps; ++k) {
        const double a = 0.4 + u(rng), b = 0.4 + u(rng), curv = 0.25 * u(rng), wave = 0.3 * u(rng);
        const double c = 1.5 + 2.5 * u(rng), rho = -0.6 + 1.2 * u(rng), sx = 0.7 + 0.8 * u(rng);
        Matrix sigma(2, 2);
        sigma << 1.0, rho * sx, rho * sx, sx * sx;
        const double r0 = 0.12, r_star = r0 * 0.97, slope = 0.01;
        auto h = [=](const ScenarioVector& s) {
            return a * s[0] + b * s[1] + curv * (s[0] - s[1]) * (s[0] - s[1]) + wave * std::sin(s[0] + 0.5 * s[1]) - c;
        };
        auto dh = [=](const ScenarioVector& s) {
            const double dl = s[0] - s[1], cs = wave * std::cos(s[0] + 0.5 * s[1]);
            return vec({a + 2 * curv * dl + cs, b - 2 * curv * dl + 0.5 * cs});
        };
        FunctionCapitalModel capital(
            2, r0, r_star, [=](const ScenarioVector& s) { return r_star - slope * h(s); },
            [=](const ScenarioVector& s) { return Vector(-slope * dh(s)); });
        ConstraintSet box;
        box.g_max = 8.0;
        box.x_min = vec({-8.0});
        box.x_max = vec({8.0});
        out.push_back(OracleCase{ReferenceModel::gaussian(sigma), std::move(capital), box});
    }
    return out;
}

void criterion_half_plane() {
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    const auto capital = affine_capital(vec({1, 1}), 4.0);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = solve_design_point(model, capital, ConstraintSet{}, solver());
    const double elapsed = seconds_since(t0);
    const double err = std::max({std::abs(r.s_star[0] - 2.0), std::abs(r.s_star[1] - 2.0), std::abs(r.mahalanobis_sq - 8.0)});
    report(1, "half-plane closed form", err <= kHalfPlaneTol && elapsed < kHalfPlaneSeconds,
           fmt("s*=(%.10f, %.10f) d2=%.12f max err %.2e (tol %.0e), %.3f s (< %.0f s)", r.s_star[0], r.s_star[1],
               r.mahalanobis_sq, err, kHalfPlaneTol, elapsed, kHalfPlaneSeconds));
}

void criteria_oracle_and_activity() {
    const auto suite = oracle_suite();
    const auto t0 = std::chrono::steady_clock::now();
    int dominated = 0, active = 0, applicable = 0;
    double worst_gap = -INFINITY, worst_activity = 0.0;
    for (const auto& c : suite) {
        const auto r = solve_design_point(c.model, c.capital, c.box, solver(7));
        const auto g = grid_oracle(c.model, c.capital, c.box, kOracleResolution);
        const double gap = r.mahalanobis_sq - (g.mahalanobis_sq + g.cell_slack);
        worst_gap = std::max(worst_gap, gap);
        if (g.feasible && gap <= 0.0) ++dominated;
        if (c.capital.ratio(ScenarioVector::Zero(2)) > c.capital.threshold()) {
            ++applicable;
            const double dev = std::abs(r.ratio_at_optimum - c.capital.threshold()) / c.capital.baseline_ratio();
            worst_activity = std::max(worst_activity, dev);
            if (dev <= kActivityTol) ++active;
        }
    }
    const double elapsed = seconds_since(t0);
    report(2, "grid-oracle dominance", dominated == kOracleMaps && elapsed < kOracleSeconds,
           fmt("%d/%d maps with solver d2 <= grid d2 + cell slack (worst margin %.3e), resolution %d, %.2f s (< %.0f s)",
               dominated, kOracleMaps, worst_gap, kOracleResolution, elapsed, kOracleSeconds));
    report(3, "constraint activity", applicable > 0 && active == applicable,
           fmt("%d/%d maps with |R(s*)-R*| <= %.0e R0 (worst %.2e R0)", active, applicable, kActivityTol, worst_activity));
}

void criterion_vasicek_mc() {
    Portfolio p;
    SectorSensitivities flat;
    flat.sector_id = "k";
    flat.beta = Vector::Zero(1);
    flat.gamma = Vector::Zero(1);
    p.sectors["k"] = flat;
    for (int i = 0; i < 10000; ++i) p.exposures.push_back(ExposureRecord{"e" + std::to_string(i), "k", 1.0, 0.02, 0.5, 0.2, 1.0});
    LossQuantileSpec spec;
    const ScenarioVector s = ScenarioVector::Zero(2);
    const auto t0 = std::chrono::steady_clock::now();
    const double analytic = loss_quantile(p, s, spec);
    const auto mc = mc_loss_quantile(p, s, spec, kMcSims, 99);
    const double elapsed = seconds_since(t0);
    const double z = std::abs(mc.quantile - analytic) / mc.std_error;
    report(4, "Vasicek vs Monte Carlo", z <= kMcSigmas && elapsed < kMcSeconds,
           fmt("analytic %.4f, MC %.4f (se %.4f), |z| = %.3f (<= %.0f), %.2f s (< %.0f s)", analytic, mc.quantile,
               mc.std_error, z, kMcSigmas, elapsed, kMcSeconds));
}

void criterion_chi_squared() {
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    double worst_exp = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double m2 = 0.1 * k;
        worst_exp = std::max(worst_exp, std::abs(model.tail_probability(m2) - std::exp(-0.5 * m2)));
    }
    double worst_cdf = 0.0;
    for (double k : {1.0, 2.0, 3.0, 5.0, 10.0}) {
        for (double x : {0.05, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0}) {
            worst_cdf = std::max(worst_cdf, std::abs(chi_squared_cdf(x, k) - oracle::chi_squared_cdf(x, k)));
        }
    }
    for (double d1 : {2.0, 3.0, 5.0}) {
        for (double d2 : {3.0, 6.0, 30.0}) {
            for (double x : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
                worst_cdf = std::max(worst_cdf, std::abs(fisher_cdf(x, d1, d2) - oracle::fisher_cdf(x, d1, d2)));
            }
        }
    }
    report(5, "chi-squared calibration", worst_exp <= kChiExpTol && worst_cdf <= kCdfTol,
           fmt("max |tail - exp(-m2/2)| %.2e (tol %.0e) over m2 in [0.1, 20]; max CDF error vs quadrature %.2e (tol %.0e)",
               worst_exp, kChiExpTol, worst_cdf, kCdfTol));
}

void criterion_student_t() {
    const auto suite = oracle_suite();
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& c = suite[k];
        const auto gauss = solve_design_point(c.model, c.capital, c.box, solver(3));
        for (double nu : {3.0, 6.0, 30.0}) {
            const auto t = ReferenceModel::student_t(c.model.sigma(), nu);
            const auto r = solve_design_point(t, c.capital, c.box, solver(3));
            worst = std::max(worst, c.model.whiten(r.s_star - gauss.s_star).norm());
        }
    }
    // Heavier tails give larger tail probabilities beyond m2 = d.
    bool ordered = true;
    const auto g = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    const auto t3 = ReferenceModel::student_t(Matrix::Identity(2, 2), 3.0);
    const auto t6 = ReferenceModel::student_t(Matrix::Identity(2, 2), 6.0);
    const auto t30 = ReferenceModel::student_t(Matrix::Identity(2, 2), 30.0);
    for (double m2 : {2.5, 4.0, 8.0, 12.0, 20.0}) {
        ordered = ordered && t3.tail_probability(m2) > t6.tail_probability(m2) &&
                  t6.tail_probability(m2) > t30.tail_probability(m2) && t30.tail_probability(m2) > g.tail_probability(m2);
    }
    report(6, "Student-t minimiser equivalence", worst <= kStudentTol && ordered,
           fmt("max whitened distance to Gaussian s* %.2e (tol %.0e) over 4 maps x nu in {3,6,30}; tail ordering in nu %s",
               worst, kStudentTol, ordered ? "holds" : "violated"));
}

void criterion_membership() {
    const std::filesystem::path data = RST_DATA_DIR;
    auto cfg = load_config(data / "severe.json");
    cfg.sets.pool_size = 1000;
    const auto problem = load_problem(cfg);
    const auto design = solve_design_point(*problem.model, *problem.capital, cfg.constraints, cfg.solver);
    std::size_t checked = 0, passed = 0;
    double worst_excess = -INFINITY;
    const auto grid = default_g_grid(*problem.model, cfg.constraints, cfg.sets.g_grid_points);
    for (const auto target : {TargetSpec::near_optimal(cfg.sets.epsilon), TargetSpec::neighbourhood(cfg.sets.eta)}) {
        PoolOptions opts;
        opts.n_target = cfg.sets.pool_size;
        opts.seed = cfg.seed;
        const auto pool = build_pool(*problem.model, *problem.capital, cfg.constraints, cfg.solver, design, target, grid, opts);
        const auto list = reduce_farthest_point(*problem.model, *problem.capital, pool, design.s_star, cfg.sets.list_size);
        std::vector<ScenarioVector> all;
        for (const auto& e : pool.entries) all.push_back(e.s);
        for (const auto& e : list.entries) all.push_back(e.s);
        for (const auto& s : all) {
            ++checked;
            if (membership(target, *problem.model, *problem.capital, s, design.s_star)) ++passed;
            if (target.set == TargetSet::NearOptimal) {
                worst_excess = std::max(worst_excess, problem.model->mahalanobis_sq(s) - design.mahalanobis_sq - target.radius);
            }
        }
    }
    report(7, "set membership integrity", checked > 0 && passed == checked && worst_excess <= kNearOptimalSlack,
           fmt("%zu/%zu pool and list members re-pass; max d2 - d2* - eps over N_eps = %.3e (<= %.0e)", passed, checked,
               worst_excess, kNearOptimalSlack));
}

void criterion_farthest_point() {
    // 1-D pool embedded on the second axis of an identity model.
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    std::vector<ScenarioVector> pool;
    for (double v : {0.0, 1.0, 2.0, 10.0}) pool.push_back(vec({0.0, v}));
    const auto pick = farthest_point_selection(model, pool, vec({0.0, 0.0}), 3);
    const bool trace = pick.size() == 3 && pick[0][1] == 0.0 && pick[1][1] == 10.0 && pick[2][1] == 2.0;

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    std::vector<ScenarioVector> cloud;
    for (int i = 0; i < 300; ++i) cloud.push_back(vec({n01(rng), n01(rng)}));
    const auto base = farthest_point_selection(model, cloud, vec({0.0, 0.0}), 12);
    int same = 0;
    for (int k = 0; k < kShuffles; ++k) {
        std::shuffle(cloud.begin(), cloud.end(), rng);
        if (farthest_point_selection(model, cloud, vec({0.0, 0.0}), 12) == base) ++same;
    }
    report(8, "farthest-point hand trace", trace && same == kShuffles,
           fmt("selection [%g, %g, %g]; %d/%d shuffles reproduce the selected set", pick[0][1], pick[1][1], pick[2][1],
               same, kShuffles));
}

void criterion_sector_consistency() {
    const std::filesystem::path data = RST_DATA_DIR;
    auto cfg = load_config(data / "severe.json");
    const auto problem = load_problem(cfg);
    // Collapse each sector to its first exposure so both engines see the same book.
    Portfolio one = *problem.portfolio;
    std::vector<ExposureRecord> kept;
    for (const auto& e : one.exposures) {
        if (std::none_of(kept.begin(), kept.end(), [&](const ExposureRecord& k) { return k.sector_id == e.sector_id; }))
            kept.push_back(e);
    }
    one.exposures = kept;
    const auto sectors = sector_portfolio_from_exposures(one);
    LossQuantileSpec spec;
    CapitalState st;
    st.rwa_0 = baseline_irb_rwa(one, spec, true);
    st.cet1_0 = 1.0 * st.rwa_0;
    st.r_star_override = 0.4 * st.r0();
    const auto exposure_model = make_capital_model(one, st, spec, 3);
    const auto sector_model = make_sector_capital_model(sectors, st, spec, 3);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    int mismatches = 0;
    for (int k = 0; k < 200; ++k) {
        ScenarioVector s(3);
        s << n01(rng), n01(rng), n01(rng);
        if (exposure_model.loss_quantile(s) != sector_model.loss_quantile(s) || exposure_model.rwa(s) != sector_model.rwa(s) ||
            exposure_model.ratio(s) != sector_model.ratio(s))
            ++mismatches;
    }
    const auto a = solve_design_point(*problem.model, exposure_model, ConstraintSet{}, solver(5));
    const auto b = solve_design_point(*problem.model, sector_model, ConstraintSet{}, solver(5));
    const bool same_design = a.s_star == b.s_star && a.mahalanobis_sq == b.mahalanobis_sq;
    report(9, "sector/exposure consistency", mismatches == 0 && same_design,
           fmt("%d/200 scenarios differ in L_q, RWA or R; design points %s (d2 %.12f vs %.12f)", mismatches,
               same_design ? "identical" : "differ", a.mahalanobis_sq, b.mahalanobis_sq));
}

void criterion_determinism() {
    const std::filesystem::path data = RST_DATA_DIR;
    auto cfg = load_config(data / "severe.json");
    cfg.sets.pool_size = 600;
    const std::string a = run_design_point(cfg).report.dump(2);
    const std::string b = run_design_point(cfg).report.dump(2);
    const std::string c = run_scenario_list(cfg).report.dump(2);
    const std::string d = run_scenario_list(cfg).report.dump(2);
    cfg.threads = 1;
    const std::string e = run_scenario_list(cfg).report.dump(2);
    report(10, "determinism", a == b && c == d && c == e,
           fmt("design-point reports %s (%zu bytes); scenario-list reports %s (%zu bytes), single-thread rerun %s",
               a == b ? "identical" : "differ", a.size(), c == d ? "identical" : "differ", c.size(),
               c == e ? "identical" : "differs"));
}

void criterion_default_depletion() {
    const std::filesystem::path data = RST_DATA_DIR;
    const auto cfg = load_config(data / "example.json");
    const auto problem = load_problem(cfg);
    const double r0 = problem.state.r0(), r_star = problem.state.r_star();
    const double rel = std::abs(r_star - 0.97 * r0) / r0;
    const auto header = report_header(cfg, "validate");
    const bool recorded = header["defaults"]["depletion"] == 0.03;
    report(11, "default provenance", cfg.capital.depletion == 0.03 && rel <= kDepletionTol && recorded,
           fmt("depletion %.2f, R0 %.6f, R* %.6f, |R* - 0.97 R0|/R0 = %.1e (tol %.0e), default %s in report", cfg.capital.depletion,
               r0, r_star, rel, kDepletionTol, recorded ? "recorded" : "missing"));
}

void guarded(int id, const char* name, const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw: ") + e.what());
    }
}

} // namespace

int main() {
    guarded(1, "half-plane closed form", criterion_half_plane);
    guarded(2, "grid-oracle dominance / constraint activity", criteria_oracle_and_activity);
    guarded(4, "Vasicek vs Monte Carlo", criterion_vasicek_mc);
    guarded(5, "chi-squared calibration", criterion_chi_squared);
    guarded(6, "Student-t minimiser equivalence", criterion_student_t);
    guarded(7, "set membership integrity", criterion_membership);
    guarded(8, "farthest-point hand trace", criterion_farthest_point);
    guarded(9, "sector/exposure consistency", criterion_sector_consistency);
    guarded(10, "determinism", criterion_determinism);
    guarded(11, "default provenance", criterion_default_depletion);
    std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
