#include "rst/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace rst {

using nlohmann::ordered_json;

namespace {

std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ordered_json capital_json(const LoadedProblem& p) {
    const CapitalBreakdown base = p.capital->evaluate(ScenarioVector::Zero(static_cast<Eigen::Index>(p.model->dimension())));
    return {{"cet1_0", p.state.cet1_0},
            {"rwa_0", p.state.rwa_0},
            {"r0", p.state.r0()},
            {"depletion", p.state.depletion},
            {"r_star", p.state.r_star()},
            {"ratio_at_zero", base.ratio},
            {"baseline_loss_quantile", base.baseline_loss},
            {"n_credit_lines", p.capital->lines().size()}};
}

Portfolio as_exposure_portfolio(const LoadedProblem& p) {
    if (p.portfolio) return *p.portfolio;
    Portfolio out;
    out.lgd_saturation = p.sectors->lgd_saturation;
    out.sign_constraints = p.sectors->sign_constraints;
    for (const auto& k : p.sectors->sectors) {
        out.exposures.push_back(ExposureRecord{k.sector_id, k.sector_id, k.ead, k.pd0, k.lgd0, k.rho, k.maturity.value_or(1.0)});
        out.sectors.emplace(k.sector_id, k.loadings);
    }
    return out;
}

std::vector<double> resolved_g_grid(const RunConfig& config, const ReferenceModel& model) {
    if (config.sets.g_grid) return *config.sets.g_grid;
    return default_g_grid(model, config.constraints, config.sets.g_grid_points);
}

Outcome non_convergence_outcome(ordered_json report, const ReferenceModel& model, const NonConvergence& e) {
    report["status"] = "non_convergence";
    report["message"] = e.what();
    report["best_iterate"] = scenario_json(model, e.best_iterate());
    return {std::move(report), exit_code::non_convergence};
}

} // namespace

const char* engine_version() { return RST_ENGINE_VERSION; }

ordered_json report_header(const RunConfig& config, const std::string& command) {
    ordered_json h;
    h["engine"] = {{"name", "rst"}, {"version", engine_version()}};
    h["command"] = command;
    h["config_hash"] = config_hash(config);
    h["seed"] = config.seed;
    h["defaults"] = {{"q", config.capital.q},
                     {"depletion", config.capital.depletion},
                     {"g_min", config.constraints.g_min},
                     {"pool_size", config.sets.pool_size},
                     {"list_size", config.sets.list_size},
                     {"drivers", config.sets.drivers}};
    h["config"] = effective_config(config);
    return h;
}

ordered_json scenario_json(const ReferenceModel& model, const ScenarioVector& s) {
    ordered_json out = ordered_json::object();
    for (std::size_t i = 0; i < model.dimension(); ++i) out[model.factor_names()[i]] = s[static_cast<Eigen::Index>(i)];
    return out;
}

ordered_json design_point_json(const ReferenceModel& model, const DesignPointResult& r) {
    ordered_json out;
    out["s_star"] = scenario_json(model, r.s_star);
    out["mahalanobis_sq"] = r.mahalanobis_sq;
    out["tail_probability"] = r.tail_probability;
    out["rarity"] = r.rarity;
    out["objective"] = r.objective;
    out["ratio"] = r.ratio_at_optimum;
    out["r_star"] = r.threshold;
    out["active"] = r.active;
    out["converged"] = r.converged;
    ordered_json optima = ordered_json::array();
    for (const auto& o : r.local_optima) {
        optima.push_back({{"s", scenario_json(model, o.s)},
                          {"mahalanobis_sq", o.mahalanobis_sq},
                          {"objective", o.objective},
                          {"ratio", o.ratio},
                          {"start", o.start}});
    }
    out["local_optima"] = std::move(optima);
    ordered_json starts = ordered_json::array();
    for (const auto& st : r.starts) {
        starts.push_back({{"index", st.index},
                          {"kind", to_string(st.kind)},
                          {"initial", scenario_json(model, st.initial)},
                          {"final", scenario_json(model, st.final_point)},
                          {"mahalanobis_sq", st.mahalanobis_sq},
                          {"ratio", st.ratio},
                          {"feasible", st.feasible},
                          {"converged", st.converged},
                          {"outer_iterations", st.outer_iterations},
                          {"inner_iterations", st.inner_iterations}});
    }
    out["starts"] = std::move(starts);
    return out;
}

ordered_json sector_table(const LoadedProblem& p, const ScenarioVector& s) {
    ordered_json rows = ordered_json::array();
    if (p.sectors) {
        for (const auto& k : p.sectors->sectors) {
            rows.push_back({{"sector_id", k.sector_id},
                            {"ead", k.ead},
                            {"pd0", k.pd0},
                            {"pd_star", sector_stressed_pd(k, s)},
                            {"lgd0", k.lgd0},
                            {"lgd_star", sector_stressed_lgd(k, s, p.sectors->lgd_saturation)}});
        }
        return rows;
    }
    const ScenarioVector zero = ScenarioVector::Zero(s.size());
    const auto base = aggregate_sectors(*p.portfolio, zero);
    const auto stressed = aggregate_sectors(*p.portfolio, s);
    for (std::size_t k = 0; k < stressed.size(); ++k) {
        rows.push_back({{"sector_id", stressed[k].sector_id},
                        {"ead", stressed[k].weight_total},
                        {"pd0", base[k].pd_star},
                        {"pd_star", stressed[k].pd_star},
                        {"lgd0", base[k].lgd_star},
                        {"lgd_star", stressed[k].lgd_star}});
    }
    return rows;
}

ordered_json scenario_list_json(const ReferenceModel& model, const Membership& member, const CandidatePool& pool,
                                const ScenarioList& list) {
    ordered_json out;
    out["target"] = to_string(list.target.set);
    out[list.target.set == TargetSet::Neighbourhood ? "eta" : "epsilon"] = list.target.radius;
    ordered_json origins = ordered_json::object();
    for (const Origin o : {Origin::Anchor, Origin::GridAnchor, Origin::LocalDraw, Origin::HitAndRun}) {
        std::size_t n = 0;
        for (const auto& e : pool.entries) n += e.origin == o;
        origins[to_string(o)] = n;
    }
    std::size_t pool_members = 0;
    for (const auto& e : pool.entries) pool_members += member(e.s);
    out["pool"] = {{"size", pool.entries.size()},
                   {"members_rechecked", pool_members},
                   {"anchors", pool.anchors.size()},
                   {"skipped_grid_points", pool.skipped_grid_points},
                   {"by_origin", std::move(origins)},
                   {"warnings", pool.warnings}};
    ordered_json anchors = ordered_json::array();
    for (const auto& a : pool.anchors) {
        ordered_json entry{{"origin", to_string(a.origin)}, {"s", scenario_json(model, a.s)}};
        if (a.origin == Origin::GridAnchor) entry["g_grid_value"] = a.g_grid_value;
        anchors.push_back(std::move(entry));
    }
    out["anchors"] = std::move(anchors);
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const ScenarioEntry& e = list.entries[i];
        ordered_json drivers = ordered_json::array();
        for (const auto& d : e.drivers.top) {
            drivers.push_back({{"factor", d.label}, {"sign", d.sign}, {"magnitude", d.magnitude}});
        }
        entries.push_back({{"rank", i + 1},
                           {"s", scenario_json(model, e.s)},
                           {"g", e.drivers.g},
                           {"ratio", e.ratio},
                           {"mahalanobis_sq", e.mahalanobis_sq},
                           {"tail_probability", e.tail_probability},
                           {"rarity", e.rarity},
                           {"member", member(e.s)},
                           {"drivers", std::move(drivers)}});
    }
    out["entries"] = std::move(entries);
    return out;
}

Outcome run_design_point(const RunConfig& config) {
    const LoadedProblem p = load_problem(config);
    ordered_json report = report_header(config, "design-point");
    report["capital"] = capital_json(p);
    try {
        const DesignPointResult r = solve_design_point(*p.model, *p.capital, config.constraints, config.solver);
        report["status"] = r.converged ? "ok" : "non_convergence";
        report["design_point"] = design_point_json(*p.model, r);
        report["sectors"] = sector_table(p, r.s_star);
        return {std::move(report), r.converged ? exit_code::ok : exit_code::non_convergence};
    } catch (const NonConvergence& e) {
        return non_convergence_outcome(std::move(report), *p.model, e);
    }
}

Outcome run_scenario_list(const RunConfig& config) {
    const LoadedProblem p = load_problem(config);
    ordered_json report = report_header(config, "scenario-list");
    report["capital"] = capital_json(p);
    DesignPointResult r;
    try {
        r = solve_design_point(*p.model, *p.capital, config.constraints, config.solver);
    } catch (const NonConvergence& e) {
        return non_convergence_outcome(std::move(report), *p.model, e);
    }
    report["design_point"] = design_point_json(*p.model, r);
    report["sectors"] = sector_table(p, r.s_star);

    const TargetSpec target = config.target_spec();
    PoolOptions options;
    options.n_target = config.sets.pool_size;
    options.seed = config.seed;
    options.threads = config.threads;
    const CandidatePool pool = build_pool(*p.model, *p.capital, config.constraints, config.solver, r, target,
                                          resolved_g_grid(config, *p.model), options);
    const std::size_t list_size = std::min(config.sets.list_size, pool.entries.size() + 1);
    const ScenarioList list = reduce_farthest_point(*p.model, *p.capital, pool, r.s_star, list_size,
                                                    std::min(config.sets.drivers, p.model->dimension()));
    const Membership member(*p.model, *p.capital, r.s_star, target);
    report["scenario_list"] = scenario_list_json(*p.model, member, pool, list);

    bool all_members = true;
    for (const auto& e : list.entries) all_members = all_members && member(e.s);
    report["status"] = !all_members ? "membership_failure" : r.converged ? "ok" : "non_convergence";
    const int code = !all_members ? exit_code::failure : r.converged ? exit_code::ok : exit_code::non_convergence;
    return {std::move(report), code};
}

void emit_contours(const ReferenceModel& model, const CapitalModel& capital, const ScenarioVector* s_star,
                   const RunConfig& config, std::ostream& csv) {
    const auto& c = config.contour;
    const std::size_t d = model.dimension();
    if (c.resolution < 2) throw InvalidInput("contour resolution must be at least 2");
    if (d < 2) throw InvalidInput("contours need at least two scenario coordinates");
    if (c.x_index < 1 || c.x_index >= d) throw InvalidInput("contour x_index must select a macro-financial coordinate");
    if (!c.fixed.empty() && c.fixed.size() != d) throw InvalidInput("contour 'fixed' must list all d coordinates");

    ScenarioVector s = ScenarioVector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < c.fixed.size(); ++i) s[static_cast<Eigen::Index>(i)] = c.fixed[i];
    const auto xi = static_cast<Eigen::Index>(c.x_index);
    const double sd_g = std::sqrt(model.sigma()(0, 0));
    const double sd_x = std::sqrt(model.sigma()(xi, xi));
    const auto g_range = c.g_range.value_or(std::array<double, 2>{-4.0 * sd_g, 4.0 * sd_g});
    const auto x_range = c.x_range.value_or(std::array<double, 2>{-4.0 * sd_x, 4.0 * sd_x});

    std::optional<Membership> in_s, in_n;
    if (s_star) {
        in_s.emplace(model, capital, *s_star, TargetSpec::neighbourhood(config.sets.eta));
        in_n.emplace(model, capital, *s_star, TargetSpec::near_optimal(config.sets.epsilon));
    }

    csv << "g,x,m2,ratio,breach,in_S_eta,in_N_eps\n";
    const int n = c.resolution;
    auto lerp = [n](const std::array<double, 2>& r, int i) {
        const double t = static_cast<double>(i) / (n - 1);
        return r[0] * (1.0 - t) + r[1] * t;
    };
    for (int i = 0; i < n; ++i) {
        s[0] = lerp(g_range, i);
        for (int j = 0; j < n; ++j) {
            s[xi] = lerp(x_range, j);
            const double ratio = capital.ratio(s);
            const bool breach = ratio <= capital.threshold();
            csv << format_number(s[0]) << ',' << format_number(s[xi]) << ',' << format_number(model.mahalanobis_sq(s))
                << ',' << format_number(ratio) << ',' << (breach ? 1 : 0) << ',' << (in_s && (*in_s)(s) ? 1 : 0) << ','
                << (in_n && (*in_n)(s) ? 1 : 0) << '\n';
        }
    }
}

Outcome run_contour(const RunConfig& config, std::ostream& csv) {
    const LoadedProblem p = load_problem(config);
    ordered_json report = report_header(config, "contour");
    report["capital"] = capital_json(p);
    std::optional<DesignPointResult> r;
    try {
        r = solve_design_point(*p.model, *p.capital, config.constraints, config.solver);
        report["design_point"] = design_point_json(*p.model, *r);
    } catch (const InfeasibleProblem& e) {
        report["design_point"] = nullptr;
        report["message"] = e.what();
    } catch (const NonConvergence& e) {
        report["design_point"] = nullptr;
        report["message"] = e.what();
    }
    emit_contours(*p.model, *p.capital, r ? &r->s_star : nullptr, config, csv);
    report["grid"] = {{"columns", {"g", "x", "m2", "ratio", "breach", "in_S_eta", "in_N_eps"}},
                      {"resolution", config.contour.resolution},
                      {"rows", static_cast<std::size_t>(config.contour.resolution) * config.contour.resolution},
                      {"x_factor", p.model->factor_names()[config.contour.x_index]}};
    report["status"] = "ok";
    return {std::move(report), exit_code::ok};
}

Outcome run_validate(const RunConfig& config) {
    const LoadedProblem p = load_problem(config);
    ordered_json report = report_header(config, "validate");
    report["capital"] = capital_json(p);
    const std::size_t d = p.model->dimension();
    const ScenarioVector zero = ScenarioVector::Zero(static_cast<Eigen::Index>(d));

    ordered_json checks = ordered_json::array();
    bool all = true;
    auto check = [&](const std::string& name, bool pass, ordered_json detail) {
        all = all && pass;
        checks.push_back({{"check", name}, {"pass", pass}, {"detail", std::move(detail)}});
    };

    const CapitalBreakdown base = p.capital->evaluate(zero);
    check("baseline is not a breach", !p.capital->breach(zero), {{"ratio_at_zero", base.ratio}, {"r_star", p.state.r_star()}});
    if (p.state.loss_basis == LossBasis::Incremental) {
        const double gap = std::abs(base.ratio - p.state.r0());
        check("ratio at zero equals R0", gap <= 1e-12 * p.state.r0(), {{"difference", gap}});
    }
    check("rwa clamp inactive at zero", !base.rwa_clamped, {{"rwa_at_zero", base.rwa}});
    const double mono = p.capital->monotonicity_violation(zero);
    check("no deterioration at zero", mono <= 0.0, {{"monotonicity_violation", mono}});

    if (p.portfolio) {
        std::map<std::string, int> counts;
        for (const auto& e : p.portfolio->exposures) ++counts[e.sector_id];
        const bool one_per_sector = std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second == 1; });
        if (one_per_sector) {
            const SectorPortfolio sp = sector_portfolio_from_exposures(*p.portfolio);
            const CreditCapitalModel sector_model = make_sector_capital_model(sp, p.state, p.spec, d);
            ScenarioVector probe = ScenarioVector::Constant(static_cast<Eigen::Index>(d), 0.5);
            bool equal = true;
            for (const auto& s : {zero, probe}) {
                equal = equal && sector_model.loss_quantile(s) == p.capital->loss_quantile(s) &&
                        sector_model.rwa(s) == p.capital->rwa(s) && sector_model.ratio(s) == p.capital->ratio(s);
            }
            check("sector and exposure engines agree", equal, {{"scenarios", 2}});
        }
    }
    report["checks"] = std::move(checks);
    report["dimension"] = d;
    report["factors"] = p.model->factor_names();
    report["status"] = all ? "ok" : "invalid";
    return {std::move(report), all ? exit_code::ok : exit_code::invalid_input};
}

Outcome run_mc_check(const RunConfig& config) {
    const LoadedProblem p = load_problem(config);
    ordered_json report = report_header(config, "mc-check");
    const std::size_t d = p.model->dimension();
    ScenarioVector s = ScenarioVector::Zero(static_cast<Eigen::Index>(d));
    if (!config.mc.scenario.empty()) {
        if (config.mc.scenario.size() != d) throw InvalidInput("mc_check.scenario must have d entries");
        for (std::size_t i = 0; i < d; ++i) s[static_cast<Eigen::Index>(i)] = config.mc.scenario[i];
    }
    const Portfolio portfolio = as_exposure_portfolio(p);
    const double analytic = loss_quantile(portfolio, s, p.spec);
    MonteCarloOptions options;
    options.block_size = config.mc.block_size;
    options.threads = config.threads;
    const MonteCarloLoss mc = mc_loss_quantile(portfolio, s, p.spec, config.mc.n_sims, config.seed, options);
    const double z = (analytic - mc.quantile) / mc.std_error;
    report["scenario"] = scenario_json(*p.model, s);
    report["mc_check"] = {{"q", p.spec.q},
                          {"analytic_quantile", analytic},
                          {"mc_quantile", mc.quantile},
                          {"mc_std_error", mc.std_error},
                          {"mc_mean", mc.mean},
                          {"n_sims", mc.n_sims},
                          {"z_score", z},
                          {"within_3_se", std::abs(z) <= 3.0}};
    report["status"] = "ok";
    return {std::move(report), exit_code::ok};
}

} // namespace rst
