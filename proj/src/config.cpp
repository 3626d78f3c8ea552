#include "rst/config.hpp"

#include "rst/delimited.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

namespace rst {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads one JSON object and rejects keys nobody asked for, so typos in a
// config surface as errors instead of silently falling back to defaults.
class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (doc.is_null()) {
            obj_ = json::object();
        } else if (!doc.is_object()) {
            throw InvalidInput("config: '" + name_ + "' must be an object");
        } else {
            obj_ = doc;
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        try {
            return obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw InvalidInput("config: '" + name_ + "." + key + "' has the wrong type");
        }
    }

    template <class T>
    std::optional<T> optional(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return get<T>(key, T{});
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) ? obj_.at(key) : null_;
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!seen_.count(item.key())) throw InvalidInput("config: unknown key '" + name_ + "." + item.key() + "'");
        }
    }

private:
    json obj_;
    std::string name_;
    std::set<std::string> seen_;
    json null_;
};

template <class E>
E parse_enum(const std::string& value, const std::vector<std::pair<std::string, E>>& names, const std::string& key) {
    for (const auto& [name, e] : names) {
        if (value == name) return e;
    }
    std::string options;
    for (const auto& [name, e] : names) options += (options.empty() ? "" : ", ") + name;
    throw InvalidInput("config: '" + key + "' must be one of " + options + " (got '" + value + "')");
}

template <class E>
std::string enum_name(E value, const std::vector<std::pair<std::string, E>>& names) {
    for (const auto& [name, e] : names) {
        if (e == value) return name;
    }
    return "unknown";
}

const std::vector<std::pair<std::string, Family>> kFamilies{{"gaussian", Family::Gaussian},
                                                             {"student_t", Family::StudentT}};
const std::vector<std::pair<std::string, RwaMode>> kRwaModes{{"irb_full", RwaMode::IrbFull},
                                                              {"linear", RwaMode::Linear},
                                                              {"constant", RwaMode::Constant},
                                                              {"linear_risk_weight", RwaMode::LinearRiskWeight}};
const std::vector<std::pair<std::string, LossBasis>> kBases{{"incremental", LossBasis::Incremental},
                                                             {"absolute", LossBasis::Absolute}};
const std::vector<std::pair<std::string, TargetSet>> kTargets{{"neighbourhood", TargetSet::Neighbourhood},
                                                               {"near-optimal", TargetSet::NearOptimal}};

std::optional<std::filesystem::path> optional_path(Section& s, const std::string& key) {
    const auto v = s.optional<std::string>(key);
    if (!v) return std::nullopt;
    return std::filesystem::path(*v);
}

// Bound vectors may contain null for an unbounded coordinate.
std::optional<Vector> bound_vector(Section& s, const std::string& key, double missing) {
    const json& v = s.raw(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_array()) throw InvalidInput("config: 'constraints." + key + "' must be an array");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_null()) {
            out[static_cast<Eigen::Index>(i)] = missing;
        } else if (v[i].is_number()) {
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        } else {
            throw InvalidInput("config: 'constraints." + key + "' entries must be numbers or null");
        }
    }
    return out;
}

std::optional<std::array<double, 2>> range(Section& s, const std::string& key) {
    const auto v = s.optional<std::vector<double>>(key);
    if (!v) return std::nullopt;
    if (v->size() != 2 || !((*v)[0] < (*v)[1])) throw InvalidInput("config: 'contour." + key + "' must be [lo, hi] with lo < hi");
    return std::array<double, 2>{(*v)[0], (*v)[1]};
}

template <class T>
ordered_json opt(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json opt_path(const std::optional<std::filesystem::path>& p) {
    return p ? ordered_json(p->generic_string()) : ordered_json(nullptr);
}

ordered_json bounds_json(const std::optional<Vector>& v) {
    if (!v) return nullptr;
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v->size(); ++i) {
        const double x = (*v)[i];
        out.push_back(std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr));
    }
    return out;
}

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string(name) + ": " + e.what());
    } catch (const json::exception& e) {
        throw InvalidInput(std::string(name) + ": " + e.what());
    }
}

} // namespace

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
}

TargetSpec RunConfig::target_spec() const {
    return sets.target == TargetSet::Neighbourhood ? TargetSpec::neighbourhood(sets.eta)
                                                   : TargetSpec::near_optimal(sets.epsilon);
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    RunConfig c;
    c.base_dir = base_dir;
    Section root(doc, "config");

    Section ref(root.raw("reference"), "reference");
    c.reference.covariance = optional_path(ref, "covariance");
    c.reference.history = optional_path(ref, "history");
    c.reference.ridge = ref.get("ridge", c.reference.ridge);
    c.reference.family = parse_enum(ref.get<std::string>("family", "gaussian"), kFamilies, "reference.family");
    c.reference.nu = ref.get("nu", 0.0);
    ref.finish();
    if (c.reference.covariance.has_value() == c.reference.history.has_value())
        throw InvalidInput("config: give exactly one of 'reference.covariance' and 'reference.history'");
    if (c.reference.family == Family::StudentT && !(c.reference.nu > 0.0))
        throw InvalidInput("config: 'reference.nu' must be positive for the student_t family");

    Section port(root.raw("portfolio"), "portfolio");
    c.portfolio.exposures = optional_path(port, "exposures");
    c.portfolio.sensitivities = optional_path(port, "sensitivities");
    c.portfolio.sectors = optional_path(port, "sectors");
    c.portfolio.sign_constraints = port.get("sign_constraints", true);
    {
        Section clip(port.raw("lgd_saturation"), "portfolio.lgd_saturation");
        c.portfolio.lgd_saturation.lo = clip.get("lo", c.portfolio.lgd_saturation.lo);
        c.portfolio.lgd_saturation.hi = clip.get("hi", c.portfolio.lgd_saturation.hi);
        c.portfolio.lgd_saturation.width = clip.get("width", c.portfolio.lgd_saturation.width);
        clip.finish();
    }
    port.finish();
    const bool exposure_level = c.portfolio.exposures || c.portfolio.sensitivities;
    if (exposure_level == c.portfolio.sectors.has_value())
        throw InvalidInput("config: give either 'portfolio.exposures' with 'portfolio.sensitivities' or 'portfolio.sectors'");
    if (exposure_level && !(c.portfolio.exposures && c.portfolio.sensitivities))
        throw InvalidInput("config: 'portfolio.exposures' and 'portfolio.sensitivities' go together");

    Section cap(root.raw("capital"), "capital");
    if (!cap.has("cet1_0")) throw InvalidInput("config: 'capital.cet1_0' is required");
    c.capital.cet1_0 = cap.get("cet1_0", 0.0);
    c.capital.rwa_0 = cap.optional<double>("rwa_0");
    c.capital.depletion = cap.get("depletion", c.capital.depletion);
    c.capital.r_star = cap.optional<double>("r_star");
    c.capital.rwa_mode = parse_enum(cap.get<std::string>("rwa_mode", "irb_full"), kRwaModes, "capital.rwa_mode");
    c.capital.maturity_adjustment = cap.get("maturity_adjustment", true);
    c.capital.loss_basis = parse_enum(cap.get<std::string>("loss_basis", "incremental"), kBases, "capital.loss_basis");
    c.capital.q = cap.get("q", c.capital.q);
    c.capital.alpha_file = optional_path(cap, "alpha_file");
    c.capital.pnl_noncredit = cap.get("pnl_noncredit", std::vector<double>{});
    cap.finish();

    Section cons(root.raw("constraints"), "constraints");
    c.constraints.g_min = cons.get("g_min", c.constraints.g_min);
    c.constraints.g_max = cons.optional<double>("g_max");
    c.constraints.x_min = bound_vector(cons, "x_min", -std::numeric_limits<double>::infinity());
    c.constraints.x_max = bound_vector(cons, "x_max", std::numeric_limits<double>::infinity());
    c.constraints.enforce_monotonicity = cons.get("enforce_monotonicity", false);
    cons.finish();

    Section sol(root.raw("solver"), "solver");
    SolverConfig& s = c.solver;
    s.n_starts = sol.get("n_starts", s.n_starts);
    s.initial_penalty = sol.get("initial_penalty", s.initial_penalty);
    s.penalty_growth = sol.get("penalty_growth", s.penalty_growth);
    s.penalty_rounds = sol.get("penalty_rounds", s.penalty_rounds);
    s.max_outer_iterations = sol.get("max_outer_iterations", s.max_outer_iterations);
    s.max_inner_iterations = sol.get("max_inner_iterations", s.max_inner_iterations);
    s.fd_step = sol.get("fd_step", s.fd_step);
    s.feasibility_tolerance = sol.get("feasibility_tolerance", s.feasibility_tolerance);
    s.stationarity_tolerance = sol.get("stationarity_tolerance", s.stationarity_tolerance);
    s.dedup_radius = sol.get("dedup_radius", s.dedup_radius);
    s.monotonicity_temperature = sol.get("monotonicity_temperature", s.monotonicity_temperature);
    sol.finish();

    Section sets(root.raw("scenario_sets"), "scenario_sets");
    c.sets.target = parse_enum(sets.get<std::string>("target", "near-optimal"), kTargets, "scenario_sets.target");
    c.sets.epsilon = sets.get("epsilon", c.sets.epsilon);
    c.sets.eta = sets.get("eta", c.sets.eta);
    c.sets.pool_size = sets.get("pool_size", c.sets.pool_size);
    c.sets.list_size = sets.get("list_size", c.sets.list_size);
    c.sets.drivers = sets.get("drivers", c.sets.drivers);
    c.sets.g_grid = sets.optional<std::vector<double>>("g_grid");
    c.sets.g_grid_points = sets.get("g_grid_points", c.sets.g_grid_points);
    sets.finish();

    Section con(root.raw("contour"), "contour");
    c.contour.g_range = range(con, "g_range");
    c.contour.x_range = range(con, "x_range");
    c.contour.resolution = con.get("resolution", c.contour.resolution);
    c.contour.x_index = con.get("x_index", c.contour.x_index);
    c.contour.fixed = con.get("fixed", std::vector<double>{});
    con.finish();

    Section mc(root.raw("mc_check"), "mc_check");
    c.mc.n_sims = mc.get("n_sims", c.mc.n_sims);
    c.mc.scenario = mc.get("scenario", std::vector<double>{});
    c.mc.block_size = mc.get("block_size", c.mc.block_size);
    mc.finish();

    c.output_dir = root.get<std::string>("output_dir", ".");
    c.seed = root.get<std::uint64_t>("seed", 0);
    c.threads = root.get<unsigned>("threads", 0);
    root.finish();
    c.solver.seed = c.seed;
    c.solver.threads = c.threads;
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

ordered_json effective_config(const RunConfig& c) {
    ordered_json out;
    out["reference"] = {{"covariance", opt_path(c.reference.covariance)},
                        {"history", opt_path(c.reference.history)},
                        {"ridge", c.reference.ridge},
                        {"family", enum_name(c.reference.family, kFamilies)},
                        {"nu", c.reference.nu}};
    out["portfolio"] = {{"exposures", opt_path(c.portfolio.exposures)},
                        {"sensitivities", opt_path(c.portfolio.sensitivities)},
                        {"sectors", opt_path(c.portfolio.sectors)},
                        {"sign_constraints", c.portfolio.sign_constraints},
                        {"lgd_saturation",
                         {{"lo", c.portfolio.lgd_saturation.lo},
                          {"hi", c.portfolio.lgd_saturation.hi},
                          {"width", c.portfolio.lgd_saturation.width}}}};
    out["capital"] = {{"cet1_0", c.capital.cet1_0},
                      {"rwa_0", opt(c.capital.rwa_0)},
                      {"depletion", c.capital.depletion},
                      {"r_star", opt(c.capital.r_star)},
                      {"rwa_mode", enum_name(c.capital.rwa_mode, kRwaModes)},
                      {"maturity_adjustment", c.capital.maturity_adjustment},
                      {"loss_basis", enum_name(c.capital.loss_basis, kBases)},
                      {"q", c.capital.q},
                      {"alpha_file", opt_path(c.capital.alpha_file)},
                      {"pnl_noncredit", c.capital.pnl_noncredit}};
    out["constraints"] = {{"g_min", c.constraints.g_min},
                          {"g_max", opt(c.constraints.g_max)},
                          {"x_min", bounds_json(c.constraints.x_min)},
                          {"x_max", bounds_json(c.constraints.x_max)},
                          {"enforce_monotonicity", c.constraints.enforce_monotonicity}};
    const SolverConfig& s = c.solver;
    out["solver"] = {{"n_starts", s.n_starts},
                     {"initial_penalty", s.initial_penalty},
                     {"penalty_growth", s.penalty_growth},
                     {"penalty_rounds", s.penalty_rounds},
                     {"max_outer_iterations", s.max_outer_iterations},
                     {"max_inner_iterations", s.max_inner_iterations},
                     {"fd_step", s.fd_step},
                     {"feasibility_tolerance", s.feasibility_tolerance},
                     {"stationarity_tolerance", s.stationarity_tolerance},
                     {"dedup_radius", s.dedup_radius},
                     {"monotonicity_temperature", s.monotonicity_temperature}};
    out["scenario_sets"] = {{"target", enum_name(c.sets.target, kTargets)},
                            {"epsilon", c.sets.epsilon},
                            {"eta", c.sets.eta},
                            {"pool_size", c.sets.pool_size},
                            {"list_size", c.sets.list_size},
                            {"drivers", c.sets.drivers},
                            {"g_grid", opt(c.sets.g_grid)},
                            {"g_grid_points", c.sets.g_grid_points}};
    auto range_json = [](const std::optional<std::array<double, 2>>& r) {
        return r ? ordered_json::array({(*r)[0], (*r)[1]}) : ordered_json(nullptr);
    };
    out["contour"] = {{"g_range", range_json(c.contour.g_range)},
                      {"x_range", range_json(c.contour.x_range)},
                      {"resolution", c.contour.resolution},
                      {"x_index", c.contour.x_index},
                      {"fixed", c.contour.fixed}};
    out["mc_check"] = {{"n_sims", c.mc.n_sims}, {"scenario", c.mc.scenario}, {"block_size", c.mc.block_size}};
    out["output_dir"] = c.output_dir.generic_string();
    out["seed"] = c.seed;
    return out;
}

std::string config_hash(const RunConfig& config) {
    ordered_json doc = effective_config(config);
    // Where the report lands does not change what is computed.
    doc.erase("output_dir");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

LoadedProblem load_problem(const RunConfig& config) {
    LoadedProblem p;

    p.model = stage("reference model", [&] {
        std::unique_ptr<ReferenceModel> model;
        if (config.reference.covariance) {
            auto cov = io::read_covariance(config.resolve(*config.reference.covariance));
            model = std::make_unique<ReferenceModel>(ReferenceModel::gaussian(cov.values, cov.names));
        } else {
            auto hist = io::read_history(config.resolve(*config.reference.history));
            CovarianceEstimateOptions options;
            options.ridge = config.reference.ridge;
            model = std::make_unique<ReferenceModel>(estimate_covariance(hist.values, hist.names, options));
        }
        if (config.reference.family == Family::StudentT)
            model = std::make_unique<ReferenceModel>(model->with_family(Family::StudentT, config.reference.nu));
        return model;
    });
    const std::size_t d = p.model->dimension();

    stage("portfolio", [&] {
        if (config.portfolio.sectors) {
            p.sectors = io::read_sector_portfolio(config.resolve(*config.portfolio.sectors), d);
            p.sectors->lgd_saturation = config.portfolio.lgd_saturation;
            p.sectors->sign_constraints = config.portfolio.sign_constraints;
            p.sectors->validate(d);
        } else {
            p.portfolio = io::read_portfolio(config.resolve(*config.portfolio.exposures),
                                             config.resolve(*config.portfolio.sensitivities), d);
            p.portfolio->lgd_saturation = config.portfolio.lgd_saturation;
            p.portfolio->sign_constraints = config.portfolio.sign_constraints;
            p.portfolio->validate(d);
        }
        return 0;
    });

    stage("capital", [&] {
        p.spec.q = config.capital.q;
        p.spec.validate();
        CapitalState& st = p.state;
        st.cet1_0 = config.capital.cet1_0;
        st.depletion = config.capital.depletion;
        st.r_star_override = config.capital.r_star;
        st.rwa_mode = config.capital.rwa_mode;
        st.maturity_adjustment = config.capital.maturity_adjustment;
        st.loss_basis = config.capital.loss_basis;
        if (!config.capital.pnl_noncredit.empty())
            st.pnl_noncredit = Eigen::Map<const Vector>(config.capital.pnl_noncredit.data(),
                                                       static_cast<Eigen::Index>(config.capital.pnl_noncredit.size()));
        const bool adjust = config.capital.maturity_adjustment;
        const ScenarioVector zero = ScenarioVector::Zero(static_cast<Eigen::Index>(d));

        if (p.sectors) {
            if (config.capital.alpha_file) throw InvalidInput("an alpha file applies to exposure-level portfolios only");
            bool all_maturities = true;
            for (const auto& k : p.sectors->sectors) all_maturities = all_maturities && k.maturity.has_value();
            const bool sector_adjust = adjust && all_maturities;
            st.rwa_0 = config.capital.rwa_0.value_or(sector_rwa(*p.sectors, zero, p.spec, sector_adjust));
            const LinearRiskWeights lin = calibrate_linear_risk_weights(*p.sectors, p.spec, sector_adjust);
            if (st.rwa_mode == RwaMode::Linear) {
                st.alpha = lin.slope;
                for (Eigen::Index k = 0; k < st.alpha.size(); ++k)
                    st.alpha[k] *= p.sectors->sectors[static_cast<std::size_t>(k)].ead;
            } else if (st.rwa_mode == RwaMode::LinearRiskWeight) {
                st.rw_intercept = lin.intercept;
                st.rw_slope = lin.slope;
            }
            p.capital = std::make_unique<CreditCapitalModel>(make_sector_capital_model(*p.sectors, st, p.spec, d));
        } else {
            const Portfolio& pf = *p.portfolio;
            st.rwa_0 = config.capital.rwa_0.value_or(baseline_irb_rwa(pf, p.spec, adjust));
            if (st.rwa_mode == RwaMode::Linear) {
                st.alpha = config.capital.alpha_file ? io::read_alpha(config.resolve(*config.capital.alpha_file), pf)
                                                     : calibrate_alpha(pf, p.spec, adjust);
            } else if (st.rwa_mode == RwaMode::LinearRiskWeight) {
                const auto n = static_cast<Eigen::Index>(pf.exposures.size());
                st.rw_intercept.resize(n);
                st.rw_slope.resize(n);
                const double c = p.spec.systematic_quantile();
                for (Eigen::Index i = 0; i < n; ++i) {
                    const ExposureRecord& e = pf.exposures[static_cast<std::size_t>(i)];
                    const double lgd = stressed_lgd(e, pf.sensitivities_for(e), zero, pf.lgd_saturation);
                    st.rw_intercept[i] = risk_weight(e, e.pd0, lgd, p.spec, adjust);
                    st.rw_slope[i] = risk_weight_pd_derivative(e.pd0, lgd, e.rho, e.maturity, c, adjust);
                }
            }
            p.capital = std::make_unique<CreditCapitalModel>(make_capital_model(pf, st, p.spec, d));
        }
        return 0;
    });

    stage("constraints", [&] {
        config.constraints.validate(d);
        config.solver.validate();
        return 0;
    });
    return p;
}

} // namespace rst
