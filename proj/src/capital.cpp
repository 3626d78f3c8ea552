#include "rst/capital.hpp"

#include "rst/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rst {

double CapitalState::r_star() const {
    return r_star_override ? *r_star_override : r0() * (1.0 - depletion);
}

void CapitalState::validate(std::size_t n_lines, std::size_t dimension) const {
    if (!(cet1_0 > 0.0) || !(rwa_0 > 0.0)) {
        throw InvalidInput("capital: cet1_0 and rwa_0 must be positive");
    }
    if (!r_star_override && !(depletion > 0.0 && depletion < 1.0)) {
        throw InvalidInput("capital: depletion must lie in (0,1)");
    }
    const double rs = r_star();
    if (!(rs > 0.0 && rs < r0())) {
        throw InvalidInput("capital: threshold must satisfy 0 < r_star < r0 (r_star=" + std::to_string(rs) +
                           ", r0=" + std::to_string(r0()) + ")");
    }
    const auto n = static_cast<Eigen::Index>(n_lines);
    if (rwa_mode == RwaMode::Linear && alpha.size() != n) {
        throw InvalidInput("capital: linear RWA mode needs one alpha per credit line (" + std::to_string(n_lines) +
                           "), got " + std::to_string(alpha.size()));
    }
    if (rwa_mode != RwaMode::Linear && alpha.size() != 0) {
        throw InvalidInput("capital: alpha coefficients are only used in linear RWA mode");
    }
    if (rwa_mode == RwaMode::LinearRiskWeight && (rw_intercept.size() != n || rw_slope.size() != n)) {
        throw InvalidInput("capital: linear risk-weight mode needs intercept and slope per credit line");
    }
    if (pnl_noncredit.size() != 0 && pnl_noncredit.size() != static_cast<Eigen::Index>(dimension)) {
        throw InvalidInput("capital: pnl_noncredit must have length d");
    }
}

double maturity_adjustment(double pd, double maturity) {
    const double b = std::pow(0.11852 - 0.05478 * std::log(pd), 2);
    return (1.0 + (maturity - 2.5) * b) / (1.0 - 1.5 * b);
}

namespace {

double maturity_adjustment_pd_derivative(double pd, double maturity) {
    const double root = 0.11852 - 0.05478 * std::log(pd);
    const double b = root * root;
    const double db = 2.0 * root * (-0.05478 / pd);
    const double denom = 1.0 - 1.5 * b;
    return (maturity - 1.0) / (denom * denom) * db;
}

double risk_weight_impl(double pd, double lgd, double rho, double maturity, double c, bool adjust) {
    if (pd <= 0.0) return 0.0;
    const double gamma = adjust ? maturity_adjustment(pd, maturity) : 1.0;
    return lgd * (tail_default_probability(pd, rho, c) - pd) * gamma;
}

} // namespace

double risk_weight(double pd, double lgd, double rho, double maturity, const LossQuantileSpec& spec,
                   bool apply_maturity_adjustment) {
    return risk_weight_impl(pd, lgd, rho, maturity, spec.systematic_quantile(), apply_maturity_adjustment);
}

double risk_weight(const ExposureRecord& exposure, double pd, double lgd, const LossQuantileSpec& spec,
                   bool apply_maturity_adjustment) {
    return risk_weight(pd, lgd, exposure.rho, exposure.maturity, spec, apply_maturity_adjustment);
}

double risk_weight_pd_derivative(double pd, double lgd, double rho, double maturity, double c, bool adjust) {
    if (pd <= 0.0 || pd >= 1.0) return 0.0;
    const double bracket = tail_default_probability(pd, rho, c) - pd;
    const double dbracket = tail_default_probability_derivative(pd, rho, c) - 1.0;
    if (!adjust) return lgd * dbracket;
    return lgd * (dbracket * maturity_adjustment(pd, maturity) +
                  bracket * maturity_adjustment_pd_derivative(pd, maturity));
}

Vector CapitalModel::ratio_gradient(const ScenarioVector& s) const {
    constexpr double h = 1e-5;
    Vector grad(s.size());
    ScenarioVector probe = s;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        probe[i] = s[i] + h;
        const double up = ratio(probe);
        probe[i] = s[i] - h;
        const double down = ratio(probe);
        probe[i] = s[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double CapitalModel::monotonicity_violation(const ScenarioVector&) const { return 0.0; }

double CapitalModel::smooth_monotonicity(const ScenarioVector& s, double, Vector* gradient) const {
    if (gradient) *gradient = Vector::Zero(s.size());
    return 0.0;
}

CreditCapitalModel::CreditCapitalModel(std::vector<CreditLine> lines, std::vector<SectorSensitivities> loadings,
                                       SoftClip lgd_saturation, CapitalState state, LossQuantileSpec spec,
                                       std::size_t dimension)
    : lines_(std::move(lines)),
      loadings_(std::move(loadings)),
      clip_(lgd_saturation),
      state_(std::move(state)),
      spec_(spec),
      dimension_(dimension) {
    if (lines_.empty()) {
        throw InvalidInput("capital model: no credit lines");
    }
    for (const auto& line : lines_) {
        if (line.sensitivity >= loadings_.size()) {
            throw InvalidInput("capital model: line '" + line.id + "' has no loading entry");
        }
    }
    clip_.validate();
    state_.validate(lines_.size(), dimension_);
    systematic_quantile_ = spec_.systematic_quantile();
    baseline_loss_ = loss_quantile(ScenarioVector::Zero(static_cast<Eigen::Index>(dimension_)));
}

CreditCapitalModel::LineState CreditCapitalModel::line_state(const CreditLine& line, const ScenarioVector& s) const {
    const auto& sens = loadings_[line.sensitivity];
    return {stressed_pd(line.pd0, pd_log_odds_shift(sens, s)), stressed_lgd(line.lgd0, lgd_shift(sens, s), clip_)};
}

double CreditCapitalModel::loss_quantile(const ScenarioVector& s) const {
    double total = 0.0;
    for (const auto& line : lines_) {
        const auto st = line_state(line, s);
        total += line.ead * st.lgd * tail_default_probability(st.pd, line.rho, systematic_quantile_);
    }
    return total;
}

double CreditCapitalModel::pnl(const ScenarioVector& s) const {
    return state_.pnl_noncredit.size() == 0 ? 0.0 : state_.pnl_noncredit.dot(s);
}

double CreditCapitalModel::cet1(const ScenarioVector& s) const {
    const double loss = loss_quantile(s);
    const double charged = state_.loss_basis == LossBasis::Incremental ? loss - baseline_loss_ : loss;
    return state_.cet1_0 - charged + pnl(s);
}

double CreditCapitalModel::raw_rwa(const ScenarioVector& s) const {
    switch (state_.rwa_mode) {
    case RwaMode::Constant:
        return state_.rwa_0;
    case RwaMode::Linear: {
        double total = state_.rwa_0;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            const auto st = line_state(lines_[i], s);
            total += state_.alpha[static_cast<Eigen::Index>(i)] * (st.pd - lines_[i].pd0);
        }
        return total;
    }
    case RwaMode::LinearRiskWeight: {
        double total = 0.0;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const auto st = line_state(lines_[i], s);
            total += lines_[i].ead * (state_.rw_intercept[idx] + state_.rw_slope[idx] * (st.pd - lines_[i].pd0));
        }
        return total;
    }
    case RwaMode::IrbFull:
        break;
    }
    double total = 0.0;
    for (const auto& line : lines_) {
        const auto st = line_state(line, s);
        total += line.ead *
                 risk_weight_impl(st.pd, st.lgd, line.rho, line.maturity, systematic_quantile_,
                                  state_.maturity_adjustment);
    }
    return total;
}

double CreditCapitalModel::rwa(const ScenarioVector& s, bool* clamped) const {
    const double raw = raw_rwa(s);
    const double floor = 1e-6 * state_.rwa_0;
    if (clamped) *clamped = !(raw >= floor);
    return raw >= floor ? raw : floor;
}

CapitalBreakdown CreditCapitalModel::evaluate(const ScenarioVector& s) const {
    if (static_cast<std::size_t>(s.size()) != dimension_) {
        throw InvalidInput("capital model: scenario dimension mismatch");
    }
    CapitalBreakdown out;
    out.loss = loss_quantile(s);
    out.baseline_loss = baseline_loss_;
    const double charged = state_.loss_basis == LossBasis::Incremental ? out.loss - baseline_loss_ : out.loss;
    out.cet1 = state_.cet1_0 - charged + pnl(s);
    out.rwa = rwa(s, &out.rwa_clamped);
    out.ratio = out.cet1 / out.rwa;
    return out;
}

Vector CreditCapitalModel::ratio_gradient(const ScenarioVector& s) const {
    const auto d = static_cast<Eigen::Index>(dimension_);
    Vector dloss = Vector::Zero(d);
    Vector drwa = Vector::Zero(d);
    double rwa_raw = state_.rwa_mode == RwaMode::Constant ? state_.rwa_0 : 0.0;
    if (state_.rwa_mode == RwaMode::Linear) rwa_raw = state_.rwa_0;
    double loss = 0.0;
    Vector dpd(d), dlgd(d);

    for (std::size_t i = 0; i < lines_.size(); ++i) {
        const auto& line = lines_[i];
        const auto& sens = loadings_[line.sensitivity];
        const auto st = line_state(line, s);
        const double wp = st.pd * (1.0 - st.pd);
        dpd[0] = wp * sens.delta;
        dpd.tail(d - 1) = wp * sens.beta;
        const double wl = clip_.derivative(line.lgd0 + lgd_shift(sens, s));
        dlgd[0] = wl * sens.eta;
        dlgd.tail(d - 1) = wl * sens.gamma;

        const double tail = tail_default_probability(st.pd, line.rho, systematic_quantile_);
        const double dtail = tail_default_probability_derivative(st.pd, line.rho, systematic_quantile_);
        loss += line.ead * st.lgd * tail;
        dloss += line.ead * (tail * dlgd + st.lgd * dtail * dpd);

        const auto idx = static_cast<Eigen::Index>(i);
        switch (state_.rwa_mode) {
        case RwaMode::Constant:
            break;
        case RwaMode::Linear:
            rwa_raw += state_.alpha[idx] * (st.pd - line.pd0);
            drwa += state_.alpha[idx] * dpd;
            break;
        case RwaMode::LinearRiskWeight:
            rwa_raw += line.ead * (state_.rw_intercept[idx] + state_.rw_slope[idx] * (st.pd - line.pd0));
            drwa += line.ead * state_.rw_slope[idx] * dpd;
            break;
        case RwaMode::IrbFull: {
            const bool adj = state_.maturity_adjustment;
            const double gamma = adj ? maturity_adjustment(st.pd, line.maturity) : 1.0;
            const double bracket = tail - st.pd;
            rwa_raw += line.ead * st.lgd * bracket * gamma;
            const double drw_dpd =
                risk_weight_pd_derivative(st.pd, st.lgd, line.rho, line.maturity, systematic_quantile_, adj);
            drwa += line.ead * (bracket * gamma * dlgd + drw_dpd * dpd);
            break;
        }
        }
    }

    const double charged = state_.loss_basis == LossBasis::Incremental ? loss - baseline_loss_ : loss;
    const double cet1_value = state_.cet1_0 - charged + pnl(s);
    Vector dcet1 = -dloss;
    if (state_.pnl_noncredit.size() != 0) dcet1 += state_.pnl_noncredit;

    const double floor = 1e-6 * state_.rwa_0;
    if (!(rwa_raw >= floor)) {
        return dcet1 / floor;
    }
    return (dcet1 * rwa_raw - cet1_value * drwa) / (rwa_raw * rwa_raw);
}

double CreditCapitalModel::monotonicity_violation(const ScenarioVector& s) const {
    double worst = 0.0;
    for (const auto& line : lines_) {
        const auto st = line_state(line, s);
        worst = std::max({worst, line.pd0 - st.pd, clip_(line.lgd0) - st.lgd});
    }
    return worst;
}

double CreditCapitalModel::smooth_monotonicity(const ScenarioVector& s, double temperature, Vector* gradient) const {
    const auto d = static_cast<Eigen::Index>(dimension_);
    std::vector<double> deficits;
    std::vector<Vector> grads;
    deficits.reserve(2 * lines_.size());
    if (gradient) grads.reserve(2 * lines_.size());

    for (const auto& line : lines_) {
        const auto& sens = loadings_[line.sensitivity];
        const auto st = line_state(line, s);
        deficits.push_back((line.pd0 - st.pd) / line.pd0);
        const double lgd_base = clip_(line.lgd0);
        deficits.push_back((lgd_base - st.lgd) / lgd_base);
        if (gradient) {
            Vector gp(d), gl(d);
            const double wp = st.pd * (1.0 - st.pd) / line.pd0;
            gp[0] = -wp * sens.delta;
            gp.tail(d - 1) = -wp * sens.beta;
            const double wl = clip_.derivative(line.lgd0 + lgd_shift(sens, s)) / lgd_base;
            gl[0] = -wl * sens.eta;
            gl.tail(d - 1) = -wl * sens.gamma;
            grads.push_back(std::move(gp));
            grads.push_back(std::move(gl));
        }
    }
    const double top = *std::max_element(deficits.begin(), deficits.end());
    double sum = 0.0;
    std::vector<double> weights(deficits.size());
    for (std::size_t j = 0; j < deficits.size(); ++j) {
        weights[j] = std::exp((deficits[j] - top) / temperature);
        sum += weights[j];
    }
    const double value = top + temperature * std::log(sum / static_cast<double>(deficits.size()));
    if (gradient) {
        gradient->setZero(d);
        for (std::size_t j = 0; j < deficits.size(); ++j) {
            *gradient += (weights[j] / sum) * grads[j];
        }
    }
    return value;
}

CreditCapitalModel make_capital_model(const Portfolio& portfolio, const CapitalState& state,
                                      const LossQuantileSpec& spec, std::size_t dimension) {
    portfolio.validate(dimension);
    std::vector<SectorSensitivities> loadings;
    std::map<std::string, std::size_t> index;
    for (const auto& [id, sens] : portfolio.sectors) {
        index[id] = loadings.size();
        loadings.push_back(sens);
    }
    std::vector<CreditLine> lines;
    lines.reserve(portfolio.exposures.size());
    for (const auto& e : portfolio.exposures) {
        lines.push_back({e.exposure_id, e.ead, e.pd0, e.lgd0, e.rho, e.maturity, index.at(e.sector_id)});
    }
    return CreditCapitalModel(std::move(lines), std::move(loadings), portfolio.lgd_saturation, state, spec,
                              dimension);
}

namespace {
std::size_t scenario_dimension(const ScenarioVector& s) { return static_cast<std::size_t>(s.size()); }
} // namespace

double cet1_stressed(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                     const LossQuantileSpec& spec) {
    return make_capital_model(portfolio, state, spec, scenario_dimension(s)).cet1(s);
}

double rwa_stressed(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                    const LossQuantileSpec& spec) {
    return make_capital_model(portfolio, state, spec, scenario_dimension(s)).rwa(s);
}

double cet1_ratio(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                  const LossQuantileSpec& spec) {
    return make_capital_model(portfolio, state, spec, scenario_dimension(s)).ratio(s);
}

Vector calibrate_alpha(const Portfolio& portfolio, const LossQuantileSpec& spec, bool apply_maturity_adjustment) {
    const double c = spec.systematic_quantile();
    Vector alpha(static_cast<Eigen::Index>(portfolio.exposures.size()));
    for (std::size_t i = 0; i < portfolio.exposures.size(); ++i) {
        const auto& e = portfolio.exposures[i];
        alpha[static_cast<Eigen::Index>(i)] =
            e.ead * risk_weight_pd_derivative(e.pd0, e.lgd0, e.rho, e.maturity, c, apply_maturity_adjustment);
    }
    return alpha;
}

double baseline_irb_rwa(const Portfolio& portfolio, const LossQuantileSpec& spec, bool apply_maturity_adjustment) {
    double total = 0.0;
    for (const auto& e : portfolio.exposures) {
        total += e.ead * risk_weight(e, e.pd0, e.lgd0, spec, apply_maturity_adjustment);
    }
    return total;
}

FunctionCapitalModel::FunctionCapitalModel(std::size_t dimension, double r0, double r_star, RatioFn ratio,
                                           GradientFn gradient)
    : dimension_(dimension), r0_(r0), r_star_(r_star), ratio_(std::move(ratio)), gradient_(std::move(gradient)) {
    if (!(r_star_ > 0.0 && r_star_ < r0_)) {
        throw InvalidInput("capital function: need 0 < r_star < r0");
    }
}

Vector FunctionCapitalModel::ratio_gradient(const ScenarioVector& s) const {
    return gradient_ ? gradient_(s) : CapitalModel::ratio_gradient(s);
}

FunctionCapitalModel affine_capital(const Vector& w, double c, double r0, double depletion) {
    const double r_star = r0 * (1.0 - depletion);
    const double slope = r0 * depletion;
    return FunctionCapitalModel(
        static_cast<std::size_t>(w.size()), r0, r_star,
        [w, c, r_star, slope](const ScenarioVector& s) { return r_star - slope * (w.dot(s) - c); },
        [w, slope](const ScenarioVector&) -> Vector { return -slope * w; });
}

} // namespace rst
