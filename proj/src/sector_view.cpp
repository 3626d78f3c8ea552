#include "rst/sector_view.hpp"

#include <map>

namespace rst {

std::vector<SectorAggregate> aggregate_sectors(const Portfolio& portfolio, const ScenarioVector& s) {
    std::vector<SectorAggregate> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < portfolio.exposures.size(); ++i) {
        const auto& e = portfolio.exposures[i];
        auto [it, inserted] = index.emplace(e.sector_id, out.size());
        if (inserted) {
            out.push_back(SectorAggregate{e.sector_id, 0.0, 0.0, 0.0, {}});
            members.emplace_back();
        }
        out[it->second].weight_total += e.ead;
        members[it->second].push_back(i);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        auto& agg = out[k];
        if (!(agg.weight_total > 0.0)) {
            throw InvalidInput("sector '" + agg.sector_id + "' has no exposure weight");
        }
        for (std::size_t i : members[k]) {
            const auto& e = portfolio.exposures[i];
            const auto& sens = portfolio.sensitivities_for(e);
            const double omega = e.ead / agg.weight_total;
            agg.exposure_weights.emplace_back(e.exposure_id, omega);
            agg.pd_star += omega * stressed_pd(e, sens, s);
            agg.lgd_star += omega * stressed_lgd(e, sens, s, portfolio.lgd_saturation);
        }
    }
    return out;
}

void SectorPortfolio::validate(std::size_t dimension) const {
    lgd_saturation.validate();
    if (sectors.empty()) {
        throw InvalidInput("sector portfolio is empty");
    }
    std::map<std::string, int> seen;
    for (const auto& sec : sectors) {
        if (seen[sec.sector_id]++ > 0) {
            throw InvalidInput("sector portfolio: duplicate sector '" + sec.sector_id + "'");
        }
        validate_exposure(ExposureRecord{sec.sector_id, sec.sector_id, sec.ead, sec.pd0, sec.lgd0, sec.rho,
                                         sec.maturity.value_or(1.0)});
        validate_sensitivities(sec.loadings, dimension, sign_constraints);
    }
}

double SectorPortfolio::total_ead() const {
    double total = 0.0;
    for (const auto& sec : sectors) total += sec.ead;
    return total;
}

std::vector<double> SectorPortfolio::weights() const {
    const double total = total_ead();
    std::vector<double> w;
    w.reserve(sectors.size());
    for (const auto& sec : sectors) w.push_back(sec.ead / total);
    return w;
}

SectorPortfolio sector_portfolio_from_exposures(const Portfolio& portfolio) {
    SectorPortfolio out;
    out.lgd_saturation = portfolio.lgd_saturation;
    out.sign_constraints = portfolio.sign_constraints;
    std::map<std::string, int> count;
    for (const auto& e : portfolio.exposures) {
        if (count[e.sector_id]++ > 0) {
            throw InvalidInput("sector '" + e.sector_id + "' holds more than one exposure");
        }
        out.sectors.push_back(
            SectorRecord{e.sector_id, e.ead, e.pd0, e.lgd0, e.rho, e.maturity, portfolio.sensitivities_for(e)});
    }
    return out;
}

double sector_stressed_pd(const SectorRecord& sector, const ScenarioVector& s) {
    return stressed_pd(sector.pd0, pd_log_odds_shift(sector.loadings, s));
}

double sector_stressed_lgd(const SectorRecord& sector, const ScenarioVector& s, const SoftClip& clip) {
    return stressed_lgd(sector.lgd0, lgd_shift(sector.loadings, s), clip);
}

double sector_loss_quantile(const SectorPortfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec) {
    const double c = spec.systematic_quantile();
    double total = 0.0;
    for (const auto& sec : portfolio.sectors) {
        const double pd = sector_stressed_pd(sec, s);
        const double lgd = sector_stressed_lgd(sec, s, portfolio.lgd_saturation);
        total += sec.ead * lgd * tail_default_probability(pd, sec.rho, c);
    }
    return total;
}

double sector_risk_weight(const SectorRecord& sector, const ScenarioVector& s, const LossQuantileSpec& spec,
                          bool apply_maturity_adjustment, const SoftClip& clip) {
    const double pd = sector_stressed_pd(sector, s);
    const double lgd = sector_stressed_lgd(sector, s, clip);
    const bool adjust = apply_maturity_adjustment && sector.maturity.has_value();
    return risk_weight(pd, lgd, sector.rho, sector.maturity.value_or(1.0), spec, adjust);
}

double linear_sector_risk_weight(double alpha, double beta, double pd, double pd0) {
    return alpha + beta * (pd - pd0);
}

LinearRiskWeights calibrate_linear_risk_weights(const SectorPortfolio& portfolio, const LossQuantileSpec& spec,
                                                bool apply_maturity_adjustment) {
    const double c = spec.systematic_quantile();
    const auto n = static_cast<Eigen::Index>(portfolio.sectors.size());
    LinearRiskWeights out{Vector(n), Vector(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& sec = portfolio.sectors[static_cast<std::size_t>(k)];
        const bool adjust = apply_maturity_adjustment && sec.maturity.has_value();
        const double m = sec.maturity.value_or(1.0);
        out.intercept[k] = risk_weight(sec.pd0, sec.lgd0, sec.rho, m, spec, adjust);
        out.slope[k] = risk_weight_pd_derivative(sec.pd0, sec.lgd0, sec.rho, m, c, adjust);
    }
    return out;
}

double sector_rwa(const SectorPortfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec,
                  bool apply_maturity_adjustment) {
    double total = 0.0;
    for (const auto& sec : portfolio.sectors) {
        total += sec.ead * sector_risk_weight(sec, s, spec, apply_maturity_adjustment, portfolio.lgd_saturation);
    }
    return total;
}

CreditCapitalModel make_sector_capital_model(const SectorPortfolio& portfolio, const CapitalState& state,
                                             const LossQuantileSpec& spec, std::size_t dimension) {
    portfolio.validate(dimension);
    CapitalState adjusted = state;
    bool all_have_maturity = true;
    for (const auto& sec : portfolio.sectors) all_have_maturity = all_have_maturity && sec.maturity.has_value();
    if (!all_have_maturity) adjusted.maturity_adjustment = false;

    std::vector<CreditLine> lines;
    std::vector<SectorSensitivities> loadings;
    for (const auto& sec : portfolio.sectors) {
        lines.push_back({sec.sector_id, sec.ead, sec.pd0, sec.lgd0, sec.rho, sec.maturity.value_or(1.0),
                         loadings.size()});
        loadings.push_back(sec.loadings);
    }
    return CreditCapitalModel(std::move(lines), std::move(loadings), portfolio.lgd_saturation, std::move(adjusted),
                              spec, dimension);
}

} // namespace rst
