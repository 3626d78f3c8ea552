#pragma once

#include "rst/capital.hpp"

namespace rst {

/// Exposure-weighted sector summary of stressed credit parameters.
struct SectorAggregate {
    std::string sector_id;
    double weight_total = 0.0; ///< sum of EAD in the sector
    double pd_star = 0.0;
    double lgd_star = 0.0;
    std::vector<std::pair<std::string, double>> exposure_weights; ///< (exposure_id, omega_{i|k})
};

/// Aggregates PD_i(s) and LGD_i(s) within each sector with EAD weights.
/// Sectors appear in the order of first occurrence in the portfolio.
std::vector<SectorAggregate> aggregate_sectors(const Portfolio& portfolio, const ScenarioVector& s);

/// A sector of a sector-level portfolio: one pseudo-exposure with its own loadings
/// (b_k, d_k on PD log-odds; c_k, e_k on LGD).
struct SectorRecord {
    std::string sector_id;
    double ead = 0.0;
    double pd0 = 0.0;
    double lgd0 = 0.0;
    double rho = 0.0;
    std::optional<double> maturity; ///< without it the maturity adjustment is 1
    SectorSensitivities loadings;
};

struct SectorPortfolio {
    std::vector<SectorRecord> sectors;
    SoftClip lgd_saturation;
    bool sign_constraints = true;

    void validate(std::size_t dimension) const;
    double total_ead() const;
    /// Sector share w_k = EAD_k / sum_j EAD_j.
    std::vector<double> weights() const;
};

/// Re-expresses a portfolio holding exactly one exposure per sector as a sector
/// portfolio. Throws if any sector holds more than one exposure.
SectorPortfolio sector_portfolio_from_exposures(const Portfolio& portfolio);

double sector_stressed_pd(const SectorRecord& sector, const ScenarioVector& s);
double sector_stressed_lgd(const SectorRecord& sector, const ScenarioVector& s, const SoftClip& clip = {});

double sector_loss_quantile(const SectorPortfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec);

/// Sector analogue of the IRB risk weight. The maturity adjustment applies only
/// when requested and the sector carries a maturity.
double sector_risk_weight(const SectorRecord& sector, const ScenarioVector& s, const LossQuantileSpec& spec,
                          bool apply_maturity_adjustment, const SoftClip& clip = {});

/// Linearised sector risk weight alpha_k + beta_k (PD_k(s) - PD_k^0).
double linear_sector_risk_weight(double alpha, double beta, double pd, double pd0);

struct LinearRiskWeights {
    Vector intercept; ///< RW_k at the baseline
    Vector slope;     ///< dRW_k/dPD_k at the baseline
};
LinearRiskWeights calibrate_linear_risk_weights(const SectorPortfolio& portfolio, const LossQuantileSpec& spec,
                                                bool apply_maturity_adjustment);

double sector_rwa(const SectorPortfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec,
                  bool apply_maturity_adjustment);

/// Capital model over sector-level credit lines; plugs into the design-point
/// solver exactly like the exposure-level model. The maturity adjustment is
/// used only if every sector carries a maturity.
CreditCapitalModel make_sector_capital_model(const SectorPortfolio& portfolio, const CapitalState& state,
                                             const LossQuantileSpec& spec, std::size_t dimension);

} // namespace rst
