#pragma once

#include "rst/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace rst {

/// Sector-level shock loadings. beta/gamma act on the macro-financial block x,
/// delta/eta on the geopolitical coordinate g.
struct SectorSensitivities {
    std::string sector_id;
    Vector beta;  ///< PD log-odds loadings on x, length d-1
    double delta = 0.0;
    Vector gamma; ///< LGD loadings on x, length d-1
    double eta = 0.0;
};

struct ExposureRecord {
    std::string exposure_id;
    std::string sector_id;
    double ead = 0.0;
    double pd0 = 0.0;
    double lgd0 = 0.0;
    double rho = 0.0;
    double maturity = 1.0; ///< years
};

/// Smooth saturation of the affine LGD onto (lo, hi).
///
/// Identity on [lo + width, hi - width]; outside that core each edge is blended
/// with a tanh (a rescaled logistic) so the map stays monotone, C^2 at the
/// junctions, and never leaves (lo, hi).
struct SoftClip {
    double lo = 1e-6;
    double hi = 1.0 - 1e-6;
    double width = 0.02;

    double operator()(double raw) const;
    double derivative(double raw) const;
    void validate() const;
};

struct Portfolio {
    std::vector<ExposureRecord> exposures;
    std::map<std::string, SectorSensitivities> sectors;
    SoftClip lgd_saturation;
    bool sign_constraints = true; ///< require delta >= 0 and eta >= 0

    const SectorSensitivities& sensitivities_for(const ExposureRecord& e) const;
    double total_ead() const;
    /// Checks field domains and that every loading vector has length d-1.
    void validate(std::size_t dimension) const;
};

void validate_exposure(const ExposureRecord& e);
void validate_sensitivities(const SectorSensitivities& sens, std::size_t dimension, bool sign_constraints);

/// z = delta * g + beta^T x, the shift applied to the PD log-odds.
double pd_log_odds_shift(const SectorSensitivities& sens, const ScenarioVector& s);
/// eta * g + gamma^T x, the additive LGD shift before saturation.
double lgd_shift(const SectorSensitivities& sens, const ScenarioVector& s);

/// Logistic update PD0 e^z / (1 - PD0 + PD0 e^z).
double stressed_pd(double pd0, double log_odds_shift);
double stressed_pd(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s);
Vector stressed_pd_gradient(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s);

double stressed_lgd(double lgd0, double shift, const SoftClip& clip);
double stressed_lgd(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s,
                    const SoftClip& clip = {});
Vector stressed_lgd_gradient(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s,
                             const SoftClip& clip = {});

/// max_i max(PD_i(0) - PD_i(s), LGD_i(0) - LGD_i(s), 0). Zero iff no exposure
/// improves under s.
double monotonicity_violation(const Portfolio& portfolio, const ScenarioVector& s);

} // namespace rst
