#include "rst/transmission.hpp"

#include <cmath>

namespace rst {

double SoftClip::operator()(double raw) const {
    const double upper_core = hi - width;
    const double lower_core = lo + width;
    if (raw > upper_core) {
        return upper_core + width * std::tanh((raw - upper_core) / width);
    }
    if (raw < lower_core) {
        return lower_core - width * std::tanh((lower_core - raw) / width);
    }
    return raw;
}

double SoftClip::derivative(double raw) const {
    const double upper_core = hi - width;
    const double lower_core = lo + width;
    if (raw > upper_core) {
        const double t = std::tanh((raw - upper_core) / width);
        return 1.0 - t * t;
    }
    if (raw < lower_core) {
        const double t = std::tanh((lower_core - raw) / width);
        return 1.0 - t * t;
    }
    return 1.0;
}

void SoftClip::validate() const {
    if (!(lo >= 0.0 && hi <= 1.0 && width > 0.0 && lo + 2.0 * width < hi)) {
        throw InvalidInput("LGD saturation: need 0 <= lo, hi <= 1, width > 0 and lo + 2*width < hi");
    }
}

const SectorSensitivities& Portfolio::sensitivities_for(const ExposureRecord& e) const {
    auto it = sectors.find(e.sector_id);
    if (it == sectors.end()) {
        throw InvalidInput("exposure '" + e.exposure_id + "' references unknown sector '" + e.sector_id + "'");
    }
    return it->second;
}

double Portfolio::total_ead() const {
    double total = 0.0;
    for (const auto& e : exposures) total += e.ead;
    return total;
}

void validate_exposure(const ExposureRecord& e) {
    auto interior = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(e.ead > 0.0) || !std::isfinite(e.ead)) {
        throw InvalidInput("exposure '" + e.exposure_id + "': ead must be positive");
    }
    if (!interior(e.pd0) || !interior(e.lgd0) || !interior(e.rho)) {
        throw InvalidInput("exposure '" + e.exposure_id + "': pd0, lgd0 and rho must lie strictly in (0,1)");
    }
    if (!(e.maturity > 0.0)) {
        throw InvalidInput("exposure '" + e.exposure_id + "': maturity must be positive");
    }
}

void validate_sensitivities(const SectorSensitivities& sens, std::size_t dimension, bool sign_constraints) {
    const auto expected = static_cast<Eigen::Index>(dimension) - 1;
    if (sens.beta.size() != expected || sens.gamma.size() != expected) {
        throw InvalidInput("sector '" + sens.sector_id + "': beta and gamma must have length d-1 = " +
                           std::to_string(expected));
    }
    if (!sens.beta.allFinite() || !sens.gamma.allFinite() || !std::isfinite(sens.delta) ||
        !std::isfinite(sens.eta)) {
        throw InvalidInput("sector '" + sens.sector_id + "': non-finite loading");
    }
    if (sign_constraints && (sens.delta < 0.0 || sens.eta < 0.0)) {
        throw InvalidInput("sector '" + sens.sector_id +
                           "': sign constraints require delta >= 0 and eta >= 0");
    }
}

void Portfolio::validate(std::size_t dimension) const {
    lgd_saturation.validate();
    if (exposures.empty()) {
        throw InvalidInput("portfolio has no exposures");
    }
    for (const auto& [id, sens] : sectors) {
        validate_sensitivities(sens, dimension, sign_constraints);
    }
    for (const auto& e : exposures) {
        validate_exposure(e);
        sensitivities_for(e);
    }
    if (!(total_ead() > 0.0)) {
        throw InvalidInput("portfolio total EAD must be positive");
    }
}

double pd_log_odds_shift(const SectorSensitivities& sens, const ScenarioVector& s) {
    double z = sens.delta * s[0];
    for (Eigen::Index j = 0; j < sens.beta.size(); ++j) {
        z += sens.beta[j] * s[j + 1];
    }
    return z;
}

double lgd_shift(const SectorSensitivities& sens, const ScenarioVector& s) {
    double v = sens.eta * s[0];
    for (Eigen::Index j = 0; j < sens.gamma.size(); ++j) {
        v += sens.gamma[j] * s[j + 1];
    }
    return v;
}

double stressed_pd(double pd0, double log_odds_shift) {
    if (!std::isfinite(log_odds_shift)) {
        throw InvalidInput("stressed_pd: non-finite log-odds shift");
    }
    if (log_odds_shift == 0.0) {
        return pd0;
    }
    if (log_odds_shift > 0.0) {
        // Divide through by e^z so large shifts saturate at 1 instead of overflowing.
        return pd0 / ((1.0 - pd0) * std::exp(-log_odds_shift) + pd0);
    }
    const double e = std::exp(log_odds_shift);
    return pd0 * e / (1.0 - pd0 + pd0 * e);
}

double stressed_pd(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s) {
    return stressed_pd(e.pd0, pd_log_odds_shift(sens, s));
}

Vector stressed_pd_gradient(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s) {
    const double p = stressed_pd(e, sens, s);
    const double w = p * (1.0 - p);
    Vector grad(s.size());
    grad[0] = w * sens.delta;
    grad.tail(s.size() - 1) = w * sens.beta;
    return grad;
}

double stressed_lgd(double lgd0, double shift, const SoftClip& clip) {
    return clip(lgd0 + shift);
}

double stressed_lgd(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s,
                    const SoftClip& clip) {
    return stressed_lgd(e.lgd0, lgd_shift(sens, s), clip);
}

Vector stressed_lgd_gradient(const ExposureRecord& e, const SectorSensitivities& sens, const ScenarioVector& s,
                             const SoftClip& clip) {
    const double w = clip.derivative(e.lgd0 + lgd_shift(sens, s));
    Vector grad(s.size());
    grad[0] = w * sens.eta;
    grad.tail(s.size() - 1) = w * sens.gamma;
    return grad;
}

double monotonicity_violation(const Portfolio& portfolio, const ScenarioVector& s) {
    double worst = 0.0;
    for (const auto& e : portfolio.exposures) {
        const auto& sens = portfolio.sensitivities_for(e);
        worst = std::max(worst, e.pd0 - stressed_pd(e, sens, s));
        worst = std::max(worst, portfolio.lgd_saturation(e.lgd0) - stressed_lgd(e, sens, s, portfolio.lgd_saturation));
    }
    return worst;
}

} // namespace rst
