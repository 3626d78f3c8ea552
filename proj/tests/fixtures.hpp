#pragma once

#include "rst/capital.hpp"
#include "rst/sector_view.hpp"

#include <random>
#include <string>

namespace fixture {

inline rst::SectorSensitivities loadings(std::string id, double delta, rst::Vector beta, double eta, rst::Vector gamma) {
    rst::SectorSensitivities s;
    s.sector_id = std::move(id);
    s.delta = delta;
    s.eta = eta;
    s.beta = std::move(beta);
    s.gamma = std::move(gamma);
    return s;
}

/// Random sign-constrained portfolio with `sectors` sectors and `per_sector` exposures each.
inline rst::Portfolio random_portfolio(std::mt19937_64& rng, std::size_t d, std::size_t sectors, std::size_t per_sector) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    rst::Portfolio p;
    const auto m = static_cast<Eigen::Index>(d - 1);
    for (std::size_t k = 0; k < sectors; ++k) {
        const std::string id = "S" + std::to_string(k);
        rst::Vector beta(m), gamma(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            beta[j] = 0.4 * u(rng);
            gamma[j] = 0.05 * u(rng);
        }
        p.sectors[id] = loadings(id, 0.2 + 0.6 * u(rng), beta, 0.02 + 0.05 * u(rng), gamma);
        for (std::size_t i = 0; i < per_sector; ++i) {
            p.exposures.push_back(rst::ExposureRecord{id + "_" + std::to_string(i), id, 10.0 + 90.0 * u(rng),
                                                      0.002 + 0.05 * u(rng), 0.2 + 0.4 * u(rng),
                                                      0.05 + 0.2 * u(rng), 1.0 + 3.0 * u(rng)});
        }
    }
    return p;
}

inline rst::CapitalState state_for(const rst::Portfolio& p, const rst::LossQuantileSpec& spec, rst::RwaMode mode,
                                   double capital_share = 0.12) {
    rst::CapitalState st;
    st.rwa_0 = rst::baseline_irb_rwa(p, spec, true);
    st.cet1_0 = capital_share * st.rwa_0;
    st.rwa_mode = mode;
    if (mode == rst::RwaMode::Linear) st.alpha = rst::calibrate_alpha(p, spec, true);
    return st;
}

} // namespace fixture
