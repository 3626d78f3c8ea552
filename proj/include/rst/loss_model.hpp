#pragma once

#include "rst/transmission.hpp"

#include <cstdint>

namespace rst {

struct LossQuantileSpec {
    double q = 0.999;

    void validate() const;
    double systematic_quantile() const; ///< Phi^{-1}(q)
};

/// Conditional default probability at the q-quantile of the systematic factor:
/// Phi((Phi^{-1}(pd) + sqrt(rho) Phi^{-1}(q)) / sqrt(1 - rho)). Handles pd at 0 or 1.
double tail_default_probability(double pd, double rho, double systematic_quantile);
/// Derivative of tail_default_probability with respect to pd.
double tail_default_probability_derivative(double pd, double rho, double systematic_quantile);

/// Asymptotic single-factor approximation of the q-quantile of portfolio loss,
/// applied exposure by exposure.
double loss_quantile(const Portfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec);

struct MonteCarloLoss {
    double quantile = 0.0;
    double std_error = 0.0;
    double mean = 0.0;
    std::size_t n_sims = 0;
};

struct MonteCarloOptions {
    std::size_t block_size = 10000; ///< simulations per RNG stream
    unsigned threads = 0;           ///< 0 selects hardware concurrency
};

/// Monte Carlo estimate of the same quantile under the one-factor latent model.
///
/// Each block of simulations owns an RNG stream keyed by (seed, block index), so
/// the result depends only on seed and block size, never on thread count. The
/// quantile is the order statistic ceil(q * n_sims). The standard error is the
/// distribution-free order-statistic estimate over a +/- 2 sigma rank window.
MonteCarloLoss mc_loss_quantile(const Portfolio& portfolio, const ScenarioVector& s,
                                const LossQuantileSpec& spec, std::size_t n_sims, std::uint64_t seed,
                                const MonteCarloOptions& options = {});

} // namespace rst
