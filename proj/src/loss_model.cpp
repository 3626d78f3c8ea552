#include "rst/loss_model.hpp"

#include "rst/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <limits>
#include <span>
#include <thread>
#include <tuple>

namespace rst {

void LossQuantileSpec::validate() const {
    if (!(q > 0.0 && q < 1.0)) {
        throw InvalidInput("loss quantile level q must lie strictly in (0,1)");
    }
}

double LossQuantileSpec::systematic_quantile() const {
    validate();
    return normal_quantile(q);
}

double tail_default_probability(double pd, double rho, double systematic_quantile) {
    if (pd <= 0.0) return 0.0;
    if (pd >= 1.0) return 1.0;
    return normal_cdf((normal_quantile(pd) + std::sqrt(rho) * systematic_quantile) / std::sqrt(1.0 - rho));
}

double tail_default_probability_derivative(double pd, double rho, double systematic_quantile) {
    if (pd <= 0.0 || pd >= 1.0) return 0.0;
    const double x = normal_quantile(pd);
    const double u = (x + std::sqrt(rho) * systematic_quantile) / std::sqrt(1.0 - rho);
    return normal_pdf(u) / (std::sqrt(1.0 - rho) * normal_pdf(x));
}

double loss_quantile(const Portfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec) {
    const double c = spec.systematic_quantile();
    double total = 0.0;
    for (const auto& e : portfolio.exposures) {
        const auto& sens = portfolio.sensitivities_for(e);
        const double pd = stressed_pd(e, sens, s);
        const double lgd = stressed_lgd(e, sens, s, portfolio.lgd_saturation);
        total += e.ead * lgd * tail_default_probability(pd, e.rho, c);
    }
    return total;
}

namespace {

// Exposures sharing (loss given default in currency, PD, rho) are exchangeable:
// conditional on Z their default count is Binomial(count, p(Z)).
struct LossGroup {
    double loss_if_default = 0.0;
    double pd = 0.0;
    double rho = 0.0;
    double threshold = 0.0; ///< Phi^{-1}(pd)
    long count = 0;
};

std::vector<LossGroup> group_exposures(const Portfolio& portfolio, const ScenarioVector& s) {
    std::map<std::tuple<double, double, double>, long> counts;
    std::vector<std::tuple<double, double, double>> order;
    for (const auto& e : portfolio.exposures) {
        const auto& sens = portfolio.sensitivities_for(e);
        const double pd = stressed_pd(e, sens, s);
        const double lgd = stressed_lgd(e, sens, s, portfolio.lgd_saturation);
        const auto key = std::make_tuple(e.ead * lgd, pd, e.rho);
        if (counts[key]++ == 0) order.push_back(key);
    }
    std::vector<LossGroup> groups;
    groups.reserve(order.size());
    for (const auto& key : order) {
        LossGroup g;
        std::tie(g.loss_if_default, g.pd, g.rho) = key;
        g.count = counts[key];
        g.threshold = g.pd <= 0.0   ? -std::numeric_limits<double>::infinity()
                      : g.pd >= 1.0 ? std::numeric_limits<double>::infinity()
                                    : normal_quantile(g.pd);
        groups.push_back(g);
    }
    return groups;
}

void simulate_block(const std::vector<LossGroup>& groups, std::uint64_t seed, std::size_t block,
                    std::span<double> out) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& loss : out) {
        const double z = normal(rng);
        double total = 0.0;
        for (const auto& g : groups) {
            if (g.count == 1) {
                // Single obligor: draw the latent variable Y directly.
                const double y = std::sqrt(g.rho) * z + std::sqrt(1.0 - g.rho) * normal(rng);
                if (y <= g.threshold) total += g.loss_if_default;
            } else {
                const double p = g.pd <= 0.0   ? 0.0
                                 : g.pd >= 1.0 ? 1.0
                                               : normal_cdf((g.threshold - std::sqrt(g.rho) * z) /
                                                            std::sqrt(1.0 - g.rho));
                if (p <= 0.0) continue;
                std::binomial_distribution<long> binom(g.count, std::min(p, 1.0));
                total += g.loss_if_default * static_cast<double>(binom(rng));
            }
        }
        loss = total;
    }
}

} // namespace

MonteCarloLoss mc_loss_quantile(const Portfolio& portfolio, const ScenarioVector& s, const LossQuantileSpec& spec,
                                std::size_t n_sims, std::uint64_t seed, const MonteCarloOptions& options) {
    spec.validate();
    if (n_sims < 10000) {
        throw InvalidInput("mc_loss_quantile: n_sims must be at least 1e4");
    }
    if (options.block_size == 0) {
        throw InvalidInput("mc_loss_quantile: block size must be positive");
    }
    const auto groups = group_exposures(portfolio, s);

    std::vector<double> losses(n_sims);
    const std::size_t n_blocks = (n_sims + options.block_size - 1) / options.block_size;
    unsigned n_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_blocks));

    auto run_blocks = [&](unsigned worker) {
        for (std::size_t b = worker; b < n_blocks; b += n_threads) {
            const std::size_t begin = b * options.block_size;
            const std::size_t end = std::min(n_sims, begin + options.block_size);
            simulate_block(groups, seed, b, std::span<double>(losses).subspan(begin, end - begin));
        }
    };
    if (n_threads <= 1) {
        run_blocks(0);
    } else {
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < n_threads; ++w) workers.emplace_back(run_blocks, w);
    }

    MonteCarloLoss result;
    result.n_sims = n_sims;
    double sum = 0.0;
    for (double l : losses) sum += l;
    result.mean = sum / static_cast<double>(n_sims);

    std::sort(losses.begin(), losses.end());
    const double n = static_cast<double>(n_sims);
    auto order_stat = [&](double level) {
        const double rank = std::ceil(std::clamp(level, 0.0, 1.0) * n);
        const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
        return losses[idx];
    };
    result.quantile = order_stat(spec.q);
    const double sigma = std::sqrt(spec.q * (1.0 - spec.q) / n);
    result.std_error = (order_stat(spec.q + 2.0 * sigma) - order_stat(spec.q - 2.0 * sigma)) / 4.0;
    return result;
}

} // namespace rst
