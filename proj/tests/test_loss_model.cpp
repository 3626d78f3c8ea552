#include "rst/loss_model.hpp"
#include "rst/special_functions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace rst;

namespace {

SectorSensitivities flat(std::size_t d) {
    SectorSensitivities s;
    s.sector_id = "k";
    s.beta = Vector::Zero(static_cast<Eigen::Index>(d - 1));
    s.gamma = Vector::Zero(static_cast<Eigen::Index>(d - 1));
    return s;
}

Portfolio single(double ead, double pd, double lgd, double rho) {
    Portfolio p;
    p.exposures = {ExposureRecord{"e", "k", ead, pd, lgd, rho, 1.0}};
    p.sectors["k"] = flat(2);
    return p;
}

Portfolio homogeneous(std::size_t n, double ead, double pd, double lgd, double rho) {
    Portfolio p;
    for (std::size_t i = 0; i < n; ++i) p.exposures.push_back(ExposureRecord{"e" + std::to_string(i), "k", ead, pd, lgd, rho, 1.0});
    p.sectors["k"] = flat(2);
    return p;
}

const ScenarioVector zero2 = ScenarioVector::Zero(2);

double vasicek_oracle(double pd, double rho, double q) {
    const boost::math::normal_distribution<double> n;
    return boost::math::cdf(n, (boost::math::quantile(n, pd) + std::sqrt(rho) * boost::math::quantile(n, q)) /
                                   std::sqrt(1.0 - rho));
}

} // namespace

TEST_CASE("normal quantile reference value") {
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < 0.999 ? lo : hi) = mid;
    }
    CHECK(normal_quantile(0.999) == doctest::Approx(lo).epsilon(1e-12));
    CHECK(normal_quantile(0.999) == doctest::Approx(3.090232).epsilon(1e-6));
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("single exposure tail loss") {
    LossQuantileSpec spec;
    const double tail = tail_default_probability(0.02, 0.2, spec.systematic_quantile());
    CHECK(tail == doctest::Approx(vasicek_oracle(0.02, 0.2, 0.999)).epsilon(1e-12));
    CHECK(tail == doctest::Approx(0.22631280715580143).epsilon(1e-12));
    const double loss = loss_quantile(single(100.0, 0.02, 0.5, 0.2), zero2, spec);
    CHECK(loss == doctest::Approx(11.315640357790071).epsilon(1e-12));
    CHECK(loss == doctest::Approx(11.32).epsilon(1e-3));
}

TEST_CASE("zero correlation and median collapse") {
    LossQuantileSpec spec;
    CHECK(loss_quantile(single(100.0, 0.03, 0.4, 0.0), zero2, spec) == doctest::Approx(100.0 * 0.4 * 0.03).epsilon(1e-13));
    spec.q = 0.5;
    const double expected = 100.0 * 0.4 * normal_cdf(normal_quantile(0.03) / std::sqrt(1.0 - 0.3));
    CHECK(loss_quantile(single(100.0, 0.03, 0.4, 0.3), zero2, spec) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("tail probability derivative") {
    const double zq = normal_quantile(0.999);
    for (double pd : {1e-4, 0.003, 0.02, 0.2, 0.7}) {
        for (double rho : {0.03, 0.12, 0.24}) {
            const double h = 1e-6 * pd;
            const double fd = (tail_default_probability(pd + h, rho, zq) - tail_default_probability(pd - h, rho, zq)) / (2 * h);
            CHECK(tail_default_probability_derivative(pd, rho, zq) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    CHECK(tail_default_probability(0.0, 0.2, zq) == 0.0);
    CHECK(tail_default_probability(1.0, 0.2, zq) == 1.0);
}

TEST_CASE("loss quantile monotone and bounded") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double pd = 1e-4 + 0.3 * u(rng), lgd = 0.05 + 0.9 * u(rng), rho = 0.01 + 0.5 * u(rng);
        LossQuantileSpec a, b;
        a.q = 0.5 + 0.49 * u(rng);
        b.q = a.q + 0.5 * (1.0 - a.q);
        const double base = loss_quantile(single(50.0, pd, lgd, rho), zero2, a);
        CHECK(loss_quantile(single(50.0, pd, lgd, rho), zero2, b) >= base);
        CHECK(loss_quantile(single(50.0, std::min(pd * 1.1, 0.99), lgd, rho), zero2, a) >= base);
        CHECK(loss_quantile(single(50.0, pd, std::min(lgd * 1.1, 0.99), rho), zero2, a) >= base);
        CHECK(base >= 0.0);
        CHECK(base <= 50.0);
    }
    LossQuantileSpec bad;
    bad.q = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("Monte Carlo agrees with the asymptotic formula on a granular portfolio") {
    const auto p = homogeneous(10000, 1.0, 0.01, 0.45, 0.2);
    LossQuantileSpec spec;
    const double analytic = loss_quantile(p, zero2, spec);
    const auto mc = mc_loss_quantile(p, zero2, spec, 100000, 2024);
    CHECK(mc.n_sims == 100000);
    CHECK(mc.std_error > 0.0);
    CHECK(std::abs(mc.quantile - analytic) <= 3.0 * mc.std_error);
}

TEST_CASE("Monte Carlo is deterministic and thread independent") {
    const auto p = homogeneous(200, 2.0, 0.02, 0.4, 0.15);
    LossQuantileSpec spec;
    MonteCarloOptions one{5000, 1}, many{5000, 4};
    const auto a = mc_loss_quantile(p, zero2, spec, 20000, 9, one);
    const auto b = mc_loss_quantile(p, zero2, spec, 20000, 9, many);
    CHECK(a.quantile == b.quantile);
    CHECK(a.std_error == b.std_error);
    CHECK(a.mean == b.mean);
    CHECK_THROWS_AS(mc_loss_quantile(p, zero2, spec, 9999, 9), InvalidInput);
}

TEST_CASE("Monte Carlo edge cases") {
    LossQuantileSpec spec;
    auto tiny = single(100.0, 1e-9, 0.5, 0.2);
    tiny.sectors["k"].delta = 0.0;
    tiny.sectors["k"].beta << 50.0;
    ScenarioVector s(2);
    s << 0.0, -20.0;
    CHECK(mc_loss_quantile(tiny, s, spec, 10000, 1).quantile == 0.0);

    const auto comonotone = single(100.0, 0.05, 0.5, 0.999999);
    const auto mc = mc_loss_quantile(comonotone, zero2, spec, 20000, 3);
    CHECK(mc.quantile == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(mc.mean == doctest::Approx(0.05 * 50.0).epsilon(0.1));
}
