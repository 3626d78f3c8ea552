#include "fixtures.hpp"
#include "rst/sector_view.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rst;

TEST_CASE("EAD-weighted sector aggregates") {
    Portfolio p;
    Vector zero = Vector::Zero(1);
    p.sectors["k"] = fixture::loadings("k", 0.5, zero, 0.0, zero);
    p.exposures = {ExposureRecord{"a", "k", 60.0, 0.01, 0.4, 0.1, 1.0},
                   ExposureRecord{"b", "k", 40.0, 0.02, 0.3, 0.1, 1.0}};
    const auto agg = aggregate_sectors(p, ScenarioVector::Zero(2));
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].pd_star == doctest::Approx(0.014).epsilon(1e-14));
    CHECK(agg[0].lgd_star == doctest::Approx(0.36).epsilon(1e-14));
    CHECK(agg[0].weight_total == 100.0);
    CHECK(agg[0].exposure_weights[0].second == doctest::Approx(0.6).epsilon(1e-15));

    Portfolio empty_sector = p;
    empty_sector.sectors["unused"] = fixture::loadings("unused", 0.5, zero, 0.0, zero);
    CHECK(aggregate_sectors(empty_sector, ScenarioVector::Zero(2)).size() == 1);
}

TEST_CASE("aggregates respect weights and bounds on random portfolios") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = fixture::random_portfolio(rng, 3, 3, 4);
        ScenarioVector s(3);
        s << n01(rng), n01(rng), n01(rng);
        for (const auto& a : aggregate_sectors(p, s)) {
            double total = 0.0, lo = 1.0, hi = 0.0;
            for (const auto& [id, w] : a.exposure_weights) {
                CHECK(w >= 0.0);
                total += w;
            }
            for (const auto& e : p.exposures) {
                if (e.sector_id != a.sector_id) continue;
                const double pd = stressed_pd(e, p.sensitivities_for(e), s);
                lo = std::min(lo, pd);
                hi = std::max(hi, pd);
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
            CHECK(a.pd_star >= lo * (1 - 1e-14));
            CHECK(a.pd_star <= hi * (1 + 1e-14));
        }
    }
}

TEST_CASE("one exposure per sector reproduces the exposure engine exactly") {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> n01;
    LossQuantileSpec spec;
    const auto p = fixture::random_portfolio(rng, 3, 4, 1);
    const auto sp = sector_portfolio_from_exposures(p);
    REQUIRE(sp.sectors.size() == 4);

    for (RwaMode mode : {RwaMode::IrbFull, RwaMode::Constant}) {
        const auto st = fixture::state_for(p, spec, mode);
        const auto exposure_model = make_capital_model(p, st, spec, 3);
        const auto sector_model = make_sector_capital_model(sp, st, spec, 3);
        for (int trial = 0; trial < 25; ++trial) {
            ScenarioVector s(3);
            s << n01(rng), n01(rng), n01(rng);
            CHECK(sector_loss_quantile(sp, s, spec) == loss_quantile(p, s, spec));
            CHECK(sector_model.loss_quantile(s) == exposure_model.loss_quantile(s));
            CHECK(sector_model.rwa(s) == exposure_model.rwa(s));
            CHECK(sector_model.ratio(s) == exposure_model.ratio(s));
            if (mode == RwaMode::IrbFull) CHECK(sector_rwa(sp, s, spec, true) == exposure_model.rwa(s));
        }
    }

    auto doubled = p;
    doubled.exposures.push_back(doubled.exposures.front());
    doubled.exposures.back().exposure_id = "dup";
    CHECK_THROWS_AS(sector_portfolio_from_exposures(doubled), InvalidInput);
}

TEST_CASE("zero-correlation sector loss") {
    SectorPortfolio sp;
    Vector zero = Vector::Zero(1);
    sp.sectors = {SectorRecord{"a", 30.0, 0.02, 0.4, 0.0, std::nullopt, fixture::loadings("a", 0.3, zero, 0.0, zero)},
                  SectorRecord{"b", 70.0, 0.05, 0.2, 0.0, std::nullopt, fixture::loadings("b", 0.3, zero, 0.0, zero)}};
    LossQuantileSpec spec;
    CHECK(sector_loss_quantile(sp, ScenarioVector::Zero(2), spec) ==
          doctest::Approx(30 * 0.4 * 0.02 + 70 * 0.2 * 0.05).epsilon(1e-14));
    const auto w = sp.weights();
    CHECK(w[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(sp.total_ead() == 100.0);
    // No maturity on the records: the adjustment is skipped even if requested.
    CHECK(sector_risk_weight(sp.sectors[0], ScenarioVector::Zero(2), spec, true) ==
          sector_risk_weight(sp.sectors[0], ScenarioVector::Zero(2), spec, false));
}

TEST_CASE("linear sector risk weight is tangent at the baseline") {
    SectorPortfolio sp;
    Vector beta(1), zero = Vector::Zero(1);
    beta << 0.2;
    sp.sectors = {SectorRecord{"a", 50.0, 0.015, 0.45, 0.12, 2.5, fixture::loadings("a", 0.6, beta, 0.0, zero)}};
    LossQuantileSpec spec;
    const auto lin = calibrate_linear_risk_weights(sp, spec, true);
    ScenarioVector dir(2);
    dir << 1.0, 0.5;
    auto gap = [&](double h) {
        const ScenarioVector s = h * dir;
        return std::abs(sector_risk_weight(sp.sectors[0], s, spec, true) -
                        linear_sector_risk_weight(lin.intercept[0], lin.slope[0], sector_stressed_pd(sp.sectors[0], s),
                                                  sp.sectors[0].pd0));
    };
    CHECK(gap(0.0) <= 1e-15);
    double previous = gap(0.2);
    for (double h = 0.1; h > 0.005; h /= 2) {
        const double g = gap(h);
        CHECK(g / previous == doctest::Approx(0.25).epsilon(0.1));
        previous = g;
    }
}

TEST_CASE("sector portfolio validation") {
    Vector zero = Vector::Zero(1);
    SectorPortfolio sp;
    sp.sectors = {SectorRecord{"a", 30.0, 0.02, 0.4, 0.1, std::nullopt, fixture::loadings("a", 0.3, zero, 0.0, zero)}};
    CHECK_NOTHROW(sp.validate(2));
    CHECK_THROWS_AS(sp.validate(3), InvalidInput);
    auto bad = sp;
    bad.sectors[0].pd0 = 1.5;
    CHECK_THROWS_AS(bad.validate(2), InvalidInput);
    bad = sp;
    bad.sectors.push_back(bad.sectors[0]);
    CHECK_THROWS_AS(bad.validate(2), InvalidInput);
}
