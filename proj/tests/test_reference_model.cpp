#include "rst/reference_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rst;

namespace {

Matrix sample_sigma() {
    Matrix s(3, 3);
    s << 1.5, 0.4, -0.2,
         0.4, 0.8, 0.1,
        -0.2, 0.1, 2.0;
    return s;
}

} // namespace

TEST_CASE("whitening inverts the Cholesky factor") {
    const auto model = ReferenceModel::gaussian(sample_sigma());
    const Vector s = Vector::LinSpaced(3, -1.0, 2.0);
    const Vector y = model.whiten(s);
    CHECK((model.unwhiten(y) - s).norm() <= 1e-14);
    const double direct = s.dot(sample_sigma().inverse() * s);
    CHECK(model.mahalanobis_sq(s) == doctest::Approx(direct).epsilon(1e-13));
    CHECK((model.chol() * model.chol().transpose() - sample_sigma()).norm() <= 1e-14);
}

TEST_CASE("identity covariance leaves coordinates unchanged") {
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    Vector s(2);
    s << 0.3, -1.7;
    CHECK(model.whiten(s) == s);
    CHECK(model.mahalanobis_sq(s) == doctest::Approx(0.09 + 2.89));
    CHECK(model.factor_names() == std::vector<std::string>{"g", "x1"});
}

TEST_CASE("invalid covariance matrices are rejected") {
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(ReferenceModel::gaussian(asym), InvalidInput);
    Matrix indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(ReferenceModel::gaussian(indefinite), InvalidInput);
    CHECK_THROWS_AS(ReferenceModel::gaussian(Matrix::Identity(1, 1)), InvalidInput);
    CHECK_THROWS_AS(ReferenceModel::student_t(Matrix::Identity(2, 2), 0.0), InvalidInput);
    CHECK_THROWS_AS(ReferenceModel::gaussian(Matrix::Identity(2, 2), {"only_one"}), InvalidInput);
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    CHECK_THROWS_AS(model.whiten(Vector::Zero(3)), InvalidInput);
}

TEST_CASE("Gaussian tail probability in two dimensions is exp(-m2/2)") {
    const auto model = ReferenceModel::gaussian(Matrix::Identity(2, 2));
    for (double m2 : {0.0, 0.1, 1.0, 4.6, 13.8, 20.0}) {
        CHECK(std::abs(model.tail_probability(m2) - std::exp(-0.5 * m2)) <= 1e-12);
    }
    const auto score = model.plausibility_from_m2(2.0 * std::log(1000.0));
    CHECK(score.rarity == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(model.plausibility_from_m2(0.0).rarity == 0.0);
}

TEST_CASE("Student-t tail probability agrees with simulation") {
    // d^2 / d of a multivariate t with scatter Sigma follows F(d, nu).
    const double nu = 5.0;
    const auto model = ReferenceModel::student_t(sample_sigma(), nu);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi(nu);
    const int n = 200000;
    const double threshold = 9.0;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        Vector z(3);
        for (int j = 0; j < 3; ++j) z[j] = normal(rng);
        const Vector s = model.unwhiten(z / std::sqrt(chi(rng) / nu));
        hits += model.mahalanobis_sq(s) >= threshold;
    }
    const double p = model.tail_probability(threshold);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) <= 4.0 * se);
}

TEST_CASE("heavier tails give larger tail probabilities beyond m2 = d") {
    for (int d : {2, 3, 5}) {
        const auto gauss = ReferenceModel::gaussian(Matrix::Identity(d, d));
        for (double m2 : {d + 0.5, d + 3.0, 2.0 * d + 5.0, 30.0}) {
            const double p30 = gauss.with_family(Family::StudentT, 30).tail_probability(m2);
            const double p6 = gauss.with_family(Family::StudentT, 6).tail_probability(m2);
            const double p3 = gauss.with_family(Family::StudentT, 3).tail_probability(m2);
            INFO("d=" << d << " m2=" << m2);
            CHECK(p3 > p6);
            CHECK(p6 > p30);
            CHECK(p30 > gauss.tail_probability(m2));
        }
    }
}

TEST_CASE("negative log-density is monotone in d^2 for both families") {
    const auto gauss = ReferenceModel::gaussian(Matrix::Identity(3, 3));
    const auto t = gauss.with_family(Family::StudentT, 4.0);
    CHECK(gauss.neg_log_density_from_m2(3.0) == 1.5);
    CHECK(t.neg_log_density_from_m2(3.0) == doctest::Approx(3.5 * std::log(1.75)));
    for (double m2 = 0.0; m2 < 50.0; m2 += 0.5) {
        CHECK(t.neg_log_density_from_m2(m2 + 0.5) > t.neg_log_density_from_m2(m2));
    }
}

TEST_CASE("marginal quantile uses the coordinate scale") {
    const auto model = ReferenceModel::gaussian(sample_sigma());
    CHECK(model.marginal_quantile(0, 0.999) == doctest::Approx(std::sqrt(1.5) * 3.090232306167813).epsilon(1e-12));
    const auto t = model.with_family(Family::StudentT, 4.0);
    CHECK(t.marginal_quantile(0, 0.999) > model.marginal_quantile(0, 0.999));
}

TEST_CASE("covariance estimation from a history") {
    Matrix h(5, 2);
    h << 1.0, 2.0,
         2.0, 1.0,
         3.0, 4.0,
         4.0, 3.0,
         5.0, 5.0;
    // Hand-computed: mean (3, 3); centred cross products / 4.
    CovarianceEstimateOptions no_ridge;
    no_ridge.ridge = false;
    const auto model = estimate_covariance(h, {"g", "x"}, no_ridge);
    CHECK(model.sigma()(0, 0) == doctest::Approx(2.5));
    CHECK(model.sigma()(1, 1) == doctest::Approx(2.5));
    CHECK(model.sigma()(0, 1) == doctest::Approx(2.0));

    const auto ridged = estimate_covariance(h, {"g", "x"});
    CHECK(ridged.sigma()(0, 0) == doctest::Approx(2.5 + 2.5e-8).epsilon(1e-15));

    CHECK_THROWS_AS(estimate_covariance(h.topRows(2)), InvalidInput);
    Matrix collinear(4, 2);
    collinear << 1, 2, 2, 4, 3, 6, 4, 8;
    CHECK_THROWS_AS(estimate_covariance(collinear, {}, no_ridge), InvalidInput);
    CHECK_NOTHROW(estimate_covariance(collinear));
}
