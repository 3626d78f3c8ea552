#include "rst/reference_model.hpp"

#include "rst/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rst {
namespace {

std::vector<std::string> default_names(std::size_t d) {
    std::vector<std::string> names;
    names.reserve(d);
    names.emplace_back("g");
    for (std::size_t i = 1; i < d; ++i) {
        names.push_back("x" + std::to_string(i));
    }
    return names;
}

} // namespace

ReferenceModel::ReferenceModel(Family family, double nu, Matrix sigma, std::vector<std::string> names)
    : family_(family), nu_(nu), sigma_(std::move(sigma)), names_(std::move(names)) {
    const auto d = sigma_.rows();
    if (d < 2 || sigma_.cols() != d) {
        throw InvalidInput("reference model: covariance must be square with d >= 2");
    }
    if (!sigma_.allFinite()) {
        throw InvalidInput("reference model: covariance has non-finite entries");
    }
    const double scale = sigma_.cwiseAbs().maxCoeff();
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidInput("reference model: covariance is not symmetric");
    }
    if (family_ == Family::StudentT && !(nu_ > 0.0 && std::isfinite(nu_))) {
        throw InvalidInput("reference model: Student-t requires nu > 0");
    }
    if (names_.empty()) {
        names_ = default_names(static_cast<std::size_t>(d));
    }
    if (names_.size() != static_cast<std::size_t>(d)) {
        throw InvalidInput("reference model: expected " + std::to_string(d) + " factor names, got " +
                           std::to_string(names_.size()));
    }

    // Symmetrise before factorising so L L^T reproduces the stored matrix.
    sigma_ = 0.5 * (sigma_ + sigma_.transpose());
    Eigen::LLT<Matrix> llt(sigma_);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput("reference model: covariance is not positive definite");
    }
    chol_ = llt.matrixL();
    if ((chol_.diagonal().array() <= 0.0).any()) {
        throw InvalidInput("reference model: non-positive Cholesky pivot");
    }
}

ReferenceModel ReferenceModel::gaussian(Matrix sigma, std::vector<std::string> factor_names) {
    return ReferenceModel(Family::Gaussian, 0.0, std::move(sigma), std::move(factor_names));
}

ReferenceModel ReferenceModel::student_t(Matrix sigma, double nu, std::vector<std::string> factor_names) {
    return ReferenceModel(Family::StudentT, nu, std::move(sigma), std::move(factor_names));
}

ReferenceModel ReferenceModel::with_family(Family family, double nu) const {
    return ReferenceModel(family, family == Family::StudentT ? nu : 0.0, sigma_, names_);
}

void ReferenceModel::check_dimension(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != dimension()) {
        throw InvalidInput("scenario dimension " + std::to_string(v.size()) +
                           " does not match reference model dimension " + std::to_string(dimension()));
    }
    require_finite(v, "scenario");
}

Vector ReferenceModel::whiten(const ScenarioVector& s) const {
    check_dimension(s);
    return chol_.triangularView<Eigen::Lower>().solve(s);
}

ScenarioVector ReferenceModel::unwhiten(const Vector& y) const {
    check_dimension(y);
    return chol_.triangularView<Eigen::Lower>() * y;
}

double ReferenceModel::mahalanobis_sq(const ScenarioVector& s) const {
    return whiten(s).squaredNorm();
}

double ReferenceModel::neg_log_density_from_m2(double m2) const {
    if (family_ == Family::Gaussian) {
        return 0.5 * m2;
    }
    const double d = static_cast<double>(dimension());
    return 0.5 * (nu_ + d) * std::log1p(m2 / nu_);
}

double ReferenceModel::neg_log_density(const ScenarioVector& s) const {
    return neg_log_density_from_m2(mahalanobis_sq(s));
}

double ReferenceModel::tail_probability(double m2) const {
    if (!(m2 >= 0.0)) {
        throw InvalidInput("tail_probability: squared distance must be non-negative");
    }
    const double d = static_cast<double>(dimension());
    if (family_ == Family::Gaussian) {
        return chi_squared_sf(m2, d);
    }
    return fisher_sf(m2 / d, d, nu_);
}

PlausibilityScore ReferenceModel::plausibility_from_m2(double m2) const {
    PlausibilityScore score;
    score.mahalanobis_sq = m2;
    score.tail_probability = tail_probability(m2);
    score.rarity = -std::log10(std::max(score.tail_probability, std::numeric_limits<double>::min()));
    if (score.rarity == 0.0) score.rarity = 0.0; // avoid -0
    return score;
}

PlausibilityScore ReferenceModel::plausibility(const ScenarioVector& s) const {
    return plausibility_from_m2(mahalanobis_sq(s));
}

double ReferenceModel::marginal_quantile(std::size_t i, double p) const {
    if (i >= dimension()) {
        throw InvalidInput("marginal_quantile: coordinate out of range");
    }
    const double sd = std::sqrt(sigma_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    if (family_ == Family::Gaussian) {
        return sd * normal_quantile(p);
    }
    return sd * student_t_quantile(p, nu_);
}

ReferenceModel estimate_covariance(const Matrix& history, std::vector<std::string> factor_names,
                                   const CovarianceEstimateOptions& options) {
    const auto t = history.rows();
    const auto d = history.cols();
    if (d < 2) {
        throw InvalidInput("estimate_covariance: need at least 2 factors");
    }
    if (t < d + 1) {
        throw InvalidInput("estimate_covariance: need at least d+1 = " + std::to_string(d + 1) +
                           " observations, got " + std::to_string(t));
    }
    if (!history.allFinite()) {
        throw InvalidInput("estimate_covariance: history contains non-finite values");
    }
    const Eigen::RowVectorXd mean = history.colwise().mean();
    const Matrix centered = history.rowwise() - mean;
    Matrix sigma = (centered.transpose() * centered) / static_cast<double>(t - 1);

    if (options.ridge) {
        const double weight = options.ridge_weight >= 0.0
                                  ? options.ridge_weight
                                  : 1e-8 * sigma.trace() / static_cast<double>(d);
        sigma.diagonal().array() += weight;
    }
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success || (Matrix(llt.matrixL()).diagonal().array() <= 0.0).any()) {
        throw InvalidInput("estimate_covariance: sample covariance is singular" +
                           std::string(options.ridge ? "" : " (ridge disabled)"));
    }
    return ReferenceModel::gaussian(std::move(sigma), std::move(factor_names));
}

} // namespace rst
