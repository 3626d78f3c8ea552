#pragma once

#include "rst/types.hpp"

#include <string>
#include <vector>

namespace rst {

enum class Family { Gaussian, StudentT };

/// p-value style plausibility of a scenario under the reference model.
struct PlausibilityScore {
    double mahalanobis_sq = 0.0;
    double tail_probability = 1.0;
    double rarity = 0.0; ///< -log10(tail_probability)
};

/// Zero-mean elliptical reference distribution over the scenario space.
///
/// Sigma is factorised once at construction (Sigma = L L^T). All distances are
/// computed through L: whitening is y = L^{-1} s, so d^2(s) = |y|^2. Under the
/// Student-t family Sigma is the scatter matrix and nu the degrees of freedom.
/// Instances are immutable and safe to share across threads.
class ReferenceModel {
public:
    static ReferenceModel gaussian(Matrix sigma, std::vector<std::string> factor_names = {});
    static ReferenceModel student_t(Matrix sigma, double nu, std::vector<std::string> factor_names = {});

    std::size_t dimension() const { return static_cast<std::size_t>(sigma_.rows()); }
    Family family() const { return family_; }
    double nu() const { return nu_; }
    const Matrix& sigma() const { return sigma_; }
    const Matrix& chol() const { return chol_; }
    const std::vector<std::string>& factor_names() const { return names_; }

    double mahalanobis_sq(const ScenarioVector& s) const;
    Vector whiten(const ScenarioVector& s) const;
    ScenarioVector unwhiten(const Vector& y) const;

    /// Negative log-density up to an additive constant, as a function of d^2.
    double neg_log_density_from_m2(double m2) const;
    double neg_log_density(const ScenarioVector& s) const;

    /// P(d^2(S) >= m2): chi-squared(d) tail, or F(d, nu) tail at m2/d.
    double tail_probability(double m2) const;
    PlausibilityScore plausibility(const ScenarioVector& s) const;
    PlausibilityScore plausibility_from_m2(double m2) const;

    /// Upper p-quantile of the marginal distribution of coordinate i.
    double marginal_quantile(std::size_t i, double p) const;

    /// Copy of this model with a different family; Sigma and names unchanged.
    ReferenceModel with_family(Family family, double nu = 0.0) const;

private:
    ReferenceModel(Family family, double nu, Matrix sigma, std::vector<std::string> names);

    void check_dimension(const Vector& v) const;

    Family family_;
    double nu_;
    Matrix sigma_;
    Matrix chol_;
    std::vector<std::string> names_;
};

struct CovarianceEstimateOptions {
    bool ridge = true;
    /// Ridge weight; negative selects the default 1e-8 * trace / d.
    double ridge_weight = -1.0;
};

/// Centered sample covariance of a T x d history (geopolitical factor in column 0),
/// plus a ridge term on the diagonal. Returns a Gaussian reference model.
ReferenceModel estimate_covariance(const Matrix& history, std::vector<std::string> factor_names = {},
                                   const CovarianceEstimateOptions& options = {});

} // namespace rst
