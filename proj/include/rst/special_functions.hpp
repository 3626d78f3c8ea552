#pragma once

namespace rst {

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse of the standard normal CDF. Throws InvalidInput unless 0 < p < 1.
double normal_quantile(double p);

/// Lower regularized incomplete gamma P(a, x).
double regularized_incomplete_gamma(double a, double x);
/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x), computed without
/// cancellation in the upper tail.
double regularized_incomplete_gamma_upper(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

double chi_squared_cdf(double x, double dof);
double chi_squared_sf(double x, double dof);

double fisher_cdf(double x, double d1, double d2);
double fisher_sf(double x, double d1, double d2);

double student_t_cdf(double t, double nu);
double student_t_quantile(double p, double nu);

} // namespace rst
