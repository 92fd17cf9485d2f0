#pragma once

namespace vibrancy {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double inc_beta(double a, double b, double x);

// Student-t distribution with df degrees of freedom.
double t_cdf(double t, double df);
// Two-sided tail probability P(|T| >= |t|).
double t_two_sided_p(double t, double df);
// Quantile (inverse CDF), p in (0,1).
double t_quantile(double p, double df);

// Standard normal.
double normal_cdf(double z);
double normal_two_sided_p(double z);

// Digamma and trigamma via recurrence + asymptotic series, x > 0.
double digamma(double x);
double trigamma(double x);

}  // namespace vibrancy
