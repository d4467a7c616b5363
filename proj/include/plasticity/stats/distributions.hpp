#pragma once

namespace plasticity::stats {

/// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` (> 0, may be fractional) degrees of freedom.
double student_t_cdf(double t, double df);

/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

double normal_cdf(double z);
double normal_two_sided_p(double z);

/// 0.975 quantile of the standard normal.
inline constexpr double kNormal975 = 1.959963984540054;

}  // namespace plasticity::stats
