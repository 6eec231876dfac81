// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace alignrank::stats {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly
/// (continued fraction) in the upper tail so small values keep their precision.
double regularized_gamma_q(double a, double x);

/// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, int df);

/// 1 - Phi(z) for the standard normal.
double normal_sf(double z);

}  // namespace alignrank::stats
