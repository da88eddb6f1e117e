#pragma once

namespace meandev {

double normal_pdf(double x);
double normal_cdf(double x);
// Inverse of normal_cdf on (0, 1), accurate to a few ulps after refinement.
double normal_quantile(double p);

}  // namespace meandev
