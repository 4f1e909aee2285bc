// Copyright the rqfarm authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.

#ifndef RQFARM_NORMAL_HPP
#define RQFARM_NORMAL_HPP

namespace rqfarm {

// Standard normal CDF, accurate to ~1e-15 via erfc.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse standard normal CDF for p in (0,1).
// Rational approximation refined by one Newton step on the CDF;
// absolute error well below 1e-10 across the open interval.
// Throws std::domain_error for p outside (0,1).
double normal_quantile(double p);

} // namespace rqfarm

#endif
