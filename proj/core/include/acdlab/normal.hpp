#pragma once

namespace acdlab {

/// Standard normal quantile, Wichura's AS 241 (PPND16) rational approximation.
/// Accurate to ~1e-16 relative over p in (0, 1). Used as the one and only
/// uniform-to-Gaussian transform so that sample streams are a pure function of
/// the underlying bit stream.
double normal_quantile(double p);

/// Standard normal CDF via erfc. Independent of normal_quantile's rational
/// polynomials, so the two can cross-check each other.
double normal_cdf(double x);

/// CDF of |Z|/scale for Z standard normal: 0 for x <= 0, erf(x/(scale*sqrt(2))).
double half_normal_cdf(double x, double scale = 1.0);

} // namespace acdlab
