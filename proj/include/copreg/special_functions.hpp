#pragma once

#include <limits>
#include <stdexcept>

namespace copreg {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Standard normal density; 0 at +/-inf.
double norm_pdf(double z);

/// Standard normal cdf, absolute error below 1e-14 on finite inputs and full
/// relative precision in the lower tail.  Underflows to 0 below z = -37.5.
double norm_cdf(double z);

/// log Phi(z), usable far into the lower tail (asymptotic series below -20).
double norm_logcdf(double z);

/// Inverse standard normal cdf for p in (0,1).  Throws std::domain_error
/// otherwise; callers map p=0 / p=1 to -inf / +inf themselves.
double norm_quantile(double p);

/// Integration limits on the latent normal scale.  Endpoints may be infinite.
struct Interval {
    double lower;
    double upper;
};

struct degenerate_interval_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Phi(upper) - Phi(lower), computed tail-stably (complementary cdf when the
/// interval sits in one tail).
double interval_mass(const Interval& iv);

/// E[Z | lower <= Z <= upper] for Z ~ N(0,1).
/// Throws degenerate_interval_error when the interval mass is below 1e-300.
double trunc_norm_mean(const Interval& iv);

/// E[Z^2 | lower <= Z <= upper] for Z ~ N(0,1).
double trunc_norm_second_moment(const Interval& iv);

} // namespace copreg
