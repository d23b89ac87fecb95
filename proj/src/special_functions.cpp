#include "copreg/special_functions.hpp"

#include <cmath>
#include <limits>

namespace copreg {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
constexpr double inv_sqrt2 = 0.7071067811865475244008444;

double log_norm_pdf(double z) {
    if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
    return -0.5 * z * z - 0.9189385332046727417803297;  // log sqrt(2 pi)
}

} // namespace

double norm_pdf(double z) {
    if (std::isinf(z)) return 0.0;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/* cdf via erf/erfc, split as in cephes' ndtr so the lower tail keeps
   relative precision. */
double norm_cdf(double z) {
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    if (z < -37.5) return 0.0;  // below the normal-number range
    const double x = z * inv_sqrt2;
    const double ax = std::fabs(x);
    if (ax < inv_sqrt2) return 0.5 + 0.5 * std::erf(x);
    const double y = 0.5 * std::erfc(ax);
    return x > 0 ? 1.0 - y : y;
}

/* Asymptotic expansion of log Phi below -20 (continued-fraction style series
   on the Mills ratio); log of the cdf otherwise. */
double norm_logcdf(double z) {
    if (std::isinf(z)) {
        return z > 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    if (z > 6.0) return -norm_cdf(-z);  // log(1-eps) ~ -eps
    if (z > -20.0) return std::log(norm_cdf(z));

    const double zsq = z * z;
    double sum = 1.0, term = 1.0, numer = 1.0;
    int sign = 1;
    for (int i = 1; i <= 12; ++i) {
        sign = -sign;
        numer *= 2 * i - 1;
        term /= zsq;
        const double contrib = sign * numer * term;
        sum += contrib;
        if (std::fabs(contrib) < 1e-17 * std::fabs(sum)) break;
    }
    return log_norm_pdf(z) - std::log(-z) + std::log(sum);
}

/* Wichura's algorithm AS 241 (PPND16), double precision throughout. */
double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("norm_quantile: p must lie in (0,1)");
    }
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0 ? -val : val;
}

double interval_mass(const Interval& iv) {
    const double a = iv.lower, b = iv.upper;
    if (!(a < b)) throw std::invalid_argument("interval_mass: requires lower < upper");
    if (a >= 0.0) return norm_cdf(-a) - norm_cdf(-b);  // right tail: complements
    if (b <= 0.0) return norm_cdf(b) - norm_cdf(a);
    return norm_cdf(b) - norm_cdf(a);
}

namespace {

// phi(a) - phi(b) without cancellation when the pdf values are close:
// phi(a)(1 - exp(log phi(b) - log phi(a))) via expm1.
double pdf_difference(double a, double b) {
    const double la = log_norm_pdf(a), lb = log_norm_pdf(b);
    if (la >= lb) return -std::exp(la) * std::expm1(lb - la);
    return std::exp(lb) * std::expm1(la - lb);
}

double checked_mass(const Interval& iv) {
    const double mass = interval_mass(iv);
    if (!(mass >= 1e-300)) {
        throw degenerate_interval_error("truncated-normal interval has vanishing mass");
    }
    return mass;
}

// log(Phi(b)-Phi(a)) for an interval contained in the right tail (0 <= a < b).
double log_right_tail_mass(double a, double b) {
    const double la = norm_logcdf(-a);
    const double lb = std::isinf(b) ? -std::numeric_limits<double>::infinity()
                                    : norm_logcdf(-b);
    return la + std::log1p(-std::exp(lb - la));
}

} // namespace

double trunc_norm_mean(const Interval& iv) {
    double a = iv.lower, b = iv.upper;
    bool flipped = false;
    // reduce to a "right-leaning" interval: |a| <= |b| handled by symmetry
    if (std::fabs(a) > std::fabs(b) || (std::isinf(a) && a < 0)) {
        std::swap(a, b);
        a = -a; b = -b;
        flipped = true;
    }
    const double mass = checked_mass({a, b});  // symmetric under mirroring
    double value;
    if (mass >= 1e-10 || a < 0.0) {
        value = pdf_difference(a, b) / mass;
    } else {
        // far right tail: work in logs; phi(a) > phi(b) there
        const double lnum = log_norm_pdf(a) + std::log1p(-std::exp(log_norm_pdf(b) - log_norm_pdf(a)));
        value = std::exp(lnum - log_right_tail_mass(a, b));
    }
    // clamp into the open interval; roundoff can graze an endpoint in far tails
    if (std::isfinite(a) && value < a) value = std::nextafter(a, b);
    if (std::isfinite(b) && value > b) value = std::nextafter(b, a);
    return flipped ? -value : value;
}

double trunc_norm_second_moment(const Interval& iv) {
    double a = iv.lower, b = iv.upper;
    if (std::fabs(a) > std::fabs(b) || (std::isinf(a) && a < 0)) {
        std::swap(a, b);
        a = -a; b = -b;
    }
    const double mass = checked_mass({a, b});
    const double apa = std::isinf(a) ? 0.0 : a * norm_pdf(a);
    const double bpb = std::isinf(b) ? 0.0 : b * norm_pdf(b);
    double value;
    if (mass >= 1e-10 || a < 1.0) {
        value = 1.0 + (apa - bpb) / mass;
    } else {
        // far right tail, a >= 1: a*phi(a) > b*phi(b)
        const double la = std::log(a) + log_norm_pdf(a);
        const double lb = std::isinf(b) ? -std::numeric_limits<double>::infinity()
                                        : std::log(b) + log_norm_pdf(b);
        const double lnum = la + std::log1p(-std::exp(lb - la));
        value = 1.0 + std::exp(lnum - log_right_tail_mass(a, b));
    }
    return value;
}

} // namespace copreg
