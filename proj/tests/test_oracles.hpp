#pragma once

// Test-only oracles, kept independent of the library's numeric paths.

#include <cmath>
#include <functional>

namespace testutil {

// Adaptive Simpson integration (the library integrates with Gauss-Kronrod,
// so disagreement flags a real defect, not a shared one).
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth > 60 || std::fabs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth + 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth + 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson(f, a, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

// High-precision standard normal cdf via the Taylor series
// Phi(z) = 1/2 + phi(z) * sum_k z^(2k+1) / (1*3*...*(2k+1)), long double.
inline long double phi_series_cdf(long double z) {
    const long double pdf =
        std::exp(-0.5L * z * z) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
    long double term = z, sum = z;
    for (int k = 1; k < 400; ++k) {
        term *= z * z / (2.0L * k + 1.0L);
        sum += term;
        if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
    }
    return 0.5L + pdf * sum;
}

inline double norm_pdf_oracle(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.141592653589793);
}

} // namespace testutil
