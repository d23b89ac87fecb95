#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "copreg/correlation.hpp"
#include "copreg/special_functions.hpp"

namespace copreg {

struct unsupported_structure_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Per-coordinate integration bounds on the latent normal scale.
struct Rectangle {
    std::vector<Interval> bounds;
    int dim() const { return static_cast<int>(bounds.size()); }

    /// [-a, a]^d.
    static Rectangle centered(int d, double a) {
        Rectangle r;
        r.bounds.assign(d, Interval{-a, a});
        return r;
    }
};

/// Randomized quasi Monte Carlo parameters.  The lattice is a Richtmyer
/// sequence (fractional parts of multiples of sqrt(prime)); each of the m
/// randomizations applies an independent uniform shift with antithetic
/// pairing.
struct RqmcConfig {
    int lattice_size = 127;    // P
    int randomizations = 10;   // m
    std::uint64_t seed = 0;
    bool antithetic = true;
};

enum class RectEngine { exchangeable_1d, genz_bretz, naive_mc, mf_importance };
std::string rect_engine_name(RectEngine e);

struct ProbEstimate {
    double value = 0.0;
    double std_error = 0.0;
    RectEngine engine = RectEngine::genz_bretz;
    long evaluations = 0;
};

/// Deterministic 1-D reduction for positive exchangeable correlation:
/// integral of phi(z) * prod_j [Phi((b_j - sqrt(rho) z)/sqrt(1-rho)) -
/// Phi((a_j - sqrt(rho) z)/sqrt(1-rho))] by adaptive quadrature.  The
/// default absolute tolerance is 1e-8; differentiating consumers may pass a
/// tighter one so the adaptive panel choices stop leaving visible kinks.
ProbEstimate exchangeable_1d(const Rectangle& rect, double rho, double tol = 1e-8);

/// Transformed RQMC estimate for a general correlation via its Cholesky
/// factor.  Coordinates are internally reordered narrowest-interval-first
/// (the correlation is permuted to match).
ProbEstimate genz_bretz(const Rectangle& rect, const CholeskyFactor& chol,
                        const RqmcConfig& cfg);

/// Indicator average over m draws z = L * iid N(0,1).
ProbEstimate naive_mc(const Rectangle& rect, const CholeskyFactor& chol, int m,
                      std::uint64_t seed);

/// Jittered importance-sampling estimate with uniform proposal on the
/// rectangle image (Phi(a_j), Phi(b_j)).  The weight is unbounded; the value
/// is deliberately not clamped to [0,1] and the reported SD is
/// sqrt(sample var / m).
ProbEstimate mf_importance(const Rectangle& rect, const Eigen::MatrixXd& R, int m,
                           std::uint64_t seed);

} // namespace copreg
