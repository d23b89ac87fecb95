#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "copreg/likelihood.hpp"

namespace copreg {

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Bijection between the optimizer's unconstrained vector and the natural
/// parameters: beta identity, gamma via log, rho via a scaled logistic onto
/// its admissible interval.
class ParamTransform {
  public:
    ParamTransform(int n_beta, bool with_gamma, bool with_rho, double rho_lo,
                   double rho_hi);

    int size() const { return size_; }
    bool with_gamma() const { return with_gamma_; }
    bool with_rho() const { return with_rho_; }

    Eigen::VectorXd to_raw(const Theta& theta) const;
    Theta to_natural(const Eigen::VectorXd& raw) const;
    /// d(natural)/d(raw), elementwise (the map is coordinatewise).
    Eigen::VectorXd jacobian_diag(const Eigen::VectorXd& raw) const;
    std::vector<std::string> names() const;

  private:
    int n_beta_, size_;
    bool with_gamma_, with_rho_;
    double rho_lo_, rho_hi_;
};

struct MaximizeOptions {
    double grad_tol = 1e-5;      // infinity norm on the transformed scale
    int max_iterations = 500;
    double fd_step = 1e-6;       // relative central-difference step
};

struct MaximizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    long evaluations = 0;
};

/// BFGS ascent with central finite-difference gradients and backtracking
/// line search.  The objective must be deterministic.
MaximizeResult maximize(const Objective& objective, const Eigen::VectorXd& x0,
                        const MaximizeOptions& opts = {});

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step = 1e-6);
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           double rel_step = 1e-4);

/// Delta-method standard errors on the natural scale from the numeric
/// Hessian of the transformed-scale objective.  Empty when the Hessian
/// is not negative definite.
std::optional<Eigen::VectorXd> standard_errors(const Objective& objective,
                                               const Eigen::VectorXd& raw_opt,
                                               const ParamTransform& transform);

/// Natural-scale covariance diagonal (the quantity HR averages over runs).
std::optional<Eigen::VectorXd> natural_variance_diag(const Objective& objective,
                                                     const Eigen::VectorXd& raw_opt,
                                                     const ParamTransform& transform);

struct FitResult {
    std::vector<std::string> names;
    Theta theta;
    Eigen::VectorXd estimates;                 // natural scale, order = names
    std::optional<Eigen::VectorXd> std_errors;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string engine;
    std::uint64_t seed = 0;
    int floored_clusters = 0;
    int runs_used = 0;                         // HR only

    double estimate(const std::string& name) const;
    double std_error(const std::string& name) const;
};

/// Independence working fit (Fisher scoring) used for starting values.
Eigen::VectorXd glm_start(const Dataset& data, MarginalFamily fam);

/// Moment starts for the dispersion and the latent correlation.
double dispersion_start(const Dataset& data, MarginalFamily fam,
                        const Eigen::VectorXd& beta);
double rho_start(const Dataset& data, MarginalFamily fam, const Theta& theta,
                 std::pair<double, double> range);

/// Simulated-likelihood fit (exact likelihood when the engine is the 1-D
/// exchangeable reduction).  Clusters of size 1 only: rho is fixed at 0.
FitResult fit_sl(const Dataset& data, const ModelSpec& spec, const SlConfig& cfg,
                 const MaximizeOptions& opts = {},
                 const std::optional<Theta>& start = std::nullopt);

/// HR protocol: one maximization of the surrogate likelihood per jitter
/// replication; estimates and theoretical variances averaged over runs.
FitResult fit_hr(const Dataset& data, const ModelSpec& spec, const JitterSet& jitters,
                 const MaximizeOptions& opts = {},
                 const std::optional<Theta>& start = std::nullopt);

/// Single maximization of the jitter-averaged simulated likelihood.
FitResult fit_mf(const Dataset& data, const ModelSpec& spec, const JitterSet& jitters,
                 const MaximizeOptions& opts = {},
                 const std::optional<Theta>& start = std::nullopt);

} // namespace copreg
