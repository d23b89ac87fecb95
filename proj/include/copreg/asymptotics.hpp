#pragma once

#include <vector>

#include "copreg/estimate.hpp"
#include "copreg/likelihood.hpp"

namespace copreg {

/// One enumerated (response vector, scalar covariate) configuration with its
/// model-based limiting frequency.
struct EnumCase {
    Eigen::VectorXi y;
    double x = 0.0;
    double weight = 0.0;
};

/// Complete case enumeration for the large-n limit calculations
/// (exchangeable dependence, one cluster-constant covariate).
struct CaseEnumeration {
    std::vector<EnumCase> cases;
    ModelSpec spec;
    Theta truth;
    int d = 0;
    int truncation = 0;  // response support bound; 1 for binary

    /// Distinct (sorted response, covariate) groups with aggregated weights;
    /// the exchangeable pmf is permutation symmetric, so objectives sum over
    /// these instead of the raw cases.
    struct Group {
        Eigen::VectorXi y;
        double x = 0.0;
        double weight = 0.0;
    };
    std::vector<Group> groups;
};

/// Values and probabilities of the cluster-constant covariate; default is
/// the binary design x in {0,1} with probability 1/2 each.
struct CovariateDesign {
    std::vector<double> values{0.0, 1.0};
    std::vector<double> probs{0.5, 0.5};
};

/// Enumerate all (y, x) cases with weights p = P(x) * h_Y(y; x) computed by
/// the exact 1-D exchangeable engine at the true parameters.  For count
/// margins the support is truncated at `truncation`.  Refuses enumerations
/// beyond 1e7 cases.
CaseEnumeration enumerate_cases(const ModelSpec& spec, const Theta& truth, int d,
                                const CovariateDesign& design, int truncation);

/// Limit in probability of n^{-1} times the surrogate log-likelihood:
/// the exchangeable copula log-density with the jitter averages replaced by
/// truncated-normal moments, plus the marginal log pmfs.
double limit_hr_objective(const CaseEnumeration& cases, const Theta& theta);

/// Limit of n^{-1} times the (simulated) log-likelihood: expected log
/// cluster pmf over the cases.  Engine selects the rectangle evaluator
/// (exchangeable_1d gives the standard MLE limit, genz_bretz the MSLE one).
double limit_loglik_objective(const CaseEnumeration& cases, const Theta& theta,
                              const SlConfig& cfg);

struct LimitResult {
    Theta theta;
    Eigen::VectorXd estimates;
    std::vector<std::string> names;
    double objective = 0.0;
    bool converged = false;

    double estimate(const std::string& name) const;
};

LimitResult limiting_hrmle(const CaseEnumeration& cases,
                           const MaximizeOptions& opts = {});
LimitResult limiting_msle(const CaseEnumeration& cases, const RqmcConfig& rqmc,
                          const MaximizeOptions& opts = {});
/// Limit of the standard MLE (exact rectangle engine).
LimitResult limiting_mle(const CaseEnumeration& cases,
                         const MaximizeOptions& opts = {});

/// Natural-scale objective over (beta..., [gamma], rho) for Hessian work.
Objective natural_limit_objective(const CaseEnumeration& cases, bool hr,
                                  const SlConfig& cfg = {RectEngine::exchangeable_1d, {}});

/// SE_k = sqrt(diag(-Hessian^{-1})_k / n_ref) of a limit objective at its
/// maximizer, on the natural scale.  Throws when the Hessian is not
/// negative definite.
Eigen::VectorXd limiting_se(const Objective& natural_objective,
                            const Eigen::VectorXd& theta_limit, int n_ref);

/// Pack/unpack natural-scale vectors (beta..., [gamma], rho) for a spec.
Eigen::VectorXd pack_natural(const Theta& theta, const ModelSpec& spec);
Theta unpack_natural(const Eigen::VectorXd& v, const ModelSpec& spec, int n_beta);

} // namespace copreg
