#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace copreg {

/// Univariate discrete regression families.  Links are fixed per family:
/// logit/probit for binary, log for the count families.
enum class MarginalFamily {
    bernoulli_logit,
    bernoulli_probit,
    poisson,
    nb1,
    nb2,
};

bool is_count_family(MarginalFamily fam);
bool has_dispersion(MarginalFamily fam);

/// CLI spellings: bernoulli-logit, bernoulli-probit, poisson, nb1, nb2.
MarginalFamily marginal_family_from_name(const std::string& name);
std::string marginal_family_name(MarginalFamily fam);

struct MarginalParams {
    Eigen::VectorXd beta;          // regression coefficients, intercept first
    std::optional<double> gamma;   // overdispersion, NB1/NB2 only

    double dispersion() const {
        if (!gamma) throw std::logic_error("marginal family carries no dispersion");
        return *gamma;
    }
};

/// Inverse-link mean mu for covariate vector x.
double mean_from_covariates(MarginalFamily fam, const MarginalParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// pmf / log-pmf / cdf at a given mean.  gamma ignored unless NB.
double pmf_at_mean(MarginalFamily fam, double mu, double gamma, int y);
double log_pmf_at_mean(MarginalFamily fam, double mu, double gamma, int y);
double cdf_at_mean(MarginalFamily fam, double mu, double gamma, int y);

double pmf(MarginalFamily fam, const MarginalParams& params, int y,
           const Eigen::Ref<const Eigen::VectorXd>& x);
double cdf(MarginalFamily fam, const MarginalParams& params, int y,
           const Eigen::Ref<const Eigen::VectorXd>& x);

/// One forward accumulation pass giving F(y-1), F(y) and f(y) that satisfy
/// F(y) - F(y-1) = f(y) exactly.
struct CdfPair {
    double below;  // F(y-1)
    double at;     // F(y)
    double mass;   // f(y)
};
CdfPair cdf_pair(MarginalFamily fam, double mu, double gamma, int y);

/// Smallest y* with min over the covariate set of F(y*) >= mass.
/// Count families only.
int truncation_point(MarginalFamily fam, const MarginalParams& params,
                     const std::vector<Eigen::VectorXd>& x_set, double mass);

} // namespace copreg
