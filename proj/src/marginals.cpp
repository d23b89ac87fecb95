#include "copreg/marginals.hpp"

#include <cmath>

#include "copreg/special_functions.hpp"

namespace copreg {

bool is_count_family(MarginalFamily fam) {
    return fam == MarginalFamily::poisson || fam == MarginalFamily::nb1 ||
           fam == MarginalFamily::nb2;
}

bool has_dispersion(MarginalFamily fam) {
    return fam == MarginalFamily::nb1 || fam == MarginalFamily::nb2;
}

MarginalFamily marginal_family_from_name(const std::string& name) {
    if (name == "bernoulli-logit") return MarginalFamily::bernoulli_logit;
    if (name == "bernoulli-probit") return MarginalFamily::bernoulli_probit;
    if (name == "poisson") return MarginalFamily::poisson;
    if (name == "nb1") return MarginalFamily::nb1;
    if (name == "nb2") return MarginalFamily::nb2;
    throw std::invalid_argument("unknown marginal family: " + name);
}

std::string marginal_family_name(MarginalFamily fam) {
    switch (fam) {
        case MarginalFamily::bernoulli_logit: return "bernoulli-logit";
        case MarginalFamily::bernoulli_probit: return "bernoulli-probit";
        case MarginalFamily::poisson: return "poisson";
        case MarginalFamily::nb1: return "nb1";
        case MarginalFamily::nb2: return "nb2";
    }
    return "?";
}

double mean_from_covariates(MarginalFamily fam, const MarginalParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != params.beta.size()) {
        throw std::invalid_argument("covariate/coefficient dimension mismatch");
    }
    const double eta = params.beta.dot(x);
    switch (fam) {
        case MarginalFamily::bernoulli_logit:
            return 1.0 / (1.0 + std::exp(-eta));
        case MarginalFamily::bernoulli_probit:
            return norm_cdf(eta);
        default:
            return std::exp(eta);
    }
}

namespace {

void check_support(MarginalFamily fam, int y) {
    if (y < 0 || (!is_count_family(fam) && y > 1)) {
        throw std::domain_error("response outside marginal support");
    }
}

// log f(0) and the pmf recursion ratio f(y+1)/f(y) = (y + r) q / (y + 1)
// shared by the count families (Poisson as the r -> inf limit).
struct CountRecursion {
    double log_f0;
    double r;       // size parameter; infinite for Poisson
    double q;       // recursion base
};

CountRecursion count_recursion(MarginalFamily fam, double mu, double gamma) {
    switch (fam) {
        case MarginalFamily::poisson:
            return {-mu, pos_inf, 0.0};
        case MarginalFamily::nb2: {
            // Var = mu + gamma mu^2; size 1/gamma, success prob 1/(1+gamma mu)
            const double r = 1.0 / gamma;
            return {-r * std::log1p(gamma * mu), r, gamma * mu / (1.0 + gamma * mu)};
        }
        case MarginalFamily::nb1: {
            // Var = mu (1+gamma); size mu/gamma, success prob 1/(1+gamma)
            const double r = mu / gamma;
            return {-r * std::log1p(gamma), r, gamma / (1.0 + gamma)};
        }
        default:
            throw std::logic_error("count_recursion: not a count family");
    }
}

double count_log_pmf(MarginalFamily fam, double mu, double gamma, int y) {
    if (fam == MarginalFamily::poisson) {
        return -mu + y * std::log(mu) - std::lgamma(y + 1.0);
    }
    const CountRecursion rec = count_recursion(fam, mu, gamma);
    return std::lgamma(y + rec.r) - std::lgamma(rec.r) - std::lgamma(y + 1.0) +
           rec.log_f0 + y * std::log(rec.q);
}

} // namespace

double log_pmf_at_mean(MarginalFamily fam, double mu, double gamma, int y) {
    check_support(fam, y);
    switch (fam) {
        case MarginalFamily::bernoulli_logit:
        case MarginalFamily::bernoulli_probit:
            return y == 1 ? std::log(mu) : std::log1p(-mu);
        default:
            if (y == 0) return count_recursion(fam, mu, gamma).log_f0;
            return count_log_pmf(fam, mu, gamma, y);
    }
}

double pmf_at_mean(MarginalFamily fam, double mu, double gamma, int y) {
    check_support(fam, y);
    if (!is_count_family(fam)) return y == 1 ? mu : 1.0 - mu;
    return std::exp(log_pmf_at_mean(fam, mu, gamma, y));
}

CdfPair cdf_pair(MarginalFamily fam, double mu, double gamma, int y) {
    if (y < 0) return {0.0, 0.0, 0.0};
    if (!is_count_family(fam)) {
        check_support(fam, y);
        if (y == 0) return {0.0, 1.0 - mu, 1.0 - mu};
        return {1.0 - mu, 1.0, mu};
    }
    const CountRecursion rec = count_recursion(fam, mu, gamma);
    double f = std::exp(rec.log_f0);
    double below = 0.0;
    for (int k = 0; k < y; ++k) {
        below += f;
        f *= (fam == MarginalFamily::poisson) ? mu / (k + 1.0)
                                              : (k + rec.r) * rec.q / (k + 1.0);
    }
    if (f == 0.0 && y > 0) {
        // underflow along the recursion (deep tail); recover f from logs
        f = std::exp(count_log_pmf(fam, mu, gamma, y));
    }
    double at = below + f;
    if (at > 1.0) at = 1.0;
    return {below, at, f};
}

double cdf_at_mean(MarginalFamily fam, double mu, double gamma, int y) {
    return cdf_pair(fam, mu, gamma, y).at;
}

double pmf(MarginalFamily fam, const MarginalParams& params, int y,
           const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double mu = mean_from_covariates(fam, params, x);
    return pmf_at_mean(fam, mu, params.gamma.value_or(0.0), y);
}

double cdf(MarginalFamily fam, const MarginalParams& params, int y,
           const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double mu = mean_from_covariates(fam, params, x);
    return cdf_at_mean(fam, mu, params.gamma.value_or(0.0), y);
}

int truncation_point(MarginalFamily fam, const MarginalParams& params,
                     const std::vector<Eigen::VectorXd>& x_set, double mass) {
    if (!is_count_family(fam)) {
        throw std::domain_error("truncation_point: support already finite");
    }
    if (!(mass > 0.0 && mass < 1.0)) {
        throw std::domain_error("truncation_point: mass must lie in (0,1)");
    }
    const double gamma = params.gamma.value_or(0.0);
    int point = 0;
    for (const auto& x : x_set) {
        const double mu = mean_from_covariates(fam, params, x);
        const CountRecursion rec = count_recursion(fam, mu, gamma);
        double f = std::exp(rec.log_f0);
        double cum = f;
        int y = 0;
        while (cum < mass) {
            f *= (fam == MarginalFamily::poisson) ? mu / (y + 1.0)
                                                  : (y + rec.r) * rec.q / (y + 1.0);
            cum += f;
            ++y;
            if (y > 10'000'000) {
                throw std::runtime_error("truncation_point: did not reach target mass");
            }
        }
        point = std::max(point, y);
    }
    return point;
}

} // namespace copreg
