#include <doctest.h>

#include <cmath>

#include "copreg/asymptotics.hpp"
#include "copreg/rng.hpp"
#include "test_oracles.hpp"

using namespace copreg;

namespace {

const ModelSpec logit_spec{MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
const ModelSpec nb2_spec{MarginalFamily::nb2, CorrelationKind::exchangeable};

Theta logit_truth(double rho) {
    Theta t;
    t.beta = Eigen::Vector2d(-0.5, 0.5);
    t.rho = rho;
    return t;
}

Theta nb2_truth(double rho, double gamma = 0.5) {
    Theta t = logit_truth(rho);
    t.gamma = gamma;
    return t;
}

} // namespace

TEST_CASE("enumerate_cases: counts, weights, and factorization") {
    const auto bin = enumerate_cases(logit_spec, logit_truth(0.3), 2, {}, 1);
    CHECK(bin.cases.size() == 8);  // 2^2 responses x 2 covariate values
    double total = 0.0;
    for (const auto& c : bin.cases) total += c.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

    // rho = 0: weights factor into marginal pmfs
    const auto indep = enumerate_cases(logit_spec, logit_truth(0.0), 2, {}, 1);
    for (const auto& c : indep.cases) {
        Eigen::VectorXd x(2);
        x << 1.0, c.x;
        const double mu =
            mean_from_covariates(MarginalFamily::bernoulli_logit,
                                 logit_truth(0.0).marginal(), x);
        double expect = 0.5;
        for (int j = 0; j < 2; ++j) expect *= c.y[j] == 1 ? mu : 1.0 - mu;
        CHECK(c.weight == doctest::Approx(expect).epsilon(1e-9));
    }

    // Poisson with truncation 10: 11^2 x 2 cases; weight equals joint_pmf
    const ModelSpec pois{MarginalFamily::poisson, CorrelationKind::exchangeable};
    const auto cnt = enumerate_cases(pois, logit_truth(0.4), 2, {}, 10);
    CHECK(cnt.cases.size() == 242);
    const SlConfig exact{RectEngine::exchangeable_1d, {}};
    Cluster cl;
    cl.y = Eigen::VectorXi::Zero(2);
    cl.X.resize(2, 2);
    cl.X.col(0).setOnes();
    cl.X.col(1).setZero();
    const double h00 = joint_pmf(cl, pois, logit_truth(0.4), exact);
    for (const auto& c : cnt.cases) {
        if (c.y[0] == 0 && c.y[1] == 0 && c.x == 0.0) {
            CHECK(c.weight == doctest::Approx(0.5 * h00).epsilon(1e-8));
        }
    }

    CHECK_THROWS(enumerate_cases(pois, logit_truth(0.4), 9, {}, 10));  // 11^9 > 1e7
}

TEST_CASE("limit_hr_objective: independence reduction") {
    const auto cases = enumerate_cases(logit_spec, logit_truth(0.25), 3, {}, 1);
    Theta at = logit_truth(0.0);
    at.beta = Eigen::Vector2d(-0.3, 0.2);
    double expect = 0.0;
    for (const auto& c : cases.cases) {
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd x(2);
            x << 1.0, c.x;
            expect += c.weight * std::log(pmf(MarginalFamily::bernoulli_logit,
                                              at.marginal(), c.y[j], x));
        }
    }
    CHECK(limit_hr_objective(cases, at) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("limit_hr_objective matches a finite-jitter Monte Carlo average") {
    const auto cases = enumerate_cases(logit_spec, logit_truth(0.4), 2, {}, 1);
    const Theta at = logit_truth(0.35);
    const double limit = limit_hr_objective(cases, at);

    // simulate E_v of the per-cluster surrogate contribution, case-weighted
    Rng rng(31);
    const double rho = at.rho;
    const double c1 = -0.5 * std::log1p(rho) - 0.5 * std::log1p(-rho);
    double mc = 0.0;
    const int draws = 200000;
    for (int it = 0; it < draws; ++it) {
        double contrib = 0.0;
        for (const auto& c : cases.cases) {
            Eigen::VectorXd x(2);
            x << 1.0, c.x;
            const double mu = mean_from_covariates(MarginalFamily::bernoulli_logit,
                                                   at.marginal(), x);
            double q[2], logf = 0.0;
            for (int j = 0; j < 2; ++j) {
                const CdfPair cp =
                    cdf_pair(MarginalFamily::bernoulli_logit, mu, 0.0, c.y[j]);
                q[j] = norm_quantile(cp.below + rng.uniform() * cp.mass);
                logf += std::log(cp.mass);
            }
            const double quad = rho * (q[0] * q[0] + q[1] * q[1]) - 2.0 * q[0] * q[1];
            contrib += c.weight *
                       (c1 - rho / (2.0 * (1.0 - rho) * (1.0 + rho)) * quad + logf);
        }
        mc += contrib;
    }
    mc /= draws;
    CHECK(std::fabs(mc - limit) < 1e-3);
}

TEST_CASE("appendix moments equal the jitter integral") {
    // zeta = integral over v of Phi^{-1}[F(y-1) + v f(y)]
    for (auto [fam, mu, gamma, y] :
         {std::tuple{MarginalFamily::poisson, 1.3, 0.0, 2},
          std::tuple{MarginalFamily::nb2, 0.9, 0.5, 0},
          std::tuple{MarginalFamily::bernoulli_logit, 0.42, 0.0, 1}}) {
        const CdfPair cp = cdf_pair(fam, mu, gamma, y);
        const auto integrand = [&](double v) {
            return norm_quantile(std::min(1.0 - 1e-14,
                                          std::max(1e-14, cp.below + v * cp.mass)));
        };
        const double zeta_int = testutil::integrate(integrand, 1e-9, 1.0 - 1e-9, 1e-10);
        const double lo = cp.below <= 0.0 ? neg_inf : norm_quantile(cp.below);
        const double hi = cp.at >= 1.0 ? pos_inf : norm_quantile(cp.at);
        CHECK(std::fabs(trunc_norm_mean({lo, hi}) - zeta_int) < 1e-6);
        const double xi_int = testutil::integrate(
            [&](double v) { const double z = integrand(v); return z * z; }, 1e-9,
            1.0 - 1e-9, 1e-10);
        CHECK(std::fabs(trunc_norm_second_moment({lo, hi}) - xi_int) < 1e-5);
    }
}

TEST_CASE("limiting HRMLE reproduces printed d=2 logistic rows") {
    for (auto [rho, rho_hr, beta_hr] : {std::tuple{0.3, 0.120, 0.499},
                                        std::tuple{0.6, 0.255, 0.497}}) {
        const auto cases = enumerate_cases(logit_spec, logit_truth(rho), 2, {}, 1);
        const LimitResult hr = limiting_hrmle(cases);
        CHECK(hr.converged);
        CHECK(std::fabs(hr.estimate("rho") - rho_hr) < 0.01);
        CHECK(std::fabs(hr.estimate("beta0") + beta_hr) < 0.005);
        CHECK(std::fabs(hr.estimate("beta1") - beta_hr) < 0.005);
        // strict downward bias
        CHECK(hr.estimate("rho") < rho - 0.05);
    }
}

TEST_CASE("limiting HRMLE reproduces a printed NB2 row") {
    const auto cases = enumerate_cases(nb2_spec, nb2_truth(0.8), 2, {}, 10);
    const LimitResult hr = limiting_hrmle(cases);
    CHECK(std::fabs(hr.estimate("rho") - 0.550) < 0.01);
    CHECK(std::fabs(hr.estimate("gamma") - 0.302) < 0.01);
    CHECK(std::fabs(hr.estimate("beta0") + 0.481) < 0.005);
}

TEST_CASE("limiting MLE and MSLE recover the truth") {
    const auto cases = enumerate_cases(logit_spec, logit_truth(0.3), 2, {}, 1);
    const LimitResult ml = limiting_mle(cases);
    CHECK(std::fabs(ml.estimate("beta0") + 0.5) < 1e-4);
    CHECK(std::fabs(ml.estimate("beta1") - 0.5) < 1e-4);
    CHECK(std::fabs(ml.estimate("rho") - 0.3) < 1e-4);

    RqmcConfig rqmc;
    rqmc.lattice_size = 509;
    rqmc.seed = 4242;
    const LimitResult msle = limiting_msle(cases, rqmc);
    CHECK(std::fabs(msle.estimate("beta0") + 0.5) < 1e-3);
    CHECK(std::fabs(msle.estimate("beta1") - 0.5) < 1e-3);
    CHECK(std::fabs(msle.estimate("rho") - 0.3) < 1e-3);

    // rho = 0: exact recovery (objective separates)
    const auto indep = enumerate_cases(logit_spec, logit_truth(0.0), 2, {}, 1);
    const LimitResult ml0 = limiting_mle(indep);
    CHECK(std::fabs(ml0.estimate("beta0") + 0.5) < 1e-4);
    CHECK(std::fabs(ml0.estimate("rho")) < 2e-4);
}

TEST_CASE("limiting standard errors reproduce printed table entries") {
    const auto cases = enumerate_cases(logit_spec, logit_truth(0.3), 2, {}, 1);
    // printed-table convention: full information per covariate value
    const int n_ref = 200;
    const Objective ml_obj = natural_limit_objective(cases, false);
    const Eigen::VectorXd se_ml =
        limiting_se(ml_obj, pack_natural(logit_truth(0.3), logit_spec), n_ref);
    CHECK(std::fabs(se_ml[0] - 0.16) < 0.015);
    CHECK(std::fabs(se_ml[1] - 0.22) < 0.015);
    CHECK(std::fabs(se_ml[2] - 0.11) < 0.015);

    const LimitResult hr = limiting_hrmle(cases);
    const Objective hr_obj = natural_limit_objective(cases, true);
    const Eigen::VectorXd se_hr =
        limiting_se(hr_obj, pack_natural(hr.theta, logit_spec), n_ref);
    CHECK(std::fabs(se_hr[0] - 0.15) < 0.015);
    CHECK(std::fabs(se_hr[1] - 0.21) < 0.015);
    CHECK(std::fabs(se_hr[2] - 0.07) < 0.015);
}

TEST_CASE("limiting_se rejects indefinite curvature") {
    const Objective convex = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
    CHECK_THROWS(limiting_se(convex, Eigen::Vector2d(0.0, 0.0), 100));
}
