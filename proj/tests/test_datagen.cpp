#include <doctest.h>

#include <cmath>

#include "copreg/datagen.hpp"

using namespace copreg;

namespace {

SimDesign bern_design(double rho, int n, int d) {
    SimDesign de;
    de.n = n;
    de.d = d;
    de.spec = {MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
    de.truth.beta = Eigen::Vector2d(0.0, 0.0);  // mu = 1/2 everywhere
    de.truth.rho = rho;
    return de;
}

} // namespace

TEST_CASE("marginal law under independence") {
    SimDesign de = bern_design(0.0, 100000, 1);
    de.seed = 5;
    const Dataset data = simulate(de);
    double mean = 0.0;
    for (const auto& cl : data) mean += cl.y[0];
    mean /= de.n;
    CHECK(std::fabs(mean - 0.5) < 0.005);
}

TEST_CASE("poisson margin keeps its pmf under dependence") {
    SimDesign de;
    de.n = 50000;
    de.d = 3;
    de.spec = {MarginalFamily::poisson, CorrelationKind::exchangeable};
    de.truth.beta = Eigen::Vector2d(0.0, 0.0);  // mu = 1
    de.truth.rho = 0.6;
    de.seed = 6;
    const Dataset data = simulate(de);
    long zeros = 0, total = 0;
    for (const auto& cl : data) {
        for (int j = 0; j < cl.dim(); ++j) {
            zeros += cl.y[j] == 0;
            ++total;
        }
    }
    CHECK(std::fabs(static_cast<double>(zeros) / total - std::exp(-1.0)) < 0.01);
}

TEST_CASE("pairwise joint probability matches the orthant value") {
    SimDesign de = bern_design(0.5, 60000, 2);
    de.seed = 7;
    const Dataset data = simulate(de);
    long both = 0;
    for (const auto& cl : data) both += (cl.y[0] == 1 && cl.y[1] == 1);
    CHECK(std::fabs(static_cast<double>(both) / de.n - 1.0 / 3.0) < 0.01);
}

TEST_CASE("chi-square goodness of fit of the margins") {
    // binary margin, mu = 1/2, df = 1: critical value 10.828 at alpha = 0.001
    SimDesign de = bern_design(0.3, 100000, 2);
    de.seed = 8;
    const Dataset data = simulate(de);
    long ones = 0;
    for (const auto& cl : data) ones += cl.y[0];
    const double e = de.n * 0.5;
    const double chi2 = (ones - e) * (ones - e) / e + (ones - e) * (ones - e) / e;
    CHECK(chi2 < 10.828);

    // poisson margin mu = 1, bins 0..7 plus tail, df = 8: critical 26.125
    SimDesign dp;
    dp.n = 100000;
    dp.d = 1;
    dp.spec = {MarginalFamily::poisson, CorrelationKind::exchangeable};
    dp.truth.beta = Eigen::Vector2d(0.0, 0.0);
    dp.truth.rho = 0.0;
    dp.seed = 9;
    const Dataset pd = simulate(dp);
    std::vector<long> counts(9, 0);
    for (const auto& cl : pd) ++counts[std::min(cl.y[0], 8)];
    double chi2p = 0.0, tail = 1.0;
    for (int k = 0; k < 8; ++k) {
        const double pk = pmf_at_mean(MarginalFamily::poisson, 1.0, 0.0, k);
        tail -= pk;
        const double ek = dp.n * pk;
        chi2p += (counts[k] - ek) * (counts[k] - ek) / ek;
    }
    chi2p += (counts[8] - dp.n * tail) * (counts[8] - dp.n * tail) / (dp.n * tail);
    CHECK(chi2p < 26.125);
}

TEST_CASE("normal-scores dependence increases with rho") {
    double prev = -1.0;
    for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        SimDesign de = bern_design(rho, 10000, 2);
        de.seed = 10;
        const Dataset data = simulate(de);
        double stat = 0.0;
        for (const auto& cl : data) {
            stat += (cl.y[0] == cl.y[1]) ? 1.0 : -1.0;  // concordance of equal pairs
        }
        stat /= de.n;
        CHECK(stat > prev);
        prev = stat;
    }
}

TEST_CASE("determinism and schedule independence by substream") {
    SimDesign de = bern_design(0.4, 50, 3);
    de.seed = 77;
    const Dataset a = simulate(de);
    const Dataset b = simulate(de);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].X == b[i].X);
    }
    de.seed = 78;
    const Dataset c = simulate(de);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs |= (a[i].y != c[i].y);
    CHECK(differs);
}

TEST_CASE("markov designs carry their times") {
    SimDesign de;
    de.n = 30;
    de.d = 4;
    de.spec = {MarginalFamily::bernoulli_probit, CorrelationKind::markov};
    de.truth.beta = Eigen::Vector2d(-0.2, 0.1);
    de.truth.rho = 0.9;
    Eigen::VectorXd times(4);
    times << 0.0, 1.0, 3.0, 6.0;
    de.times = times;
    de.seed = 11;
    const Dataset data = simulate(de);
    REQUIRE(data.front().times.has_value());
    CHECK(*data.front().times == times);

    de.times.reset();
    CHECK_THROWS_AS(simulate(de), validation_error);
}

TEST_CASE("binary cluster-constant covariates") {
    SimDesign de = bern_design(0.2, 500, 3);
    de.covariates = CovariateScheme::binary_cluster_constant;
    de.seed = 12;
    const Dataset data = simulate(de);
    long ones = 0;
    for (const auto& cl : data) {
        CHECK((cl.X.col(1).array() == cl.X(0, 1)).all());
        CHECK((cl.X(0, 1) == 0.0 || cl.X(0, 1) == 1.0));
        ones += cl.X(0, 1) == 1.0;
    }
    CHECK(std::fabs(ones / 500.0 - 0.5) < 0.07);
}
