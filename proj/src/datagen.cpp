#include "copreg/datagen.hpp"

#include <cmath>

#include "copreg/rng.hpp"

namespace copreg {

namespace {

// Inverse discrete cdf by forward accumulation of the pmf.
int inverse_cdf(MarginalFamily fam, double mu, double gamma, double u) {
    if (!is_count_family(fam)) return u <= 1.0 - mu ? 0 : 1;
    int y = 0;
    CdfPair cp = cdf_pair(fam, mu, gamma, 0);
    double cum = cp.at;
    double f = cp.mass;
    while (u > cum) {
        switch (fam) {
            case MarginalFamily::poisson:
                f *= mu / (y + 1.0);
                break;
            case MarginalFamily::nb2:
                f *= (y + 1.0 / gamma) * (gamma * mu / (1.0 + gamma * mu)) / (y + 1.0);
                break;
            default:  // nb1
                f *= (y + mu / gamma) * (gamma / (1.0 + gamma)) / (y + 1.0);
                break;
        }
        cum += f;
        ++y;
        if (y > 1'000'000) break;  // u in the extreme tail; stop accumulating
    }
    return y;
}

} // namespace

Dataset simulate(const SimDesign& design) {
    const int d = design.d;
    Eigen::MatrixXd R;
    if (design.spec.structure == CorrelationKind::markov) {
        if (!design.times || design.times->size() != d) {
            throw validation_error("simulate: markov design needs d observation times");
        }
        R = build_matrix(CorrelationStructure::markov(design.truth.rho, *design.times));
    } else if (design.spec.structure == CorrelationKind::ar1) {
        R = build_matrix(CorrelationStructure::ar1(d, design.truth.rho));
    } else {
        R = build_matrix(CorrelationStructure::exchangeable(d, design.truth.rho));
    }
    const CholeskyFactor L = cholesky(R);
    const double gamma = design.truth.gamma.value_or(0.0);
    const int p = static_cast<int>(design.truth.beta.size());

    Dataset data;
    data.reserve(design.n);
    for (int i = 0; i < design.n; ++i) {
        Rng rng = Rng::substream(design.seed, static_cast<std::uint64_t>(i));
        Cluster cl;
        cl.y.resize(d);
        cl.X.resize(d, p);
        cl.X.col(0).setOnes();
        if (design.covariates == CovariateScheme::binary_cluster_constant) {
            const double x = rng.uniform() < 0.5 ? 0.0 : 1.0;
            for (int j = 0; j < d; ++j)
                for (int c = 1; c < p; ++c) cl.X(j, c) = x;
        } else {
            for (int j = 0; j < d; ++j)
                for (int c = 1; c < p; ++c) cl.X(j, c) = 2.0 * rng.uniform() - 1.0;
        }
        Eigen::VectorXd g(d);
        for (int j = 0; j < d; ++j) g[j] = rng.normal();
        const Eigen::VectorXd z = L.lower.triangularView<Eigen::Lower>() * g;
        for (int j = 0; j < d; ++j) {
            const double mu = mean_from_covariates(design.spec.family,
                                                   design.truth.marginal(),
                                                   cl.X.row(j).transpose());
            cl.y[j] = inverse_cdf(design.spec.family, mu, gamma, norm_cdf(z[j]));
        }
        if (design.spec.structure == CorrelationKind::markov) cl.times = *design.times;
        data.push_back(std::move(cl));
    }
    return data;
}

} // namespace copreg
