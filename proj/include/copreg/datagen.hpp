#pragma once

#include <cstdint>
#include <optional>

#include "copreg/likelihood.hpp"

namespace copreg {

enum class CovariateScheme {
    uniform_continuous,       // x_j ~ U[-1,1], redrawn per cluster and coordinate
    binary_cluster_constant,  // x in {0,1} w.p. 1/2, shared within the cluster
};

struct SimDesign {
    int n = 100;
    int d = 2;
    ModelSpec spec{MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
    Theta truth;
    CovariateScheme covariates = CovariateScheme::uniform_continuous;
    std::optional<Eigen::VectorXd> times;  // markov structures
    std::uint64_t seed = 0;
};

/// Draw a dataset from the discretized-MVN model: Z ~ MVN(0,R), U = Phi(Z),
/// Y_j the inverse cdf of the margin at U_j.  Cluster i uses substream
/// (seed, i), so results are independent of evaluation order.
Dataset simulate(const SimDesign& design);

} // namespace copreg
