#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "copreg/correlation.hpp"
#include "copreg/marginals.hpp"
#include "copreg/rectprob.hpp"

namespace copreg {

/// Covariates are stored row-major so per-coordinate rows are contiguous.
using CovariateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One cluster: responses, covariate rows (one per coordinate, intercept
/// included), and optional observation times for Markov dependence.
struct Cluster {
    Eigen::VectorXi y;
    CovariateMatrix X;
    std::optional<Eigen::VectorXd> times;
    int dim() const { return static_cast<int>(y.size()); }
};

using Dataset = std::vector<Cluster>;

struct ModelSpec {
    MarginalFamily family;
    CorrelationKind structure;
};

/// Model parameters on the natural scale.
struct Theta {
    Eigen::VectorXd beta;
    std::optional<double> gamma;
    double rho = 0.0;

    MarginalParams marginal() const { return {beta, gamma}; }
};

/// Uniform jitters, generated once and reused for every objective
/// evaluation (common random numbers).  Layout (replication k, cluster i,
/// coordinate j); clusters with d_i < d_max ignore the tail.
class JitterSet {
  public:
    JitterSet(int m, int n, int d_max, std::uint64_t seed);
    double at(int k, int i, int j) const {
        return v_[(static_cast<std::size_t>(k) * n_ + i) * d_max_ + j];
    }
    int replications() const { return m_; }
    int clusters() const { return n_; }
    int max_dim() const { return d_max_; }
    std::uint64_t seed() const { return seed_; }

  private:
    int m_, n_, d_max_;
    std::uint64_t seed_;
    std::vector<double> v_;
};

/// Latent-scale rectangle of Eq.-style bounds Phi^{-1}[F(y-1)], Phi^{-1}[F(y)].
/// zero_mass is set when some coordinate's pmf vanishes numerically.
Rectangle latent_rectangle(const Cluster& cluster, MarginalFamily fam,
                           const MarginalParams& params, bool* zero_mass = nullptr);

/// Correlation matrix for one cluster under the model's structure.
Eigen::MatrixXd cluster_correlation(const Cluster& cluster, CorrelationKind kind,
                                    double rho);

struct SlConfig {
    RectEngine engine = RectEngine::genz_bretz;
    RqmcConfig rqmc;
};

/// Rectangle probability of the cluster's response vector (the cluster pmf).
double joint_pmf(const Cluster& cluster, const ModelSpec& spec, const Theta& theta,
                 const SlConfig& cfg);

struct LoglikDiag {
    int floored_clusters = 0;
};

inline constexpr double log_pmf_floor = -746.0;

/// Exact/simulated log-likelihood: sum of log cluster pmfs.  Deterministic
/// given cfg (the RQMC engine reuses the same uniforms for every rectangle).
/// Optional weights support grouped duplicate clusters.
double sl_loglik(const Dataset& data, const ModelSpec& spec, const Theta& theta,
                 const SlConfig& cfg, LoglikDiag* diag = nullptr,
                 const std::vector<double>* weights = nullptr);

/// Surrogate log-likelihood for jitter replication k: MVN copula log-density
/// at the jittered probability transforms plus the marginal log pmfs.
double hr_surrogate_loglik(const Dataset& data, const ModelSpec& spec,
                           const Theta& theta, const JitterSet& jitters, int k);

/// Simulated log-likelihood averaging the jittered joint density over the
/// replications (log-sum-exp over k of a shared jitter draw across clusters).
/// per_cluster_jitters switches to independent per-cluster averaging.
double mf_loglik(const Dataset& data, const ModelSpec& spec, const Theta& theta,
                 const JitterSet& jitters, bool per_cluster_jitters = false);

} // namespace copreg
