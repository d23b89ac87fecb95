#include "copreg/likelihood.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "copreg/rng.hpp"

namespace copreg {

JitterSet::JitterSet(int m, int n, int d_max, std::uint64_t seed)
    : m_(m), n_(n), d_max_(d_max), seed_(seed),
      v_(static_cast<std::size_t>(m) * n * d_max) {
    std::size_t idx = 0;
    for (int k = 0; k < m; ++k) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d_max; ++j) v_[idx++] = rng.uniform();
    }
}

Rectangle latent_rectangle(const Cluster& cluster, MarginalFamily fam,
                           const MarginalParams& params, bool* zero_mass) {
    const int d = cluster.dim();
    Rectangle rect;
    rect.bounds.reserve(d);
    if (zero_mass) *zero_mass = false;
    for (int j = 0; j < d; ++j) {
        const double mu = mean_from_covariates(fam, params, cluster.X.row(j).transpose());
        const CdfPair cp = cdf_pair(fam, mu, params.gamma.value_or(0.0), cluster.y[j]);
        const double lo = cp.below <= 0.0 ? neg_inf
                          : cp.below >= 1.0 ? pos_inf
                                            : norm_quantile(cp.below);
        const double hi = cp.at >= 1.0 ? pos_inf
                          : cp.at <= 0.0 ? neg_inf
                                         : norm_quantile(cp.at);
        if (zero_mass && (cp.mass <= 1e-300 || !(lo < hi))) *zero_mass = true;
        rect.bounds.push_back({lo, hi});
    }
    return rect;
}

Eigen::MatrixXd cluster_correlation(const Cluster& cluster, CorrelationKind kind,
                                    double rho) {
    const int d = cluster.dim();
    switch (kind) {
        case CorrelationKind::exchangeable:
            return build_matrix(CorrelationStructure::exchangeable(d, rho));
        case CorrelationKind::ar1:
            return build_matrix(CorrelationStructure::ar1(d, rho));
        case CorrelationKind::markov: {
            if (!cluster.times) {
                throw validation_error("markov structure requires observation times");
            }
            return build_matrix(CorrelationStructure::markov(rho, *cluster.times));
        }
        case CorrelationKind::unstructured:
            break;
    }
    throw validation_error("cluster_correlation: unsupported structure");
}

double joint_pmf(const Cluster& cluster, const ModelSpec& spec, const Theta& theta,
                 const SlConfig& cfg) {
    const MarginalParams mp = theta.marginal();
    if (cluster.dim() == 1) {
        return pmf(spec.family, mp, cluster.y[0], cluster.X.row(0).transpose());
    }
    bool zero_mass = false;
    const Rectangle rect = latent_rectangle(cluster, spec.family, mp, &zero_mass);
    if (zero_mass) return 0.0;
    if (cfg.engine == RectEngine::exchangeable_1d) {
        if (spec.structure != CorrelationKind::exchangeable || theta.rho < 0.0) {
            throw unsupported_structure_error(
                "exchangeable_1d engine needs positive exchangeable dependence");
        }
        return exchangeable_1d(rect, theta.rho).value;
    }
    const Eigen::MatrixXd R = cluster_correlation(cluster, spec.structure, theta.rho);
    return genz_bretz(rect, cholesky(R), cfg.rqmc).value;
}

double sl_loglik(const Dataset& data, const ModelSpec& spec, const Theta& theta,
                 const SlConfig& cfg, LoglikDiag* diag,
                 const std::vector<double>* weights) {
    double total = 0.0;
    int floored = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = joint_pmf(data[i], spec, theta, cfg);
        double lp;
        if (p > 0.0) {
            lp = std::log(p);
        } else {
            lp = log_pmf_floor;
            ++floored;
        }
        total += weights ? (*weights)[i] * lp : lp;
    }
    if (diag) diag->floored_clusters = floored;
    return total;
}

namespace {

// Cholesky factors of the per-cluster correlation matrices; shared across
// clusters of equal size unless times are involved.
class ClusterFactors {
  public:
    ClusterFactors(const Dataset& data, CorrelationKind kind, double rho) {
        if (kind == CorrelationKind::markov) {
            per_cluster_.reserve(data.size());
            for (const auto& cl : data) {
                per_cluster_.push_back(cholesky(cluster_correlation(cl, kind, rho)));
            }
        } else {
            for (const auto& cl : data) {
                const int d = cl.dim();
                if (!by_dim_.count(d)) {
                    by_dim_.emplace(d, cholesky(cluster_correlation(cl, kind, rho)));
                }
            }
        }
        kind_ = kind;
    }

    const CholeskyFactor& get(const Dataset& data, std::size_t i) const {
        if (kind_ == CorrelationKind::markov) return per_cluster_[i];
        return by_dim_.at(data[i].dim());
    }

  private:
    CorrelationKind kind_;
    std::vector<CholeskyFactor> per_cluster_;
    std::map<int, CholeskyFactor> by_dim_;
};

constexpr double u_clamp = 1e-16;

// Per-cluster marginal quantities; independent of the jitters.
struct ClusterMargins {
    std::vector<CdfPair> cp;
    double log_pmf_sum = 0.0;
};

ClusterMargins cluster_margins(const Cluster& cl, MarginalFamily fam,
                               const MarginalParams& mp) {
    ClusterMargins out;
    const int d = cl.dim();
    out.cp.reserve(d);
    for (int j = 0; j < d; ++j) {
        const double mu = mean_from_covariates(fam, mp, cl.X.row(j).transpose());
        out.cp.push_back(cdf_pair(fam, mu, mp.gamma.value_or(0.0), cl.y[j]));
        out.log_pmf_sum +=
            out.cp.back().mass > 0.0 ? std::log(out.cp.back().mass) : log_pmf_floor;
    }
    return out;
}

// Latent normal scores q_ij = Phi^{-1}[F(y-1) + v f(y)] for one jitter slice.
void jittered_scores(const ClusterMargins& mg, const JitterSet& jit, int k, int i,
                     Eigen::VectorXd& q) {
    const int d = static_cast<int>(mg.cp.size());
    q.resize(d);
    for (int j = 0; j < d; ++j) {
        double u = mg.cp[j].below + jit.at(k, i, j) * mg.cp[j].mass;
        u = std::min(1.0 - u_clamp, std::max(u_clamp, u));
        q[j] = norm_quantile(u);
    }
}

// log MVN copula density: -1/2 log|R| + 1/2 (q'q - ||L^{-1}q||^2).
double log_copula_density(const Eigen::VectorXd& q, const CholeskyFactor& L) {
    double logdet_half = 0.0;
    for (int j = 0; j < L.dim(); ++j) logdet_half += std::log(L.lower(j, j));
    const Eigen::VectorXd s =
        L.lower.triangularView<Eigen::Lower>().solve(q);
    return -logdet_half + 0.5 * (q.squaredNorm() - s.squaredNorm());
}

} // namespace

double hr_surrogate_loglik(const Dataset& data, const ModelSpec& spec,
                           const Theta& theta, const JitterSet& jitters, int k) {
    const MarginalParams mp = theta.marginal();
    const ClusterFactors factors(data, spec.structure, theta.rho);
    Eigen::VectorXd q;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ClusterMargins mg = cluster_margins(data[i], spec.family, mp);
        jittered_scores(mg, jitters, k, static_cast<int>(i), q);
        total += log_copula_density(q, factors.get(data, i)) + mg.log_pmf_sum;
    }
    return total;
}

double mf_loglik(const Dataset& data, const ModelSpec& spec, const Theta& theta,
                 const JitterSet& jitters, bool per_cluster_jitters) {
    const int m = jitters.replications();
    if (m < 1) throw std::invalid_argument("mf_loglik: needs at least one replication");
    const MarginalParams mp = theta.marginal();
    const ClusterFactors factors(data, spec.structure, theta.rho);
    const std::size_t n = data.size();
    Eigen::VectorXd q;

    double total = 0.0;
    if (per_cluster_jitters) {
        for (std::size_t i = 0; i < n; ++i) {
            const ClusterMargins mg = cluster_margins(data[i], spec.family, mp);
            std::vector<double> a(m);
            double max_a = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < m; ++k) {
                jittered_scores(mg, jitters, k, static_cast<int>(i), q);
                a[k] = log_copula_density(q, factors.get(data, i));
                max_a = std::max(max_a, a[k]);
            }
            double lse = 0.0;
            for (int k = 0; k < m; ++k) lse += std::exp(a[k] - max_a);
            total += mg.log_pmf_sum + max_a + std::log(lse / m);
        }
        return total;
    }

    // joint draw across clusters: log-mean-exp over k of sum_i log c_{ik}
    double log_pmf_all = 0.0;
    std::vector<double> a(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const ClusterMargins mg = cluster_margins(data[i], spec.family, mp);
        for (int k = 0; k < m; ++k) {
            jittered_scores(mg, jitters, k, static_cast<int>(i), q);
            a[k] += log_copula_density(q, factors.get(data, i));
        }
        log_pmf_all += mg.log_pmf_sum;
    }
    double max_a = -std::numeric_limits<double>::infinity();
    for (double v : a) max_a = std::max(max_a, v);
    double lse = 0.0;
    for (double v : a) lse += std::exp(v - max_a);
    return log_pmf_all + max_a + std::log(lse / m);
}

} // namespace copreg
