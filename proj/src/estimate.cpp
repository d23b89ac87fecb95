#include "copreg/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "copreg/special_functions.hpp"

namespace copreg {

ParamTransform::ParamTransform(int n_beta, bool with_gamma, bool with_rho,
                               double rho_lo, double rho_hi)
    : n_beta_(n_beta),
      size_(n_beta + (with_gamma ? 1 : 0) + (with_rho ? 1 : 0)),
      with_gamma_(with_gamma),
      with_rho_(with_rho),
      rho_lo_(rho_lo),
      rho_hi_(rho_hi) {}

Eigen::VectorXd ParamTransform::to_raw(const Theta& theta) const {
    Eigen::VectorXd raw(size_);
    raw.head(n_beta_) = theta.beta;
    int k = n_beta_;
    if (with_gamma_) raw[k++] = std::log(theta.gamma.value());
    if (with_rho_) {
        const double t = (theta.rho - rho_lo_) / (rho_hi_ - rho_lo_);
        const double tc = std::min(1.0 - 1e-12, std::max(1e-12, t));
        raw[k++] = std::log(tc / (1.0 - tc));
    }
    return raw;
}

Theta ParamTransform::to_natural(const Eigen::VectorXd& raw) const {
    Theta theta;
    theta.beta = raw.head(n_beta_);
    int k = n_beta_;
    if (with_gamma_) theta.gamma = std::exp(raw[k++]);
    if (with_rho_) {
        const double s = 1.0 / (1.0 + std::exp(-raw[k]));
        theta.rho = rho_lo_ + (rho_hi_ - rho_lo_) * s;
    }
    return theta;
}

Eigen::VectorXd ParamTransform::jacobian_diag(const Eigen::VectorXd& raw) const {
    Eigen::VectorXd jac = Eigen::VectorXd::Ones(size_);
    int k = n_beta_;
    if (with_gamma_) {
        jac[k] = std::exp(raw[k]);
        ++k;
    }
    if (with_rho_) {
        const double s = 1.0 / (1.0 + std::exp(-raw[k]));
        jac[k] = (rho_hi_ - rho_lo_) * s * (1.0 - s);
    }
    return jac;
}

std::vector<std::string> ParamTransform::names() const {
    std::vector<std::string> out;
    for (int j = 0; j < n_beta_; ++j) out.push_back("beta" + std::to_string(j));
    if (with_gamma_) out.push_back("gamma");
    if (with_rho_) out.push_back("rho");
    return out;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd g(n), xp = x;
    for (int k = 0; k < n; ++k) {
        const double h = rel_step * std::max(1.0, std::fabs(x[k]));
        xp[k] = x[k] + h;
        const double fp = f(xp);
        xp[k] = x[k] - h;
        const double fm = f(xp);
        xp[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           double rel_step) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd xp = x;
    const double f0 = f(x);
    std::vector<double> h(n);
    for (int k = 0; k < n; ++k) h[k] = rel_step * std::max(1.0, std::fabs(x[k]));
    for (int i = 0; i < n; ++i) {
        xp[i] = x[i] + h[i];
        const double fp = f(xp);
        xp[i] = x[i] - h[i];
        const double fm = f(xp);
        xp[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            xp[i] = x[i] + h[i]; xp[j] = x[j] + h[j];
            const double fpp = f(xp);
            xp[j] = x[j] - h[j];
            const double fpm = f(xp);
            xp[i] = x[i] - h[i]; xp[j] = x[j] + h[j];
            const double fmp = f(xp);
            xp[j] = x[j] - h[j];
            const double fmm = f(xp);
            xp[i] = x[i]; xp[j] = x[j];
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

MaximizeResult maximize(const Objective& objective, const Eigen::VectorXd& x0,
                        const MaximizeOptions& opts) {
    const int n = static_cast<int>(x0.size());
    long evals = 0;
    const auto neg = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double v = objective(x);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };

    const Objective negf = [&](const Eigen::VectorXd& xx) { return neg(xx); };
    Eigen::VectorXd x = x0;
    double fx = neg(x);
    Eigen::VectorXd g = fd_gradient(negf, x, opts.fd_step);
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);

    MaximizeResult res;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd p = -Hinv * g;
        double slope = g.dot(p);
        if (!(slope < 0.0)) {  // not a descent direction: reset
            Hinv.setIdentity();
            p = -g;
            slope = g.dot(p);
        }
        // backtracking Armijo line search
        double alpha = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = x + alpha * p;
            f_new = neg(x_new);
            if (f_new <= fx + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // line-search failure: stop at best point
        Eigen::VectorXd g_new = fd_gradient(negf, x_new, opts.fd_step);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-10 * s.norm() * yv.norm()) {
            // BFGS inverse update
            const Eigen::VectorXd Hy = Hinv * yv;
            const double yHy = yv.dot(Hy);
            Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                    (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    res.x = x;
    res.value = -fx;
    res.iterations = it;
    res.evaluations = evals;
    if (!res.converged) {
        res.converged = g.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
    }
    return res;
}

namespace {

std::optional<Eigen::MatrixXd> natural_covariance(const Objective& objective,
                                                  const Eigen::VectorXd& raw_opt,
                                                  const ParamTransform& transform) {
    const Eigen::MatrixXd H = fd_hessian(objective, raw_opt);
    const Eigen::MatrixXd A = -H;  // should be positive definite at a maximum
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    const Eigen::VectorXd jac = transform.jacobian_diag(raw_opt);
    return jac.asDiagonal() * cov * jac.asDiagonal();
}

} // namespace

std::optional<Eigen::VectorXd> natural_variance_diag(const Objective& objective,
                                                     const Eigen::VectorXd& raw_opt,
                                                     const ParamTransform& transform) {
    const auto cov = natural_covariance(objective, raw_opt, transform);
    if (!cov) return std::nullopt;
    return cov->diagonal();
}

std::optional<Eigen::VectorXd> standard_errors(const Objective& objective,
                                               const Eigen::VectorXd& raw_opt,
                                               const ParamTransform& transform) {
    const auto var = natural_variance_diag(objective, raw_opt, transform);
    if (!var) return std::nullopt;
    if ((var->array() < 0.0).any()) return std::nullopt;
    return var->array().sqrt().matrix().eval();
}

double FitResult::estimate(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return estimates[static_cast<int>(k)];
    }
    throw std::out_of_range("FitResult: no parameter named " + name);
}

double FitResult::std_error(const std::string& name) const {
    if (!std_errors) throw std::runtime_error("FitResult: standard errors absent");
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return (*std_errors)[static_cast<int>(k)];
    }
    throw std::out_of_range("FitResult: no parameter named " + name);
}

/* ---- starting values ------------------------------------------------------ */

Eigen::VectorXd glm_start(const Dataset& data, MarginalFamily fam) {
    int p = 0;
    long nobs = 0;
    for (const auto& cl : data) {
        p = static_cast<int>(cl.X.cols());
        nobs += cl.dim();
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    // Fisher scoring on the pooled observations under working independence
    for (int iter = 0; iter < 50; ++iter) {
        Eigen::MatrixXd XtWX = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd XtWz = Eigen::VectorXd::Zero(p);
        for (const auto& cl : data) {
            for (int j = 0; j < cl.dim(); ++j) {
                const Eigen::VectorXd x = cl.X.row(j).transpose();
                const double eta = beta.dot(x);
                double mu, dmu, var;
                switch (fam) {
                    case MarginalFamily::bernoulli_logit:
                        mu = 1.0 / (1.0 + std::exp(-eta));
                        dmu = mu * (1.0 - mu);
                        var = std::max(mu * (1.0 - mu), 1e-10);
                        break;
                    case MarginalFamily::bernoulli_probit:
                        mu = norm_cdf(eta);
                        dmu = norm_pdf(eta);
                        var = std::max(mu * (1.0 - mu), 1e-10);
                        break;
                    default:  // log link counts
                        mu = std::exp(eta);
                        dmu = mu;
                        var = std::max(mu, 1e-10);
                        break;
                }
                const double w = dmu * dmu / var;
                const double z = eta + (cl.y[j] - mu) / std::max(dmu, 1e-10);
                XtWX.noalias() += w * x * x.transpose();
                XtWz.noalias() += w * z * x;
            }
        }
        const Eigen::VectorXd beta_new = XtWX.ldlt().solve(XtWz);
        const double delta = (beta_new - beta).lpNorm<Eigen::Infinity>();
        beta = beta_new;
        if (delta < 1e-10) break;
    }
    return beta;
}

double dispersion_start(const Dataset& data, MarginalFamily fam,
                        const Eigen::VectorXd& beta) {
    // method of moments on the Pearson residual identity
    double num = 0.0, den = 0.0;
    for (const auto& cl : data) {
        for (int j = 0; j < cl.dim(); ++j) {
            const double mu = std::exp(beta.dot(cl.X.row(j).transpose()));
            const double r2 = (cl.y[j] - mu) * (cl.y[j] - mu);
            num += r2 - mu;
            den += fam == MarginalFamily::nb2 ? mu * mu : mu;
        }
    }
    const double g = den > 0.0 ? num / den : 0.1;
    return std::min(50.0, std::max(0.05, g));
}

double rho_start(const Dataset& data, MarginalFamily fam, const Theta& theta,
                 std::pair<double, double> range) {
    // average pairwise product of midpoint normal scores
    const MarginalParams mp = theta.marginal();
    double sum = 0.0;
    long pairs = 0;
    for (const auto& cl : data) {
        const int d = cl.dim();
        if (d < 2) continue;
        Eigen::VectorXd z(d);
        for (int j = 0; j < d; ++j) {
            const double mu = mean_from_covariates(fam, mp, cl.X.row(j).transpose());
            const CdfPair cp = cdf_pair(fam, mu, mp.gamma.value_or(0.0), cl.y[j]);
            const double u = std::min(1.0 - 1e-10, std::max(1e-10, 0.5 * (cp.below + cp.at)));
            z[j] = norm_quantile(u);
        }
        for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k) {
                sum += z[j] * z[k];
                ++pairs;
            }
    }
    double r = pairs > 0 ? sum / pairs : 0.0;
    const double margin = 0.05 * (range.second - range.first);
    return std::min(range.second - margin, std::max(range.first + margin, r));
}

/* ---- fit protocols -------------------------------------------------------- */

namespace {

struct Problem {
    ParamTransform transform;
    Eigen::VectorXd raw0;
    std::vector<std::string> names;
};

int max_cluster_dim(const Dataset& data) {
    int d = 0;
    for (const auto& cl : data) d = std::max(d, cl.dim());
    return d;
}

Problem setup_problem(const Dataset& data, const ModelSpec& spec,
                      const std::optional<Theta>& start, double rho_floor) {
    if (data.empty()) throw validation_error("fit: empty dataset");
    const int p = static_cast<int>(data.front().X.cols());
    const int d_max = max_cluster_dim(data);
    const bool with_gamma = has_dispersion(spec.family);
    const bool with_rho = d_max > 1;

    double lo = 0.0, hi = 1.0;
    if (with_rho) {
        // keep the logistic transform off the admissibility boundary
        const auto range = rho_range(spec.structure, d_max);
        lo = std::max(range.first, rho_floor) + 1e-4;
        hi = range.second - 1e-4;
    }
    ParamTransform transform(p, with_gamma, with_rho, lo, hi);

    if (static_cast<long>(data.size()) < transform.size()) {
        throw validation_error("fit: fewer clusters than parameters");
    }

    Theta theta0;
    if (start) {
        theta0 = *start;
        if (with_gamma && !theta0.gamma) theta0.gamma = 0.5;
    } else {
        theta0.beta = glm_start(data, spec.family);
        if (with_gamma) {
            theta0.gamma = dispersion_start(data, spec.family, theta0.beta);
        }
        if (with_rho) theta0.rho = rho_start(data, spec.family, theta0, {lo, hi});
    }
    if (with_rho) {
        theta0.rho = std::min(hi - 1e-6, std::max(lo + 1e-6, theta0.rho));
    }

    Problem pr{std::move(transform), {}, {}};
    pr.raw0 = pr.transform.to_raw(theta0);
    pr.names = pr.transform.names();
    return pr;
}

FitResult finalize_fit(const Problem& pr, const Objective& obj,
                       const MaximizeResult& mr) {
    FitResult fit;
    fit.names = pr.names;
    fit.theta = pr.transform.to_natural(mr.x);
    fit.estimates.resize(pr.transform.size());
    fit.estimates.head(fit.theta.beta.size()) = fit.theta.beta;
    int k = static_cast<int>(fit.theta.beta.size());
    if (pr.transform.with_gamma()) fit.estimates[k++] = fit.theta.gamma.value();
    if (pr.transform.with_rho()) fit.estimates[k++] = fit.theta.rho;
    fit.loglik = mr.value;
    fit.iterations = mr.iterations;
    fit.converged = mr.converged;
    fit.std_errors = standard_errors(obj, mr.x, pr.transform);
    return fit;
}

} // namespace

FitResult fit_sl(const Dataset& data, const ModelSpec& spec, const SlConfig& cfg,
                 const MaximizeOptions& opts, const std::optional<Theta>& start) {
    // the 1-D reduction engine covers positive exchangeable dependence only
    const double rho_floor =
        cfg.engine == RectEngine::exchangeable_1d ? 0.0 : -1.0;
    Problem pr = setup_problem(data, spec, start, rho_floor);

    // group bit-identical clusters; exact rewrite of the objective
    Dataset grouped;
    std::vector<double> weights;
    for (const auto& cl : data) {
        bool merged = false;
        for (std::size_t g = 0; g < grouped.size(); ++g) {
            const auto& gc = grouped[g];
            if (gc.y.size() == cl.y.size() && gc.y == cl.y && gc.X == cl.X &&
                gc.times.has_value() == cl.times.has_value() &&
                (!gc.times || *gc.times == *cl.times)) {
                weights[g] += 1.0;
                merged = true;
                break;
            }
        }
        if (!merged) {
            grouped.push_back(cl);
            weights.push_back(1.0);
        }
    }

    LoglikDiag diag;
    const Objective obj = [&](const Eigen::VectorXd& raw) {
        const Theta theta = pr.transform.to_natural(raw);
        return sl_loglik(grouped, spec, theta, cfg, &diag, &weights);
    };
    const MaximizeResult mr = maximize(obj, pr.raw0, opts);
    FitResult fit = finalize_fit(pr, obj, mr);
    fit.engine = rect_engine_name(cfg.engine);
    fit.seed = cfg.rqmc.seed;
    fit.floored_clusters = diag.floored_clusters;
    return fit;
}

FitResult fit_hr(const Dataset& data, const ModelSpec& spec, const JitterSet& jitters,
                 const MaximizeOptions& opts, const std::optional<Theta>& start) {
    Problem pr = setup_problem(data, spec, start, -1.0);
    const int m = jitters.replications();

    Eigen::VectorXd est_sum = Eigen::VectorXd::Zero(pr.transform.size());
    Eigen::VectorXd var_sum = Eigen::VectorXd::Zero(pr.transform.size());
    int used = 0, var_used = 0;
    double loglik_sum = 0.0;
    int iterations = 0;
    Eigen::VectorXd raw_start = pr.raw0;

    for (int k = 0; k < m; ++k) {
        const Objective obj = [&](const Eigen::VectorXd& raw) {
            const Theta theta = pr.transform.to_natural(raw);
            return hr_surrogate_loglik(data, spec, theta, jitters, k);
        };
        const MaximizeResult mr = maximize(obj, raw_start, opts);
        iterations += mr.iterations;
        if (!mr.converged) continue;
        raw_start = mr.x;  // warm start for the next run
        const Theta th = pr.transform.to_natural(mr.x);
        Eigen::VectorXd est(pr.transform.size());
        est.head(th.beta.size()) = th.beta;
        int c = static_cast<int>(th.beta.size());
        if (pr.transform.with_gamma()) est[c++] = th.gamma.value();
        if (pr.transform.with_rho()) est[c++] = th.rho;
        est_sum += est;
        loglik_sum += mr.value;
        ++used;
        if (const auto var = natural_variance_diag(obj, mr.x, pr.transform)) {
            var_sum += *var;
            ++var_used;
        }
    }

    FitResult fit;
    fit.names = pr.names;
    fit.engine = "hr";
    fit.seed = jitters.seed();
    fit.runs_used = used;
    fit.iterations = iterations;
    if (used == 0) {
        fit.converged = false;
        fit.estimates = Eigen::VectorXd::Zero(pr.transform.size());
        return fit;
    }
    fit.converged = true;
    fit.estimates = est_sum / used;
    fit.loglik = loglik_sum / used;
    fit.theta.beta = fit.estimates.head(data.front().X.cols());
    int c = static_cast<int>(fit.theta.beta.size());
    if (pr.transform.with_gamma()) fit.theta.gamma = fit.estimates[c++];
    if (pr.transform.with_rho()) fit.theta.rho = fit.estimates[c++];
    if (var_used > 0) {
        const Eigen::VectorXd avg = var_sum / var_used;
        if ((avg.array() >= 0.0).all()) {
            fit.std_errors = avg.array().sqrt().matrix().eval();
        }
    }
    return fit;
}

FitResult fit_mf(const Dataset& data, const ModelSpec& spec, const JitterSet& jitters,
                 const MaximizeOptions& opts, const std::optional<Theta>& start) {
    Problem pr = setup_problem(data, spec, start, -1.0);
    const Objective obj = [&](const Eigen::VectorXd& raw) {
        const Theta theta = pr.transform.to_natural(raw);
        return mf_loglik(data, spec, theta, jitters);
    };
    const MaximizeResult mr = maximize(obj, pr.raw0, opts);
    FitResult fit = finalize_fit(pr, obj, mr);
    fit.engine = "mf";
    fit.seed = jitters.seed();
    return fit;
}

} // namespace copreg
