#include "copreg/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace copreg {

namespace {

// Per-(y, x) marginal quantities entering the limit objectives.
struct CellMoments {
    double zeta = 0.0;     // E[Z | latent interval]
    double xi = 1.0;       // E[Z^2 | latent interval]
    double log_f = 0.0;
};

// Latent interval and truncated moments for response y at mean mu.
CellMoments cell_moments(MarginalFamily fam, double mu, double gamma, int y) {
    CellMoments out;
    const CdfPair cp = cdf_pair(fam, mu, gamma, y);
    out.log_f = cp.mass > 0.0 ? std::log(cp.mass) : log_pmf_floor;
    if (cp.mass <= 1e-300) {
        // vanishing cell far from the optimum: pin the moments at the
        // nearer finite endpoint so the optimizer sees finite values
        const double edge = cp.below > 0.5 ? norm_quantile(std::min(1.0 - 1e-16, cp.below))
                                           : norm_quantile(std::max(1e-16, cp.at));
        out.zeta = edge;
        out.xi = edge * edge;
        return out;
    }
    const double lo = cp.below <= 0.0 ? neg_inf : norm_quantile(cp.below);
    const double hi = cp.at >= 1.0 ? pos_inf : norm_quantile(cp.at);
    const Interval iv{lo, hi};
    out.zeta = trunc_norm_mean(iv);
    out.xi = trunc_norm_second_moment(iv);
    return out;
}

Rectangle group_rectangle(const CaseEnumeration::Group& g, MarginalFamily fam,
                          const Theta& theta) {
    Cluster cl;
    cl.y = g.y;
    cl.X.resize(g.y.size(), 2);
    for (int j = 0; j < g.y.size(); ++j) {
        cl.X(j, 0) = 1.0;
        cl.X(j, 1) = g.x;
    }
    return latent_rectangle(cl, fam, theta.marginal());
}

} // namespace

CaseEnumeration enumerate_cases(const ModelSpec& spec, const Theta& truth, int d,
                                const CovariateDesign& design, int truncation) {
    if (spec.structure != CorrelationKind::exchangeable || truth.rho < 0.0) {
        throw unsupported_structure_error(
            "enumerate_cases: limits cover positive exchangeable dependence only");
    }
    const int support = is_count_family(spec.family) ? truncation + 1 : 2;
    const double total = std::pow(static_cast<double>(support), d) *
                         static_cast<double>(design.values.size());
    if (total > 1e7) {
        throw std::invalid_argument("enumerate_cases: enumeration exceeds 1e7 cases");
    }

    CaseEnumeration out;
    out.spec = spec;
    out.truth = truth;
    out.d = d;
    out.truncation = support - 1;

    // distinct sorted responses with multinomial multiplicities
    for (std::size_t xi = 0; xi < design.values.size(); ++xi) {
        const double x = design.values[xi];
        const double px = design.probs[xi];
        std::map<std::vector<int>, long> mult;
        std::vector<int> y(d, 0);
        while (true) {
            std::vector<int> key = y;
            std::sort(key.begin(), key.end());
            ++mult[key];
            int j = d - 1;
            while (j >= 0 && y[j] == support - 1) y[j--] = 0;
            if (j < 0) break;
            ++y[j];
        }
        for (const auto& [key, count] : mult) {
            CaseEnumeration::Group g;
            g.y = Eigen::Map<const Eigen::VectorXi>(key.data(), d);
            g.x = x;
            const Rectangle rect = group_rectangle(g, spec.family, truth);
            const double h = exchangeable_1d(rect, truth.rho).value;
            g.weight = px * h * static_cast<double>(count);
            out.groups.push_back(g);
        }
    }

    // raw cases in lexicographic order, weights shared within a group
    std::map<std::pair<std::vector<int>, long>, double> lookup;
    for (const auto& g : out.groups) {
        std::vector<int> key(g.y.data(), g.y.data() + g.y.size());
        lookup[{key, static_cast<long>(g.x * 4096)}] = g.weight;
    }
    for (std::size_t xi = 0; xi < design.values.size(); ++xi) {
        const double x = design.values[xi];
        std::vector<int> y(d, 0);
        while (true) {
            EnumCase c;
            c.y = Eigen::Map<const Eigen::VectorXi>(y.data(), d);
            c.x = x;
            std::vector<int> key = y;
            std::sort(key.begin(), key.end());
            const auto it = lookup.find({key, static_cast<long>(x * 4096)});
            long count = 1;
            {
                // share of the group's weight belonging to one raw case
                std::map<int, int> tally;
                for (int v : key) ++tally[v];
                double perms = std::lgamma(d + 1.0);
                for (const auto& [_, c2] : tally) perms -= std::lgamma(c2 + 1.0);
                count = std::lround(std::exp(perms));
            }
            c.weight = it->second / static_cast<double>(count);
            out.cases.push_back(c);
            int j = d - 1;
            while (j >= 0 && y[j] == support - 1) y[j--] = 0;
            if (j < 0) break;
            ++y[j];
        }
    }
    return out;
}

double limit_hr_objective(const CaseEnumeration& cases, const Theta& theta) {
    const int d = cases.d;
    const double rho = theta.rho;
    const double gamma = theta.gamma.value_or(0.0);
    const double c1 =
        -0.5 * std::log1p((d - 1) * rho) - 0.5 * (d - 1) * std::log1p(-rho);
    const double c2 = rho / (2.0 * (1.0 - rho) * (1.0 + (d - 1) * rho));

    // moments depend on (y, x) only
    std::map<std::pair<int, long>, CellMoments> cache;
    const auto get = [&](int y, double x) -> const CellMoments& {
        const auto key = std::make_pair(y, static_cast<long>(x * 4096));
        auto it = cache.find(key);
        if (it == cache.end()) {
            Eigen::VectorXd xv(theta.beta.size());
            xv[0] = 1.0;
            if (xv.size() > 1) xv[1] = x;
            const double mu = mean_from_covariates(cases.spec.family, theta.marginal(), xv);
            it = cache.emplace(key, cell_moments(cases.spec.family, mu, gamma, y)).first;
        }
        return it->second;
    };

    double total = 0.0;
    for (const auto& g : cases.groups) {
        double sum_zeta = 0.0, sum_zeta_sq = 0.0, sum_xi = 0.0, sum_logf = 0.0;
        for (int j = 0; j < d; ++j) {
            const CellMoments& cm = get(g.y[j], g.x);
            sum_zeta += cm.zeta;
            sum_zeta_sq += cm.zeta * cm.zeta;
            sum_xi += cm.xi;
            sum_logf += cm.log_f;
        }
        const double cross2 = sum_zeta * sum_zeta - sum_zeta_sq;  // 2 sum_{j<k}
        const double quad = (d - 1) * rho * sum_xi - cross2;
        total += g.weight * (c1 - c2 * quad + sum_logf);
    }
    return total;
}

double limit_loglik_objective(const CaseEnumeration& cases, const Theta& theta,
                              const SlConfig& cfg) {
    double total = 0.0;
    for (const auto& g : cases.groups) {
        const Rectangle rect = group_rectangle(g, cases.spec.family, theta);
        double h;
        if (cfg.engine == RectEngine::exchangeable_1d) {
            // tight tolerance: this objective gets differenced twice for the
            // limiting Hessians, so adaptive-panel kinks must sit far below
            // the finite-difference scale
            h = exchangeable_1d(rect, std::max(0.0, theta.rho), 5e-13).value;
        } else {
            const auto R = build_matrix(
                CorrelationStructure::exchangeable(cases.d, theta.rho));
            h = genz_bretz(rect, cholesky(R), cfg.rqmc).value;
        }
        total += g.weight * (h > 0.0 ? std::log(h) : log_pmf_floor);
    }
    return total;
}

namespace {

LimitResult maximize_limit(const CaseEnumeration& cases,
                           const std::function<double(const Theta&)>& objective,
                           const MaximizeOptions& opts) {
    const bool with_gamma = has_dispersion(cases.spec.family);
    const auto range = rho_range(CorrelationKind::exchangeable, cases.d);
    ParamTransform transform(static_cast<int>(cases.truth.beta.size()), with_gamma,
                             true, range.first + 1e-4, range.second - 1e-4);
    const Objective raw_obj = [&](const Eigen::VectorXd& raw) {
        return objective(transform.to_natural(raw));
    };
    const MaximizeResult mr = maximize(raw_obj, transform.to_raw(cases.truth), opts);

    LimitResult out;
    out.theta = transform.to_natural(mr.x);
    out.names = transform.names();
    out.estimates.resize(transform.size());
    out.estimates.head(out.theta.beta.size()) = out.theta.beta;
    int k = static_cast<int>(out.theta.beta.size());
    if (with_gamma) out.estimates[k++] = out.theta.gamma.value();
    out.estimates[k++] = out.theta.rho;
    out.objective = mr.value;
    out.converged = mr.converged;
    return out;
}

} // namespace

double LimitResult::estimate(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return estimates[static_cast<int>(k)];
    }
    throw std::out_of_range("LimitResult: no parameter named " + name);
}

LimitResult limiting_hrmle(const CaseEnumeration& cases, const MaximizeOptions& opts) {
    return maximize_limit(
        cases, [&](const Theta& th) { return limit_hr_objective(cases, th); }, opts);
}

LimitResult limiting_msle(const CaseEnumeration& cases, const RqmcConfig& rqmc,
                          const MaximizeOptions& opts) {
    const SlConfig cfg{RectEngine::genz_bretz, rqmc};
    return maximize_limit(
        cases, [&](const Theta& th) { return limit_loglik_objective(cases, th, cfg); },
        opts);
}

LimitResult limiting_mle(const CaseEnumeration& cases, const MaximizeOptions& opts) {
    const SlConfig cfg{RectEngine::exchangeable_1d, {}};
    return maximize_limit(
        cases, [&](const Theta& th) { return limit_loglik_objective(cases, th, cfg); },
        opts);
}

Eigen::VectorXd pack_natural(const Theta& theta, const ModelSpec& spec) {
    const int p = static_cast<int>(theta.beta.size());
    const bool with_gamma = has_dispersion(spec.family);
    Eigen::VectorXd v(p + (with_gamma ? 1 : 0) + 1);
    v.head(p) = theta.beta;
    int k = p;
    if (with_gamma) v[k++] = theta.gamma.value();
    v[k] = theta.rho;
    return v;
}

Theta unpack_natural(const Eigen::VectorXd& v, const ModelSpec& spec, int n_beta) {
    Theta theta;
    theta.beta = v.head(n_beta);
    int k = n_beta;
    if (has_dispersion(spec.family)) theta.gamma = v[k++];
    theta.rho = v[k];
    return theta;
}

Objective natural_limit_objective(const CaseEnumeration& cases, bool hr,
                                  const SlConfig& cfg) {
    const int p = static_cast<int>(cases.truth.beta.size());
    const ModelSpec spec = cases.spec;
    return [&cases, hr, cfg, p, spec](const Eigen::VectorXd& v) {
        const Theta th = unpack_natural(v, spec, p);
        if (th.gamma && *th.gamma <= 0.0) return -1e12;
        if (th.rho <= -1.0 / std::max(1, cases.d - 1) || th.rho >= 1.0) return -1e12;
        return hr ? limit_hr_objective(cases, th)
                  : limit_loglik_objective(cases, th, cfg);
    };
}

Eigen::VectorXd limiting_se(const Objective& natural_objective,
                            const Eigen::VectorXd& theta_limit, int n_ref) {
    const Eigen::MatrixXd H = fd_hessian(natural_objective, theta_limit);
    const Eigen::MatrixXd A = -H;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A)
                                       .eigenvalues();
        std::string msg = "limiting_se: Hessian not negative definite; eigenvalues of -H:";
        for (int i = 0; i < ev.size(); ++i) msg += " " + std::to_string(ev[i]);
        throw std::runtime_error(msg);
    }
    const Eigen::MatrixXd cov =
        llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    return (cov.diagonal() / static_cast<double>(n_ref)).array().sqrt();
}

} // namespace copreg
