#include "copreg/rectprob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "copreg/rng.hpp"

namespace copreg {

std::string rect_engine_name(RectEngine e) {
    switch (e) {
        case RectEngine::exchangeable_1d: return "exch1d";
        case RectEngine::genz_bretz: return "gb";
        case RectEngine::naive_mc: return "naive";
        case RectEngine::mf_importance: return "mf";
    }
    return "?";
}

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double cdf_or_limit(double z) {
    if (z == pos_inf) return 1.0;
    if (z == neg_inf) return 0.0;
    return norm_cdf(z);
}

/* ---- adaptive Gauss-Kronrod (7,15) quadrature ---------------------------- */

// Kronrod-15 abscissae/weights on [-1,1] and the embedded Gauss-7 weights.
constexpr double gk_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double& integral, double& error, long& evals) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double fv1 = f(c - h * gk_x[i]);
        const double fv2 = (i == 7) ? fv1 : f(c + h * gk_x[i]);
        evals += (i == 7) ? 1 : 2;
        const double fsum = (i == 7) ? fv1 : fv1 + fv2;
        resk += gk_wk[i] * fsum;
        // odd indices are the embedded Gauss-7 nodes (centre included once)
        if (i % 2 == 1) resg += gk_wg[i / 2] * fsum;
    }
    integral = resk * h;
    error = 2.0 * std::fabs((resk - resg) * h);
}

template <typename F>
double adaptive_quad(const F& f, double a, double b, double tol, long& evals, int depth = 0) {
    double integral, error;
    gk15(f, a, b, integral, error, evals);
    if (error <= tol || depth >= 48) return integral;
    const double c = 0.5 * (a + b);
    return adaptive_quad(f, a, c, 0.5 * tol, evals, depth + 1) +
           adaptive_quad(f, c, b, 0.5 * tol, evals, depth + 1);
}

} // namespace

ProbEstimate exchangeable_1d(const Rectangle& rect, double rho, double tol) {
    if (rho < 0.0 || rho >= 1.0) {
        throw unsupported_structure_error(
            "exchangeable_1d: requires positive exchangeable rho in [0,1)");
    }
    const int d = rect.dim();
    for (const auto& iv : rect.bounds) {
        if (!(iv.lower < iv.upper)) return {0.0, 0.0, RectEngine::exchangeable_1d, 0};
    }
    if (rho == 0.0) {
        double prod = 1.0;
        for (const auto& iv : rect.bounds) {
            prod *= cdf_or_limit(iv.upper) - cdf_or_limit(iv.lower);
        }
        return {clamp01(prod), 0.0, RectEngine::exchangeable_1d, d};
    }
    const double sr = std::sqrt(rho), s1 = std::sqrt(1.0 - rho);
    const auto integrand = [&](double z) {
        double prod = norm_pdf(z);
        for (const auto& iv : rect.bounds) {
            const double up = iv.upper == pos_inf ? 1.0 : norm_cdf((iv.upper - sr * z) / s1);
            const double lo = iv.lower == neg_inf ? 0.0 : norm_cdf((iv.lower - sr * z) / s1);
            prod *= up - lo;
            if (prod <= 0.0) return 0.0;
        }
        return prod;
    };
    long evals = 0;
    const double value = adaptive_quad(integrand, -8.0, 8.0, tol, evals);
    return {clamp01(value), 0.0, RectEngine::exchangeable_1d, evals};
}

namespace {

/* ---- Richtmyer lattice -------------------------------------------------- */

std::vector<double> richtmyer_alphas(int n) {
    std::vector<double> alphas;
    alphas.reserve(n);
    int candidate = 1;
    while (static_cast<int>(alphas.size()) < n) {
        ++candidate;
        bool prime = candidate >= 2;
        for (int f = 2; f * f <= candidate; ++f) {
            if (candidate % f == 0) { prime = false; break; }
        }
        if (!prime) continue;
        double intpart;
        alphas.push_back(std::modf(std::sqrt(static_cast<double>(candidate)), &intpart));
    }
    return alphas;
}

struct OrderedProblem {
    std::vector<double> lower, upper;
    Eigen::MatrixXd L;
    bool degenerate = false;
};

// Reorder coordinates narrowest-interval-first and refactor the permuted
// correlation; the standard variable-ordering heuristic for the transformed
// integrand.
OrderedProblem reorder_and_factor(const Rectangle& rect, const CholeskyFactor& chol) {
    const int d = rect.dim();
    OrderedProblem out;
    std::vector<double> mass(d);
    for (int j = 0; j < d; ++j) {
        const auto& iv = rect.bounds[j];
        mass[j] = cdf_or_limit(iv.upper) - cdf_or_limit(iv.lower);
        if (!(mass[j] > 0.0)) {
            out.degenerate = true;
            return out;
        }
    }
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mass[a] < mass[b]; });

    const Eigen::MatrixXd R = chol.lower * chol.lower.transpose();
    Eigen::MatrixXd Rp(d, d);
    out.lower.resize(d);
    out.upper.resize(d);
    for (int j = 0; j < d; ++j) {
        out.lower[j] = rect.bounds[order[j]].lower;
        out.upper[j] = rect.bounds[order[j]].upper;
        for (int k = 0; k < d; ++k) Rp(j, k) = R(order[j], order[k]);
    }
    out.L = cholesky(Rp).lower;
    return out;
}

constexpr double quantile_clamp = 1e-16;

// Transformed integrand e(w): product of conditional interval masses along
// the Cholesky recursion, w in [0,1]^{d-1}.
double gb_integrand(const OrderedProblem& pr, const double* w, int d,
                    std::vector<double>& ybuf) {
    double eps_lo = pr.lower[0] == neg_inf ? 0.0 : norm_cdf(pr.lower[0] / pr.L(0, 0));
    double eps_hi = pr.upper[0] == pos_inf ? 1.0 : norm_cdf(pr.upper[0] / pr.L(0, 0));
    double product = eps_hi - eps_lo;
    if (product <= 0.0) return 0.0;
    double e_prev = eps_hi - eps_lo;
    double eps_prev = eps_lo;
    for (int j = 1; j < d; ++j) {
        double p = eps_prev + w[j - 1] * e_prev;
        p = std::min(1.0 - quantile_clamp, std::max(quantile_clamp, p));
        ybuf[j - 1] = norm_quantile(p);
        double shift = 0.0;
        for (int k = 0; k < j; ++k) shift += pr.L(j, k) * ybuf[k];
        const double lo =
            pr.lower[j] == neg_inf ? 0.0 : norm_cdf((pr.lower[j] - shift) / pr.L(j, j));
        const double hi =
            pr.upper[j] == pos_inf ? 1.0 : norm_cdf((pr.upper[j] - shift) / pr.L(j, j));
        const double ej = hi - lo;
        if (ej <= 0.0) return 0.0;
        product *= ej;
        eps_prev = lo;
        e_prev = ej;
    }
    return product;
}

} // namespace

ProbEstimate genz_bretz(const Rectangle& rect, const CholeskyFactor& chol,
                        const RqmcConfig& cfg) {
    const int d = rect.dim();
    if (chol.dim() != d) {
        throw std::invalid_argument("genz_bretz: dimension mismatch");
    }
    if (cfg.lattice_size < 2 || cfg.randomizations < 2) {
        throw std::invalid_argument("genz_bretz: requires P >= 2 and m >= 2");
    }
    if (d == 1) {
        const double v = cdf_or_limit(rect.bounds[0].upper) - cdf_or_limit(rect.bounds[0].lower);
        return {clamp01(v), 0.0, RectEngine::genz_bretz, 1};
    }
    const OrderedProblem pr = reorder_and_factor(rect, chol);
    if (pr.degenerate) return {0.0, 0.0, RectEngine::genz_bretz, 0};

    const int nvar = d - 1;
    const std::vector<double> alphas = richtmyer_alphas(nvar);
    const int P = cfg.lattice_size;
    const int m = cfg.randomizations;

    std::vector<double> shift(nvar), w(nvar), ybuf(nvar);
    std::vector<double> means(m);
    long evals = 0;
    for (int k = 0; k < m; ++k) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(k));
        for (int j = 0; j < nvar; ++j) shift[j] = rng.uniform();
        double acc = 0.0;
        for (int p = 1; p <= P; ++p) {
            for (int j = 0; j < nvar; ++j) {
                double intpart;
                const double frac = std::modf(p * alphas[j] + shift[j], &intpart);
                w[j] = std::fabs(2.0 * frac - 1.0);
            }
            acc += gb_integrand(pr, w.data(), d, ybuf);
            ++evals;
            if (cfg.antithetic) {
                for (int j = 0; j < nvar; ++j) w[j] = 1.0 - w[j];
                acc += gb_integrand(pr, w.data(), d, ybuf);
                ++evals;
            }
        }
        means[k] = acc / (cfg.antithetic ? 2.0 * P : static_cast<double>(P));
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= m;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= m - 1;
    return {clamp01(mean), std::sqrt(var / m), RectEngine::genz_bretz, evals};
}

ProbEstimate naive_mc(const Rectangle& rect, const CholeskyFactor& chol, int m,
                      std::uint64_t seed) {
    const int d = rect.dim();
    if (chol.dim() != d) throw std::invalid_argument("naive_mc: dimension mismatch");
    if (m < 100) throw std::invalid_argument("naive_mc: m must be >= 100");
    Rng rng(substream_key(seed, 0));
    Eigen::VectorXd g(d), z(d);
    long hits = 0;
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < d; ++j) g[j] = rng.normal();
        z.noalias() = chol.lower.template triangularView<Eigen::Lower>() * g;
        bool inside = true;
        for (int j = 0; j < d; ++j) {
            if (!(z[j] > rect.bounds[j].lower && z[j] < rect.bounds[j].upper)) {
                inside = false;
                break;
            }
        }
        if (inside) ++hits;
    }
    const double p = static_cast<double>(hits) / m;
    return {p, std::sqrt(p * (1.0 - p) / m), RectEngine::naive_mc, m};
}

ProbEstimate mf_importance(const Rectangle& rect, const Eigen::MatrixXd& R, int m,
                           std::uint64_t seed) {
    const int d = rect.dim();
    if (R.rows() != d || R.cols() != d) {
        throw std::invalid_argument("mf_importance: dimension mismatch");
    }
    if (m < 100) throw std::invalid_argument("mf_importance: m must be >= 100");
    std::vector<double> plo(d), phi_(d);
    double log_mass = 0.0;
    for (int j = 0; j < d; ++j) {
        plo[j] = cdf_or_limit(rect.bounds[j].lower);
        phi_[j] = cdf_or_limit(rect.bounds[j].upper);
        const double mass = phi_[j] - plo[j];
        if (!(mass > 0.0)) return {0.0, 0.0, RectEngine::mf_importance, 0};
        log_mass += std::log(mass);
    }
    const CholeskyFactor L = cholesky(R);
    double log_sqrt_det = 0.0;
    for (int j = 0; j < d; ++j) log_sqrt_det += std::log(L.lower(j, j));

    Rng rng(substream_key(seed, 0));
    Eigen::VectorXd q(d), s(d);
    std::vector<double> weights(m);
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        double qq = 0.0;
        for (int j = 0; j < d; ++j) {
            const double omega = plo[j] + rng.uniform() * (phi_[j] - plo[j]);
            q[j] = norm_quantile(std::min(1.0 - quantile_clamp, std::max(quantile_clamp, omega)));
            qq += q[j] * q[j];
        }
        s = L.lower.template triangularView<Eigen::Lower>().solve(q);
        const double logw = -log_sqrt_det + 0.5 * (qq - s.squaredNorm()) + log_mass;
        weights[k] = std::exp(logw);
        sum += weights[k];
    }
    const double mean = sum / m;
    double var = 0.0;
    for (double wgt : weights) var += (wgt - mean) * (wgt - mean);
    var /= m - 1;
    return {mean, std::sqrt(var / m), RectEngine::mf_importance, m};
}

} // namespace copreg
