#include "copreg/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "copreg/asymptotics.hpp"
#include "copreg/datagen.hpp"
#include "copreg/estimate.hpp"
#include "copreg/rng.hpp"

namespace copreg {

namespace {

std::string fmt(double v) { return format_num(v, 6); }

/* ---- rectprob -------------------------------------------------------------- */

Table rectprob_table(const Config& cfg) {
    const auto ds = cfg.get_list("d", {5, 10, 20});
    const auto as = cfg.get_list("a", {1, 2, 4});
    const auto rhos = cfg.get_list("rho", {0.3, 0.6, 0.8});
    const auto engines = cfg.get_str_list("engines", {"exch1d", "gb", "mf", "naive"});
    const long m_mf = cfg.get_int("m_mf", 1000);
    const long m_naive = cfg.get_int("m_naive", 10000);
    const std::uint64_t seed = cfg.get_seed(20260809);
    RqmcConfig rqmc;
    rqmc.lattice_size = static_cast<int>(cfg.get_int("lattice", rqmc.lattice_size));
    rqmc.randomizations = static_cast<int>(cfg.get_int("shifts", rqmc.randomizations));
    rqmc.seed = seed;

    Table t;
    t.columns = {"engine", "d", "a", "rho", "m", "estimate", "sd"};
    std::uint64_t cell = 0;
    for (double dv : ds) {
        const int d = static_cast<int>(dv);
        for (double a : as) {
            for (double rho : rhos) {
                const Rectangle rect = Rectangle::centered(d, a);
                const Eigen::MatrixXd R =
                    build_matrix(CorrelationStructure::exchangeable(d, rho));
                for (const auto& engine : engines) {
                    ++cell;
                    ProbEstimate est;
                    long m_used = 0;
                    if (engine == "exch1d") {
                        est = exchangeable_1d(rect, rho);
                    } else if (engine == "gb") {
                        RqmcConfig rc = rqmc;
                        rc.seed = substream_key(seed, cell);
                        est = genz_bretz(rect, cholesky(R), rc);
                    } else if (engine == "mf") {
                        m_used = m_mf;
                        est = mf_importance(rect, R, static_cast<int>(m_mf),
                                            substream_key(seed, cell));
                    } else if (engine == "naive") {
                        m_used = m_naive;
                        est = naive_mc(rect, cholesky(R), static_cast<int>(m_naive),
                                       substream_key(seed, cell));
                    } else {
                        throw config_error("rectprob: unknown engine: " + engine);
                    }
                    t.add_row({engine, std::to_string(d), fmt(a), fmt(rho),
                               std::to_string(m_used), fmt(est.value), fmt(est.std_error)});
                }
            }
        }
    }
    return t;
}

/* ---- asymlimit ------------------------------------------------------------- */

ModelSpec asym_spec(const std::string& family) {
    if (family == "logistic") {
        return {MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
    }
    if (family == "nb2") return {MarginalFamily::nb2, CorrelationKind::exchangeable};
    throw config_error("asymlimit: family must be logistic or nb2");
}

Table asymlimit_table(const Config& cfg) {
    const std::string family = cfg.get_str("family", "logistic");
    const ModelSpec spec = asym_spec(family);
    const bool nb = spec.family == MarginalFamily::nb2;
    const auto ds = cfg.get_list("d", nb ? std::vector<double>{2, 3}
                                         : std::vector<double>{2, 5, 10});
    const auto rhos = cfg.get_list("rho", {0.3, 0.6, 0.8});
    Theta truth;
    truth.beta = Eigen::Vector2d(cfg.get_num("beta0", -0.5), cfg.get_num("beta1", 0.5));
    if (nb) truth.gamma = cfg.get_num("gamma", 0.5);
    const int trunc = static_cast<int>(cfg.get_int("trunc", 10));
    const bool with_msle = cfg.get_bool("msle", true);
    const bool with_se = cfg.get_bool("se", true);
    const int n_ref = static_cast<int>(cfg.get_int("n_ref", 100));
    RqmcConfig rqmc;
    rqmc.lattice_size = static_cast<int>(cfg.get_int("lattice", 509));
    rqmc.seed = cfg.get_seed(20260809);

    Table t;
    t.columns = {"d", "rho"};
    for (const auto& base :
         {std::string("hr_"), std::string("msle_")}) {
        t.columns.push_back(base + "beta0");
        t.columns.push_back(base + "beta1");
        if (nb) t.columns.push_back(base + "gamma");
        t.columns.push_back(base + "rho");
    }
    for (const auto& base : {std::string("se_ml_"), std::string("se_hr_")}) {
        t.columns.push_back(base + "beta0");
        t.columns.push_back(base + "beta1");
        if (nb) t.columns.push_back(base + "gamma");
        t.columns.push_back(base + "rho");
    }

    for (double dv : ds) {
        const int d = static_cast<int>(dv);
        for (double rho : rhos) {
            Theta th = truth;
            th.rho = rho;
            const CaseEnumeration cases = enumerate_cases(spec, th, d, {}, trunc);
            const LimitResult hr = limiting_hrmle(cases);
            std::vector<std::string> row{std::to_string(d), fmt(rho)};
            for (int k = 0; k < hr.estimates.size(); ++k) row.push_back(fmt(hr.estimates[k]));
            if (with_msle) {
                const LimitResult msle = limiting_msle(cases, rqmc);
                for (int k = 0; k < msle.estimates.size(); ++k) {
                    row.push_back(fmt(msle.estimates[k]));
                }
            } else {
                for (int k = 0; k < hr.estimates.size(); ++k) row.push_back("");
            }
            if (with_se) {
                // printed SEs: one full response enumeration of information
                // per covariate value, so the reference n doubles
                const int n_eff = n_ref * 2;
                const Objective ml_obj = natural_limit_objective(cases, false);
                const Eigen::VectorXd se_ml =
                    limiting_se(ml_obj, pack_natural(th, spec), n_eff);
                const Objective hr_obj = natural_limit_objective(cases, true);
                const Eigen::VectorXd se_hr =
                    limiting_se(hr_obj, pack_natural(hr.theta, spec), n_eff);
                for (int k = 0; k < se_ml.size(); ++k) row.push_back(fmt(se_ml[k]));
                for (int k = 0; k < se_hr.size(); ++k) row.push_back(fmt(se_hr[k]));
            } else {
                for (int k = 0; k < 2 * hr.estimates.size(); ++k) row.push_back("");
            }
            t.add_row(std::move(row));
        }
    }
    return t;
}

/* ---- simstudy -------------------------------------------------------------- */

struct StudyDesign {
    SimDesign sim;
    RectEngine ml_engine = RectEngine::exchangeable_1d;
};

StudyDesign study_design(const Config& cfg) {
    const std::string name = cfg.get_str("design", "table6");
    StudyDesign sd;
    if (name == "table6") {
        sd.sim.n = 100;
        sd.sim.d = 2;
        sd.sim.spec = {MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
        sd.sim.truth.beta = Eigen::Vector2d(-0.5, 0.5);
        sd.sim.truth.rho = 0.5;
        sd.ml_engine = RectEngine::exchangeable_1d;
    } else if (name == "table7") {
        sd.sim.n = 100;
        sd.sim.d = 5;
        sd.sim.spec = {MarginalFamily::nb2, CorrelationKind::ar1};
        sd.sim.truth.beta = Eigen::Vector2d(-0.5, 0.5);
        sd.sim.truth.gamma = 2.0;
        sd.sim.truth.rho = 0.8;
        sd.ml_engine = RectEngine::genz_bretz;
    } else if (name == "custom") {
        sd.sim.n = static_cast<int>(cfg.get_int("n", 100));
        sd.sim.d = static_cast<int>(cfg.get_int("cluster_d", 2));
        sd.sim.spec.family = marginal_family_from_name(cfg.require_str("family"));
        sd.sim.spec.structure = correlation_kind_from_name(cfg.get_str("structure", "exch"));
        sd.sim.truth.beta =
            Eigen::Vector2d(cfg.get_num("beta0", -0.5), cfg.get_num("beta1", 0.5));
        if (has_dispersion(sd.sim.spec.family)) {
            sd.sim.truth.gamma = cfg.get_num("gamma", 1.0);
        }
        sd.sim.truth.rho = cfg.get_num("rho", 0.5);
        sd.ml_engine = sd.sim.spec.structure == CorrelationKind::exchangeable
                           ? RectEngine::exchangeable_1d
                           : RectEngine::genz_bretz;
    } else {
        throw config_error("simstudy: design must be table6, table7, or custom");
    }
    return sd;
}

Table simstudy_jitter_mode(const Config& cfg, const StudyDesign& sd) {
    const int sets = static_cast<int>(cfg.get_int("sets", 5));
    const int m = static_cast<int>(cfg.get_int("m", 100));
    const std::uint64_t seed = cfg.get_seed(20260809);
    const std::uint64_t data_seed = cfg.get_int("data_seed", 1);

    SimDesign design = sd.sim;
    design.seed = data_seed;
    const Dataset data = simulate(design);
    const int d_max = design.d;

    Table t;
    t.columns = {"set", "method", "m"};
    ParamTransform probe(static_cast<int>(design.truth.beta.size()),
                         has_dispersion(design.spec.family), true, 0, 1);
    for (const auto& n : probe.names()) t.columns.push_back(n);

    SlConfig ml_cfg{sd.ml_engine, {}};
    ml_cfg.rqmc.seed = substream_key(seed, 999);
    const FitResult ml = fit_sl(data, design.spec, ml_cfg);
    {
        std::vector<std::string> row{"-", sd.ml_engine == RectEngine::exchangeable_1d
                                              ? "ml" : "sl",
                                     "0"};
        for (int k = 0; k < ml.estimates.size(); ++k) row.push_back(fmt(ml.estimates[k]));
        t.add_row(std::move(row));
    }
    for (int s = 0; s < sets; ++s) {
        const JitterSet jit(m, design.n, d_max, substream_key(seed, s + 1));
        const FitResult hr = fit_hr(data, design.spec, jit);
        const FitResult mf = fit_mf(data, design.spec, jit);
        std::vector<std::string> row_hr{std::to_string(s + 1), "hr", std::to_string(m)};
        std::vector<std::string> row_mf{std::to_string(s + 1), "mf", std::to_string(m)};
        for (int k = 0; k < hr.estimates.size(); ++k) row_hr.push_back(fmt(hr.estimates[k]));
        for (int k = 0; k < mf.estimates.size(); ++k) row_mf.push_back(fmt(mf.estimates[k]));
        t.add_row(std::move(row_hr));
        t.add_row(std::move(row_mf));
    }
    return t;
}

Table simstudy_table(const Config& cfg) {
    const StudyDesign sd = study_design(cfg);
    if (cfg.get_str("mode", "study") == "jitters") return simstudy_jitter_mode(cfg, sd);

    const int R = static_cast<int>(cfg.get_int("replications", 500));
    const int m = static_cast<int>(cfg.get_int("m", 100));
    const auto methods = cfg.get_str_list("methods", {"ml", "hr"});
    const std::uint64_t seed = cfg.get_seed(20260809);
    RqmcConfig sl_rqmc;
    sl_rqmc.lattice_size = static_cast<int>(cfg.get_int("lattice", 64));
    sl_rqmc.randomizations = static_cast<int>(cfg.get_int("shifts", 5));

    const SimDesign& base = sd.sim;
    const int n_par = static_cast<int>(base.truth.beta.size()) +
                      (has_dispersion(base.spec.family) ? 1 : 0) + 1;
    const Eigen::VectorXd truth_vec = pack_natural(base.truth, base.spec);

    struct Accum {
        Eigen::VectorXd sum, sumsq, var_sum;
        long used = 0, var_used = 0;
    };
    std::map<std::string, Accum> acc;
    for (const auto& meth : methods) {
        acc[meth] = {Eigen::VectorXd::Zero(n_par), Eigen::VectorXd::Zero(n_par),
                     Eigen::VectorXd::Zero(n_par), 0, 0};
    }

    for (int r = 0; r < R; ++r) {
        SimDesign design = base;
        design.seed = substream_key(seed, 2 * r);
        const Dataset data = simulate(design);
        const std::uint64_t rep_key = substream_key(seed, 2 * r + 1);
        for (const auto& meth : methods) {
            FitResult fit;
            try {
                if (meth == "ml" || meth == "sl") {
                    SlConfig c{sd.ml_engine, sl_rqmc};
                    c.rqmc.seed = substream_key(rep_key, 0);
                    fit = fit_sl(data, base.spec, c);
                } else if (meth == "hr") {
                    const JitterSet jit(m, base.n, base.d, substream_key(rep_key, 1));
                    fit = fit_hr(data, base.spec, jit);
                } else if (meth == "mf") {
                    const JitterSet jit(m, base.n, base.d, substream_key(rep_key, 1));
                    fit = fit_mf(data, base.spec, jit);
                } else {
                    throw config_error("simstudy: unknown method: " + meth);
                }
            } catch (const std::exception&) {
                continue;  // failed replication: logged via counts
            }
            if (!fit.converged) continue;
            auto& a = acc[meth];
            a.sum += fit.estimates;
            a.sumsq += fit.estimates.cwiseProduct(fit.estimates);
            ++a.used;
            if (fit.std_errors) {
                a.var_sum += fit.std_errors->cwiseProduct(*fit.std_errors);
                ++a.var_used;
            }
        }
    }

    ParamTransform probe(static_cast<int>(base.truth.beta.size()),
                         has_dispersion(base.spec.family), true, 0, 1);
    const auto names = probe.names();
    Table t;
    t.columns = {"method", "m", "parameter", "truth", "mean", "n_bias",
                 "n_var", "n_mse", "n_vbar", "replications"};
    const double n = static_cast<double>(base.n);
    for (const auto& meth : methods) {
        const auto& a = acc.at(meth);
        if (a.used == 0) continue;
        const Eigen::VectorXd mean = a.sum / a.used;
        for (int k = 0; k < n_par; ++k) {
            const double bias = mean[k] - truth_vec[k];
            const double var = a.sumsq[k] / a.used - mean[k] * mean[k];
            const double mse = var + bias * bias;
            const double vbar = a.var_used > 0 ? a.var_sum[k] / a.var_used : 0.0;
            t.add_row({meth, std::to_string(meth == "ml" ? 0 : m), names[k],
                       fmt(truth_vec[k]), fmt(mean[k]), fmt(n * bias), fmt(n * var),
                       fmt(n * mse), fmt(n * vbar), std::to_string(a.used)});
        }
    }
    return t;
}

/* ---- fit ------------------------------------------------------------------- */

Table fit_table(const Config& cfg, std::istream& in) {
    std::vector<std::string> cov_names;
    const Dataset data = read_longitudinal_csv(in, &cov_names);
    const MarginalFamily family = marginal_family_from_name(
        cfg.get_str("family", "bernoulli-logit"));
    const CorrelationKind structure =
        correlation_kind_from_name(cfg.get_str("structure", "exch"));
    if (structure == CorrelationKind::markov && !data.front().times) {
        throw data_error("fit: markov structure requires a time column");
    }
    const ModelSpec spec{family, structure};

    SlConfig cfg_sl;
    const std::string engine = cfg.get_str("engine", "auto");
    if (engine == "auto") {
        cfg_sl.engine = structure == CorrelationKind::exchangeable
                            ? RectEngine::exchangeable_1d
                            : RectEngine::genz_bretz;
    } else if (engine == "exch1d") {
        cfg_sl.engine = RectEngine::exchangeable_1d;
    } else if (engine == "gb") {
        cfg_sl.engine = RectEngine::genz_bretz;
    } else {
        throw config_error("fit: engine must be auto, exch1d, or gb");
    }
    cfg_sl.rqmc.lattice_size = static_cast<int>(cfg.get_int("lattice", 127));
    cfg_sl.rqmc.randomizations = static_cast<int>(cfg.get_int("shifts", 10));
    cfg_sl.rqmc.seed = cfg.get_seed(20260809);

    FitResult fit;
    try {
        fit = fit_sl(data, spec, cfg_sl);
    } catch (const validation_error& e) {
        throw data_error(e.what());  // identifiability is a data problem here
    }
    if (!fit.converged) {
        throw std::runtime_error("fit: optimizer did not converge");
    }

    Table t;
    t.columns = {"parameter", "estimate", "std_error"};
    std::vector<std::string> labels{"intercept"};
    for (const auto& c : cov_names) labels.push_back(c);
    if (fit.theta.gamma) labels.push_back("gamma");
    labels.push_back("rho");
    for (int k = 0; k < fit.estimates.size(); ++k) {
        t.add_row({k < static_cast<int>(labels.size()) ? labels[k] : fit.names[k],
                   fmt(fit.estimates[k]),
                   fit.std_errors ? fmt((*fit.std_errors)[k]) : ""});
    }
    t.add_row({"loglik", fmt(fit.loglik), ""});
    t.add_row({"engine", fit.engine, ""});
    t.add_row({"converged", fit.converged ? "yes" : "no", ""});
    t.add_row({"floored_clusters", std::to_string(fit.floored_clusters), ""});
    return t;
}

} // namespace

Table run_rectprob(const Config& cfg) { return rectprob_table(cfg); }
Table run_asymlimit(const Config& cfg) { return asymlimit_table(cfg); }
Table run_simstudy(const Config& cfg) { return simstudy_table(cfg); }
Table run_fit(const Config& cfg, std::istream& in) { return fit_table(cfg, in); }

int run_command(const std::string& name, const Config& cfg, std::ostream& log) {
    try {
        Table t;
        if (name == "rectprob") {
            t = run_rectprob(cfg);
        } else if (name == "asymlimit") {
            t = run_asymlimit(cfg);
        } else if (name == "simstudy") {
            t = run_simstudy(cfg);
        } else if (name == "fit") {
            const std::string path = cfg.require_str("data");
            std::ifstream in(path);
            if (!in) throw data_error("fit: cannot open data file: " + path);
            t = run_fit(cfg, in);
        } else {
            throw config_error("unknown subcommand: " + name);
        }
        const std::string out_path = cfg.get_str("out", "");
        const std::string comment = "config_hash=" + cfg.hash();
        if (!out_path.empty()) {
            std::ofstream out(out_path);
            if (!out) throw data_error("cannot open output file: " + out_path);
            write_csv(out, t, comment);
        } else {
            write_csv(std::cout, t, comment);
        }
        log << render_aligned(t);
        return exit_ok;
    } catch (const config_error& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const validation_error& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const data_error& e) {
        log << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
}

} // namespace copreg
