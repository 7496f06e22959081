// kelly: asymptotic growth and risk of fixed-fraction betting strategies.
//
// Subcommands: analyze, optimize, simulate, first-passage, hf-converge,
// ct-asymptotics, verify. All stochastic commands require a base seed
// (--seed, config file, or KELLY_SEED); identical configs produce
// byte-identical outputs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kelly/empirics.hpp"
#include "kelly/hf_compound.hpp"
#include "kelly/model_json.hpp"
#include "kelly/optimize.hpp"
#include "kelly/parallel.hpp"

namespace {

using kelly::json;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string config_path;
    unsigned threads = 0;
    json config;  // file values; flags override
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    json j;
    in >> j;
    return j;
}

std::uint64_t require_seed(const GlobalOpts& g) {
    if (g.seed) return *g.seed;
    if (g.config.contains("seed")) return g.config.at("seed").get<std::uint64_t>();
    if (const char* env = std::getenv("KELLY_SEED")) return std::strtoull(env, nullptr, 10);
    throw CLI::ValidationError("--seed", "a base seed is required for stochastic commands");
}

void emit(const GlobalOpts& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + g.out);
    out << text;
}

void emit_json(const GlobalOpts& g, const json& j) { emit(g, j.dump(2) + "\n"); }

std::vector<double> parse_grid(const std::string& spec) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
        throw CLI::ValidationError("--grid", "expected lo:hi:step with positive step");
    if (lo < 0.0 || hi > 1.0 - 1e-9 + 1e-15 || hi < lo)
        throw CLI::ValidationError("--grid", "grid must stay inside [0, 1-1e-9]");
    std::vector<double> grid;
    const int count = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
    for (int i = 0; i < count; ++i) {
        const double f = lo + i * step;
        if (f > hi + 0.5 * step) break;
        grid.push_back(std::min(f, 1.0 - 1e-9));
    }
    if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
    return grid;
}

// model flags shared by simulate / ct-asymptotics
struct CtFlags {
    double mu = 0.0, sigma = 0.0, sigma2 = 0.0, a = 0.0, b = 0.0;
    double kappa = 0.0, beta = 0.0, rho = 0.0, r0 = 0.0, bigM = 0.0;
};

kelly::CtModel ct_model_from_flags(const std::string& name, const CtFlags& f) {
    kelly::CtModel m;
    if (name == "gbm") m = kelly::Gbm{f.mu, f.sigma};
    else if (name == "vasicek") m = kelly::VasicekRate{f.a, f.b, f.mu, f.sigma, f.rho};
    else if (name == "cir") m = kelly::CirRate{f.a, f.b, f.mu, f.sigma, f.rho};
    else if (name == "heston") m = kelly::HestonVol{f.mu, f.kappa, f.sigma2, f.beta, f.rho};
    else if (name == "logistic-rate") m = kelly::LogisticRate{f.a, f.b, f.mu, f.sigma, f.r0};
    else if (name == "logistic-price") m = kelly::LogisticPrice{f.mu, f.bigM, f.sigma};
    else throw CLI::ValidationError("--model", "unknown continuous-time model " + name);
    kelly::validate(m);
    return m;
}

json resolved_config_echo(const GlobalOpts& g, json cmd) {
    if (!g.config.is_null() && g.config.is_object()) cmd["config_file"] = g.config_path;
    return cmd;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotic growth, risk and limit-theorem checks for fixed-fraction betting"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base seed (env KELLY_SEED)");
    app.add_option("--out", g.out, "output path (default stdout)");
    app.add_option("--threads", g.threads, "worker thread cap");
    app.add_option("--config", g.config_path, "JSON config file; flags override its values");

    // analyze -----------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "risk-profile curve as CSV");
    std::string an_model, an_grid = "0:0.99:0.01", an_force;
    double an_gamma = 1.0;
    std::size_t an_mc_samples = 1'000'000;
    analyze->add_option("--model", an_model, "bernoulli:p | squared_cauchy | squared_t3")->required();
    analyze->add_option("--grid", an_grid, "f grid lo:hi:step");
    analyze->add_option("--gamma", an_gamma, "ridge risk aversion");
    analyze->add_option("--force-estimator", an_force, "closed_form|quadrature|monte_carlo");
    analyze->add_option("--mc-samples", an_mc_samples, "Monte Carlo sample count");

    // optimize ----------------------------------------------------------
    auto* optimize = app.add_subcommand("optimize", "optimal fractions as a JSON StrategyReport");
    std::string op_model, op_criterion = "kelly";
    double op_gamma = 1.0, op_v0 = 0.0;
    optimize->add_option("--model", op_model)->required();
    optimize->add_option("--criterion", op_criterion, "kelly|ridge|sharpe|variance-capped");
    optimize->add_option("--gamma", op_gamma, "ridge gamma");
    optimize->add_option("--v0", op_v0, "variance cap");

    // simulate ----------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "simulate returns or wealth paths");
    std::string si_model;
    CtFlags si;
    double si_p = 0.0, si_q = 0.0, si_f = 0.5, si_t = 100.0, si_dt = 1e-3, si_ar_a = 0.0;
    std::size_t si_n = 0;
    simulate->add_option("--model", si_model,
                         "bernoulli:p | chain | ar1 | gbm | vasicek | cir | heston | "
                         "logistic-rate | logistic-price")->required();
    simulate->add_option("--p", si_p, "chain: P(+1|+1)");
    simulate->add_option("--q", si_q, "chain: P(-1|-1)");
    simulate->add_option("--a", si.a, "mean-reversion / AR coefficient");
    simulate->add_option("--ar-a", si_ar_a, "AR(1) coefficient");
    simulate->add_option("--b", si.b, "coefficient diffusion");
    simulate->add_option("--mu", si.mu);
    simulate->add_option("--sigma", si.sigma);
    simulate->add_option("--sigma2", si.sigma2);
    simulate->add_option("--kappa", si.kappa);
    simulate->add_option("--beta", si.beta);
    simulate->add_option("--rho", si.rho, "Brownian correlation");
    simulate->add_option("--r0", si.r0, "logistic-rate start");
    simulate->add_option("--M", si.bigM, "logistic-price carrying capacity");
    simulate->add_option("--f", si_f, "betting fraction");
    simulate->add_option("--n", si_n, "steps (discrete models)");
    simulate->add_option("--t", si_t, "horizon (continuous models)");
    simulate->add_option("--dt", si_dt, "step size (continuous models)");

    // first-passage -----------------------------------------------------
    auto* fp = app.add_subcommand("first-passage", "inverse-Gaussian law / simulated passages");
    double fp_mu = 0.0, fp_sigma = 0.0, fp_f = 0.5, fp_w = 0.0, fp_dt = 1e-2;
    std::size_t fp_reps = 10'000;
    std::string fp_mode = "law";
    fp->add_option("--mu", fp_mu)->required();
    fp->add_option("--sigma", fp_sigma)->required();
    fp->add_option("--f", fp_f);
    fp->add_option("--w", fp_w, "wealth target > 1")->required();
    fp->add_option("--mode", fp_mode, "law|simulate");
    fp->add_option("--reps", fp_reps);
    fp->add_option("--dt", fp_dt);

    // hf-converge -------------------------------------------------------
    auto* hf = app.add_subcommand("hf-converge", "f_n* convergence study as CSV");
    double hf_mu = 0.02, hf_sigma2 = 0.04, hf_horizon = 200.0;
    std::string hf_ns = "4,16,64,256", hf_driver = "twopoint:0.2", hf_kind = "geometric";
    std::size_t hf_reps = 16;
    hf->add_option("--mu", hf_mu);
    hf->add_option("--sigma2", hf_sigma2);
    hf->add_option("--n", hf_ns, "comma-separated step frequencies");
    hf->add_option("--driver", hf_driver, "gaussian | twopoint:p | ar1:a");
    hf->add_option("--kind", hf_kind, "geometric|arithmetic");
    hf->add_option("--horizon", hf_horizon, "averaging horizon for g_n");
    hf->add_option("--reps", hf_reps);

    // ct-asymptotics ----------------------------------------------------
    auto* ct = app.add_subcommand("ct-asymptotics", "closed-form g_R, v_R, f*, f_Ri as JSON");
    std::string ct_model_name;
    CtFlags ctf;
    double ct_gamma = 0.0;
    ct->add_option("--model", ct_model_name)->required();
    ct->add_option("--a", ctf.a);
    ct->add_option("--b", ctf.b);
    ct->add_option("--mu", ctf.mu);
    ct->add_option("--sigma", ctf.sigma);
    ct->add_option("--sigma2", ctf.sigma2);
    ct->add_option("--kappa", ctf.kappa);
    ct->add_option("--beta", ctf.beta);
    ct->add_option("--rho", ctf.rho);
    ct->add_option("--r0", ctf.r0);
    ct->add_option("--M", ctf.bigM);
    ct->add_option("--gamma", ct_gamma);

    // verify --------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run a statistical suite from a JSON config");
    std::string ve_suite;
    verify->add_option("--suite", ve_suite, "lln|clt|renewal|gamma-limit")->required();

    for (auto* sub : {analyze, optimize, simulate, fp, hf, ct, verify}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g.config_path.empty()) g.config = load_config(g.config_path);
        if (g.threads > 0) kelly::set_thread_cap(g.threads);

        if (*analyze) {
            const auto model = kelly::parse_return_model(an_model);
            const auto grid = parse_grid(an_grid);
            kelly::EvalOptions opt;
            opt.mc.samples = an_mc_samples;
            if (!an_force.empty()) {
                if (an_force == "closed_form") opt.force = kelly::Estimator::closed_form;
                else if (an_force == "quadrature") opt.force = kelly::Estimator::quadrature;
                else if (an_force == "monte_carlo") opt.force = kelly::Estimator::monte_carlo;
                else throw CLI::ValidationError("--force-estimator", "unknown estimator " + an_force);
            }
            if (opt.force == kelly::Estimator::monte_carlo || g.seed) opt.mc.seed = require_seed(g);
            const auto rows = kelly::risk_curve(model, grid, an_gamma, opt);
            std::ostringstream os;
            kelly::write_curve_csv(os, rows);
            emit(g, os.str());
        } else if (*optimize) {
            const auto model = kelly::parse_return_model(op_model);
            kelly::EvalOptions opt;
            if (g.seed) opt.mc.seed = *g.seed;
            kelly::StrategyReport rep;
            if (op_criterion == "kelly") rep = kelly::kelly_fraction(model, opt);
            else if (op_criterion == "ridge") rep = kelly::ridge_fraction(model, op_gamma, opt);
            else if (op_criterion == "sharpe") rep = kelly::sharpe_fraction(model, opt);
            else if (op_criterion == "variance-capped")
                rep = kelly::variance_capped_fraction(model, op_v0, opt);
            else throw CLI::ValidationError("--criterion", "unknown criterion " + op_criterion);
            json j = kelly::strategy_report_to_json(rep);
            j["model"] = kelly::return_model_to_json(model);
            j["config"] = resolved_config_echo(
                g, {{"criterion", op_criterion}, {"gamma", op_gamma}, {"v0", op_v0}});
            kelly::validate_schema(j, "strategy_report");
            emit_json(g, j);
        } else if (*simulate) {
            const std::uint64_t seed = require_seed(g);
            if (si_model == "chain") {
                if (si_n == 0) throw CLI::ValidationError("--n", "chain simulation needs --n");
                kelly::TwoStateChain chain(si_p, si_q);
                const auto series = kelly::simulate_chain(chain, si_n, seed);
                std::ostringstream os;
                os << "r\n";
                for (double r : series) os << kelly::format_full(r) << '\n';
                emit(g, os.str());
                std::vector<double> logr(series.size());
                for (std::size_t i = 0; i < series.size(); ++i)
                    logr[i] = std::log1p(si_f * series[i]);
                const auto bm = kelly::batch_means_variance(logr);
                const auto closed = kelly::chain_longrun_variance(chain, si_f);
                json summary{{"schema", kelly::kSchemaVersion},
                             {"mean", kelly::sample_mean(series)},
                             {"f", si_f},
                             {"batch_means_vtilde", bm.v_tilde},
                             {"batch_means_block", bm.block_length},
                             {"batch_means_se", *bm.std_error},
                             {"closed_form_vtilde", closed.v_tilde},
                             {"config", resolved_config_echo(g, {{"model", "chain"},
                                                                 {"p", si_p},
                                                                 {"q", si_q},
                                                                 {"n", si_n},
                                                                 {"seed", seed}})}};
                std::cerr << summary.dump(2) << "\n";
            } else if (si_model == "ar1") {
                if (si_n == 0) throw CLI::ValidationError("--n", "ar1 simulation needs --n");
                const double a = si_ar_a != 0.0 ? si_ar_a : si.a;
                const auto proc = kelly::Ar1Process::standardized_gaussian(a);
                const auto series = kelly::simulate_ar1(proc, si_n, seed);
                std::ostringstream os;
                os << "r\n";
                for (double r : series) os << kelly::format_full(r) << '\n';
                emit(g, os.str());
                const auto bm = kelly::batch_means_variance(series);
                json summary{{"schema", kelly::kSchemaVersion},
                             {"mean", kelly::sample_mean(series)},
                             {"batch_means_vtilde", bm.v_tilde},
                             {"rho_sq_closed_form", proc.rho_sq()}};
                std::cerr << summary.dump(2) << "\n";
            } else if (si_model.rfind("bernoulli", 0) == 0 || si_model == "squared_cauchy" ||
                       si_model == "squared_t3" || (!si_model.empty() && si_model[0] == '{')) {
                if (si_n == 0) throw CLI::ValidationError("--n", "return sampling needs --n");
                const auto model = kelly::parse_return_model(si_model);
                const auto xs = model.sample(seed, si_n);
                std::ostringstream os;
                os << "r\n";
                for (double x : xs) os << kelly::format_full(x) << '\n';
                emit(g, os.str());
            } else {
                const auto model = ct_model_from_flags(si_model, si);
                const auto path = kelly::simulate_ct(model, si_f, si_t, si_dt, seed);
                std::ostringstream os;
                os << "t,r,v,logW\n";
                for (std::size_t k = 0; k < path.time.size(); ++k)
                    os << kelly::format_full(path.time[k]) << ',' << kelly::format_full(path.r[k])
                       << ',' << kelly::format_full(path.v[k]) << ','
                       << kelly::format_full(path.logw[k]) << '\n';
                emit(g, os.str());
                for (const auto& w : path.warnings) std::cerr << "warning: " << w << "\n";
                if (path.burn_in > 0.0)
                    std::cerr << "note: path re-based after a burn-in of " << path.burn_in
                              << " time units\n";
            }
        } else if (*fp) {
            kelly::Gbm model{fp_mu, fp_sigma};
            if (fp_mode == "law") {
                const auto law = kelly::first_passage_law(model, fp_f, fp_w);
                json j{{"schema", kelly::kSchemaVersion},
                       {"w", law.w},
                       {"g", law.growth},
                       {"v", law.variance_rate},
                       {"mean", law.mean},
                       {"variance", law.variance},
                       {"config", resolved_config_echo(g, {{"mu", fp_mu},
                                                           {"sigma", fp_sigma},
                                                           {"f", fp_f},
                                                           {"w", fp_w}})}};
                emit_json(g, j);
            } else if (fp_mode == "simulate") {
                const std::uint64_t seed = require_seed(g);
                const auto tau = kelly::first_passage_simulate(model, fp_f, fp_w, fp_reps, seed, fp_dt);
                std::ostringstream os;
                os << "tau\n";
                for (double t : tau) os << kelly::format_full(t) << '\n';
                emit(g, os.str());
                const auto law = kelly::first_passage_law(model, fp_f, fp_w);
                json summary{{"schema", kelly::kSchemaVersion},
                             {"empirical_mean", kelly::sample_mean(tau)},
                             {"empirical_variance", kelly::sample_variance(tau)},
                             {"law_mean", law.mean},
                             {"law_variance", law.variance},
                             {"seed", seed}};
                std::cerr << summary.dump(2) << "\n";
            } else {
                throw CLI::ValidationError("--mode", "unknown mode " + fp_mode);
            }
        } else if (*hf) {
            const std::uint64_t seed = require_seed(g);
            kelly::HfDriver driver = kelly::GaussianDriver{};
            if (hf_driver.rfind("twopoint:", 0) == 0)
                driver = kelly::TwoPointDriver{std::stod(hf_driver.substr(9))};
            else if (hf_driver.rfind("ar1:", 0) == 0)
                driver = kelly::Ar1Driver{std::stod(hf_driver.substr(4))};
            else if (hf_driver != "gaussian")
                throw CLI::ValidationError("--driver", "unknown driver " + hf_driver);
            const kelly::HfKind kind = hf_kind == "arithmetic" ? kelly::HfKind::arithmetic
                                                               : kelly::HfKind::geometric;
            std::ostringstream os;
            os << "n,f_star,g_at_f_star,se\n";
            std::istringstream ns(hf_ns);
            std::string tok;
            std::size_t idx = 0;
            while (std::getline(ns, tok, ',')) {
                const long n = std::stol(tok);
                kelly::HfScheme scheme{hf_mu, std::sqrt(hf_sigma2), n, kind, driver};
                const double fstar = kelly::hf_kelly(scheme, kelly::derive_seed(seed, idx));
                const auto gn = kelly::hf_growth(scheme, fstar, hf_horizon, hf_reps,
                                                 kelly::derive_seed(seed, 1000 + idx));
                os << n << ',' << kelly::format_full(fstar) << ','
                   << kelly::format_full(gn.value) << ',' << kelly::format_full(gn.std_error)
                   << '\n';
                ++idx;
            }
            emit(g, os.str());
        } else if (*ct) {
            std::string name = ct_model_name;
            for (auto& c : name) if (c == '_') c = '-';
            const auto model = ct_model_from_flags(name, ctf);
            const auto asy = kelly::ct_asymptotics(model);
            const double f_ri = kelly::ct_ridge(model, ct_gamma);
            json j = kelly::ct_asymptotics_to_json(asy, ct_gamma, f_ri);
            j["model"] = kelly::ct_model_to_json(model);
            j["config"] = resolved_config_echo(g, {{"gamma", ct_gamma}});
            kelly::validate_schema(j, "ct_asymptotics");
            emit_json(g, j);
        } else if (*verify) {
            if (g.config.is_null())
                throw CLI::ValidationError("--config", "verify needs a JSON config file");
            const json& cfg = g.config;
            const std::uint64_t seed = require_seed(g);
            const double level = cfg.value("level", 1e-3);
            kelly::TestReport rep;
            const json& jm = cfg.at("model");
            const std::string kind = jm.at("kind").get<std::string>();
            const double f = cfg.value("f", 0.5);
            const std::size_t reps = cfg.value("replications", std::size_t{1000});
            if (ve_suite == "lln" || ve_suite == "clt") {
                if (kind == "chain") {
                    kelly::TwoStateChain chain(jm.at("p").get<double>(), jm.at("q").get<double>());
                    const std::size_t n = cfg.at("n").get<std::size_t>();
                    rep = ve_suite == "lln" ? kelly::lln_check(chain, f, n, reps, seed)
                                            : kelly::clt_check(chain, f, n, reps, seed, level);
                } else if (kind == "bernoulli" || kind == "squared_cauchy" || kind == "squared_t3") {
                    const auto model = kelly::return_model_from_json(jm);
                    const std::size_t n = cfg.at("n").get<std::size_t>();
                    rep = ve_suite == "lln" ? kelly::lln_check(model, f, n, reps, seed)
                                            : kelly::clt_check(model, f, n, reps, seed, level);
                } else {
                    const auto model = kelly::ct_model_from_json(jm);
                    const double t = cfg.value("t", 500.0);
                    const double dt = cfg.value("dt", 1e-2);
                    if (ve_suite == "lln")
                        throw CLI::ValidationError("--suite", "lln supports discrete models only");
                    rep = kelly::clt_check(model, f, t, dt, reps, seed, level);
                }
            } else if (ve_suite == "renewal") {
                const auto model = kelly::return_model_from_json(jm);
                std::vector<double> w_grid = cfg.at("w_grid").get<std::vector<double>>();
                rep = kelly::renewal_check(model, f, w_grid, reps, seed);
            } else if (ve_suite == "gamma-limit") {
                const auto model = kelly::ct_model_from_json(jm);
                const double t = cfg.value("t", 200.0);
                const double dt = cfg.value("dt", 1e-3);
                rep = kelly::gamma_limit_check(std::get<kelly::LogisticPrice>(model), f, t, dt,
                                               reps, seed, level);
            } else {
                throw CLI::ValidationError("--suite", "unknown suite " + ve_suite);
            }
            json j = kelly::test_report_to_json(rep);
            j["config"] = cfg;
            j["config"]["resolved_seed"] = seed;
            kelly::validate_schema(j, "test_report");
            emit_json(g, j);
            return rep.pass ? 0 : 1;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
