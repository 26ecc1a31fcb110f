// crr: likelihood inference on the slope of a control-rate regression under
// measurement error. Subcommands: test, confint, simulate, re-example.
//
// Exit codes: 0 success, 2 data or argument error, 3 fit non-convergence
// (the report is still printed, with a banner on the diagnostic stream).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crr/re_oracle.hpp"
#include "crr/simulation.hpp"
#include "crr/skovgaard.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitNoConvergence = 3;

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "not a comma-separated number list: " + text);
        }
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    for (double v : parse_double_list(text, flag)) out.push_back(static_cast<int>(v));
    return out;
}

void print_diags(const crr::DiagSet& diags) {
    for (const auto d : diags)
        std::cerr << "warning: " << crr::diag_name(d) << "\n";
}

const char* alt_phrase(crr::Alternative alt) {
    switch (alt) {
        case crr::Alternative::less: return "less";
        case crr::Alternative::greater: return "greater";
        default: return "two.sided";
    }
}

int cmd_test(const std::string& data_path, double beta1_null, const std::string& alternative,
             int maxit, bool as_json) {
    crr::Alternative alt = crr::Alternative::two_sided;
    if (alternative == "less" || alternative == "l") alt = crr::Alternative::less;
    else if (alternative == "greater" || alternative == "g") alt = crr::Alternative::greater;
    else if (alternative != "two.sided" && alternative != "two-sided" && alternative != "t") {
        std::cerr << "error: unknown alternative '" << alternative << "'\n";
        return kExitDataError;
    }

    crr::OptimizerConfig config;
    config.max_iterations = maxit;
    const crr::Dataset data = crr::load_csv(data_path);
    if (data.small_sample())
        std::cerr << "warning: only " << data.size() << " studies; asymptotics are fragile\n";

    const crr::TestReport rep = crr::test_beta1(data, beta1_null, alt, config);

    if (as_json) {
        nlohmann::json j;
        j["estimates"] = {{"wls", {{"beta1", rep.beta1_wls}, {"se", rep.se_wls}}},
                          {"mle", {{"beta1", rep.beta1_mle}, {"se", rep.se_mle}}}};
        j["statistics"] = {{"wald", {{"value", rep.wald}, {"p", rep.p_wald}}},
                           {"r_p", {{"value", rep.r_p}, {"p", rep.p_r}}},
                           {"r_bar", {{"value", rep.r_bar}, {"p", rep.p_rbar}}},
                           {"u", rep.u},
                           {"wald_mle", rep.wald_mle}};
        j["beta1_null"] = rep.beta1_null;
        j["alternative"] = alt_phrase(alt);
        j["converged"] = rep.fits_converged;
        nlohmann::json diags = nlohmann::json::array();
        for (const auto d : rep.diagnostics) diags.push_back(crr::diag_name(d));
        j["diagnostics"] = diags;
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("\nEstimate of beta1:\n");
        std::printf("     Estimate  Std.Err.\n");
        std::printf("WLS  %.5f   %.5f\n", rep.beta1_wls, rep.se_wls);
        std::printf("MLE  %.5f   %.5f\n", rep.beta1_mle, rep.se_mle);
        std::printf("\nHypothesis test for beta1:\n");
        std::printf("%-46s %-12s %s\n", "", "Value", "P-value");
        std::printf("%-46s %.7f   %.7f\n", "Wald statistic", rep.wald, rep.p_wald);
        std::printf("%-46s %.7f   %.7f\n", "Signed profile log-likelihood ratio statistic",
                    rep.r_p, rep.p_r);
        std::printf("%-46s %.7f   %.7f\n", "Skovgaard statistic", rep.r_bar, rep.p_rbar);
        if (alt == crr::Alternative::two_sided)
            std::printf("\nalternative hypothesis: parameter is different from %g\n", beta1_null);
        else
            std::printf("\nalternative hypothesis: parameter is %s than %g\n", alt_phrase(alt),
                        beta1_null);
    }
    print_diags(rep.diagnostics);
    if (!rep.fits_converged) {
        std::cerr << "warning: a likelihood fit did not converge; interpret with care\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

int cmd_confint(const std::string& data_path, double level, const std::string& statistic,
                int maxit) {
    crr::OptimizerConfig config;
    config.max_iterations = maxit;
    const crr::Dataset data = crr::load_csv(data_path);

    std::vector<std::pair<std::string, crr::StatisticKind>> kinds;
    if (statistic == "wald" || statistic == "all") kinds.emplace_back("wald", crr::StatisticKind::wald);
    if (statistic == "rp" || statistic == "all") kinds.emplace_back("rp", crr::StatisticKind::r_p);
    if (statistic == "rbar" || statistic == "all") kinds.emplace_back("rbar", crr::StatisticKind::r_bar);
    if (kinds.empty()) {
        std::cerr << "error: unknown statistic '" << statistic << "' (wald|rp|rbar|all)\n";
        return kExitDataError;
    }

    for (const auto& [name, kind] : kinds) {
        try {
            const crr::ConfidenceInterval ci = crr::confint_beta1(data, level, kind, config);
            std::printf("%s\t%g\t%.6f\t%.6f\n", name.c_str(), level, ci.lower, ci.upper);
            print_diags(ci.diagnostics);
        } catch (const crr::UnboundedIntervalError& err) {
            std::cerr << "warning: " << err.what() << "\n";
            std::printf("%s\t%g\t-inf\tinf\n", name.c_str(), level);
        }
    }
    return kExitOk;
}

int cmd_simulate(int scenario_number, bool have_custom, double beta0, double beta1, double mu,
                 const std::string& n_list, const std::string& tau_list,
                 const std::string& sigma_list, double tau_fixed, double sigma_fixed,
                 int replicates, std::uint64_t seed, int workers, const std::string& out_path,
                 int maxit) {
    if (scenario_number != 0 && have_custom) {
        std::cerr << "error: --scenario conflicts with explicit --beta0/--beta1/--mu\n";
        return kExitDataError;
    }
    if (!tau_list.empty() && !sigma_list.empty()) {
        std::cerr << "error: give either --tau-list or --sigma-list, not both\n";
        return kExitDataError;
    }

    crr::GridSpec spec;
    crr::Scenario base;
    std::string label = "custom";
    if (scenario_number != 0) {
        base = crr::scenario_by_number(scenario_number, tau_fixed, sigma_fixed);
        label = std::to_string(scenario_number);
    } else if (have_custom) {
        base.beta0 = beta0;
        base.beta1 = beta1;
        base.mu = mu;
        base.tau = tau_fixed;
        base.sigma = sigma_fixed;
    } else {
        std::cerr << "error: pick --scenario or give --beta0/--beta1/--mu\n";
        return kExitDataError;
    }
    spec.scenarios.emplace_back(label, base);
    spec.n_values = parse_int_list(n_list, "--n-list");
    if (!tau_list.empty()) spec.tau_values = parse_double_list(tau_list, "--tau-list");
    if (!sigma_list.empty()) spec.sigma_values = parse_double_list(sigma_list, "--sigma-list");

    crr::SimulationConfig cfg;
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg.parallelism = workers;
    cfg.max_iterations = maxit;

    const int cell_count = static_cast<int>(spec.n_values.size()) *
                           static_cast<int>(spec.tau_values.empty() ? 1 : spec.tau_values.size()) *
                           static_cast<int>(spec.sigma_values.empty() ? 1 : spec.sigma_values.size());
    std::cerr << "running " << cell_count << " grid cell(s) x " << replicates
              << " replicates\n";

    if (out_path.empty()) {
        crr::run_grid(spec, cfg, &std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot open " << out_path << " for writing\n";
            return kExitDataError;
        }
        crr::run_grid(spec, cfg, &out);
    }
    return kExitOk;
}

int cmd_re_example(const std::string& y_list, double sigma2, double upsilon_null) {
    crr::REData data;
    data.y = parse_double_list(y_list, "--y");
    data.sigma2 = sigma2;
    if (data.y.size() < 2) {
        std::cerr << "error: need at least 2 observations\n";
        return kExitDataError;
    }
    const crr::REReport rep = crr::re_skovgaard(data, upsilon_null);
    const auto z = [](double v) { return v + 0.0; };  // drop negative zero
    std::printf("upsilon_hat\t%.7f\n", z(rep.fit.upsilon_hat));
    std::printf("omega_hat\t%.7f\n", z(rep.fit.omega_hat));
    std::printf("omega_constr\t%.7f\n", z(rep.fit.omega_constrained));
    std::printf("r\t%.7f\n", z(rep.r));
    std::printf("r_bar\t%.7f\n", z(rep.r_bar));
    std::printf("u\t%.7f\n", z(rep.u));
    std::printf("S\t%.7f\t%.7f\t%.7f\t%.7f\n", z(rep.s(0, 0)), z(rep.s(0, 1)), z(rep.s(1, 0)),
                z(rep.s(1, 1)));
    std::printf("q\t%.7f\t%.7f\n", z(rep.q_upsilon), z(rep.q_omega));
    print_diags(rep.diagnostics);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood inference for control-rate regression under measurement error"};
    app.require_subcommand(1);

    // --- test ---
    auto* test = app.add_subcommand("test", "Hypothesis test for the slope");
    std::string test_data, test_alt = "two.sided";
    double test_null = 0.0;
    int test_maxit = 1000;
    bool test_json = false;
    test->add_option("--data", test_data, "CSV dataset")->required();
    test->add_option("--beta1-null", test_null, "slope under the null")->required();
    test->add_option("--alternative", test_alt, "two.sided|less|greater");
    test->add_option("--maxit", test_maxit, "optimizer evaluation budget");
    test->add_flag("--json", test_json, "machine-readable output");

    // --- confint ---
    auto* confint = app.add_subcommand("confint", "Confidence interval for the slope");
    std::string ci_data, ci_stat = "all";
    double ci_level = 0.95;
    int ci_maxit = 1000;
    confint->add_option("--data", ci_data, "CSV dataset")->required();
    confint->add_option("--level", ci_level, "confidence level");
    confint->add_option("--statistic", ci_stat, "wald|rp|rbar|all");
    confint->add_option("--maxit", ci_maxit, "optimizer evaluation budget");

    // --- simulate ---
    auto* simulate = app.add_subcommand("simulate", "Coverage experiment grid");
    int sim_scenario = 0, sim_reps = 1000, sim_workers = 0, sim_maxit = 1000;
    double sim_beta0 = 0.0, sim_beta1 = 1.0, sim_mu = 0.0;
    double sim_tau = 1.0, sim_sigma = 1.0;
    std::string sim_nlist, sim_taulist, sim_sigmalist, sim_out;
    std::uint64_t sim_seed = 0;
    auto* opt_b0 = simulate->add_option("--beta0", sim_beta0, "custom intercept");
    auto* opt_b1 = simulate->add_option("--beta1", sim_beta1, "custom slope");
    auto* opt_mu = simulate->add_option("--mu", sim_mu, "custom latent mean");
    simulate->add_option("--scenario", sim_scenario, "scenario 1..4")
        ->check(CLI::Range(1, 4));
    simulate->add_option("--n-list", sim_nlist, "study counts, comma separated")->required();
    simulate->add_option("--tau-list", sim_taulist, "tau sweep, comma separated");
    simulate->add_option("--sigma-list", sim_sigmalist, "sigma sweep, comma separated");
    simulate->add_option("--tau", sim_tau, "fixed tau when sweeping sigma");
    simulate->add_option("--sigma", sim_sigma, "fixed sigma when sweeping tau");
    simulate->add_option("--replicates", sim_reps, "replicates per cell");
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_option("--workers", sim_workers, "OpenMP worker count (0 = default)");
    simulate->add_option("--out", sim_out, "write CSV here instead of stdout");
    simulate->add_option("--maxit", sim_maxit, "optimizer evaluation budget");

    // --- re-example ---
    auto* re = app.add_subcommand("re-example",
                                  "Closed-form random-effects worked example");
    std::string re_y;
    double re_sigma2 = 1.0, re_null = 0.0;
    re->add_option("--y", re_y, "observations, comma separated")->required();
    re->add_option("--sigma2", re_sigma2, "known within-study variance")->required();
    re->add_option("--upsilon-null", re_null, "effect under the null")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage/help
        return e.get_name() == "CallForHelp" ? kExitOk : kExitDataError;
    }

    try {
        if (test->parsed())
            return cmd_test(test_data, test_null, test_alt, test_maxit, test_json);
        if (confint->parsed()) return cmd_confint(ci_data, ci_level, ci_stat, ci_maxit);
        if (simulate->parsed()) {
            const bool have_custom = opt_b0->count() || opt_b1->count() || opt_mu->count();
            return cmd_simulate(sim_scenario, have_custom, sim_beta0, sim_beta1, sim_mu,
                                sim_nlist, sim_taulist, sim_sigmalist, sim_tau, sim_sigma,
                                sim_reps, sim_seed, sim_workers, sim_out, sim_maxit);
        }
        if (re->parsed()) return cmd_re_example(re_y, re_sigma2, re_null);
    } catch (const crr::CsvError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kExitDataError;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}
