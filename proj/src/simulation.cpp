#include "crr/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "crr/normal.hpp"
#include "crr/skovgaard.hpp"

namespace crr {

Scenario scenario_by_number(int number, double tau, double sigma) {
    Scenario s;
    s.tau = tau;
    s.sigma = sigma;
    switch (number) {
        case 1: s.beta0 = 0.0;  s.beta1 = 1.0; s.mu = 1.0;  return s;
        case 2: s.beta0 = -1.5; s.beta1 = 1.0; s.mu = -0.5; return s;
        case 3: s.beta0 = -1.5; s.beta1 = 1.0; s.mu = -2.5; return s;
        case 4: s.beta0 = -3.0; s.beta1 = 1.0; s.mu = -2.0; return s;
    }
    throw std::invalid_argument("scenario number must be 1..4");
}

Dataset simulate_dataset(const Scenario& scenario, int n, RngStream& rng, double py_low,
                         double py_high) {
    Dataset data;
    data.studies.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double py_treated = rng.uniform(py_low, py_high);
        const double py_control = rng.uniform(py_low, py_high);
        const double xi = rng.normal(scenario.mu, scenario.sigma);
        const double eta = scenario.beta0 + scenario.beta1 * xi + rng.normal(0.0, scenario.tau);
        StudyCounts counts;
        counts.deaths_treated = static_cast<double>(rng.poisson(py_treated * std::exp(eta)));
        counts.person_years_treated = py_treated;
        counts.deaths_control = static_cast<double>(rng.poisson(py_control * std::exp(xi)));
        counts.person_years_control = py_control;
        data.studies.push_back(build_observation(counts));
    }
    return data;
}

bool operator==(const MethodCoverage& a, const MethodCoverage& b) {
    return a.covered == b.covered && a.failed == b.failed && a.replicates == b.replicates;
}

bool operator==(const CoverageResult& a, const CoverageResult& b) {
    return a.wls_wald == b.wls_wald && a.r_p == b.r_p && a.r_bar == b.r_bar;
}

namespace {

struct ReplicateOutcome {
    bool wls_covered = false, wls_failed = false;
    bool rp_covered = false, rp_failed = false;
    bool rbar_covered = false, rbar_failed = false;
};

// Pure function of (config, cell, replicate index): simulate one dataset and
// check whether each acceptance region contains the true slope.
ReplicateOutcome run_replicate(const SimulationConfig& config, std::uint32_t cell,
                               std::uint32_t replicate, double z) {
    ReplicateOutcome out;
    RngStream rng(config.seed, cell, replicate);
    const Dataset data = simulate_dataset(config.scenario, config.n, rng,
                                          config.person_years_low, config.person_years_high);
    const double truth = config.scenario.beta1;

    OptimizerConfig opt;
    opt.max_iterations = config.max_iterations;

    FitResult wls;
    try {
        wls = wls_fit(data);
        const double stat = (wls.theta.beta1 - truth) / (*wls.std_errs)[1];
        out.wls_covered = std::fabs(stat) < z;
    } catch (const std::exception&) {
        out.wls_failed = true;
        out.rp_failed = true;
        out.rbar_failed = true;
        return out;
    }

    FitResult mle, constrained;
    try {
        mle = fit_mle(data, opt);
        constrained = fit_constrained(data, truth, opt);
        if (!mle.converged || !constrained.converged) throw std::runtime_error("fit failure");
    } catch (const std::exception&) {
        out.rp_failed = true;
        out.rbar_failed = true;
        return out;
    }

    const double drop = std::max(mle.loglik_value - constrained.loglik_value, 0.0);
    const double sgn = (mle.theta.beta1 > truth) - (mle.theta.beta1 < truth);
    const double r_p = sgn * std::sqrt(2.0 * drop);
    out.rp_covered = std::fabs(r_p) < z;

    try {
        DiagSet diags;
        const double u = u_correction(mle.theta, constrained.theta, data, diags);
        double r_bar = r_p;
        if (std::fabs(r_p) >= 1e-4 && u / r_p > 0.0) r_bar = r_p + std::log(u / r_p) / r_p;
        if (!std::isfinite(r_bar)) throw std::runtime_error("non-finite statistic");
        out.rbar_covered = std::fabs(r_bar) < z;
    } catch (const std::exception&) {
        out.rbar_failed = true;
    }
    return out;
}

CoverageResult reduce_outcomes(const std::vector<ReplicateOutcome>& outcomes) {
    CoverageResult result;
    result.wls_wald.replicates = result.r_p.replicates = result.r_bar.replicates =
        static_cast<long>(outcomes.size());
    for (const auto& o : outcomes) {
        result.wls_wald.covered += o.wls_covered;
        result.wls_wald.failed += o.wls_failed;
        result.r_p.covered += o.rp_covered;
        result.r_p.failed += o.rp_failed;
        result.r_bar.covered += o.rbar_covered;
        result.r_bar.failed += o.rbar_failed;
    }
    return result;
}

}  // namespace

namespace {

void validate_config(const SimulationConfig& config) {
    if (config.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (!(config.person_years_low < config.person_years_high) ||
        !(config.person_years_low > 0.0))
        throw std::invalid_argument("person-years range must satisfy 0 < low < high");
    if (!(config.scenario.tau > 0.0) || !(config.scenario.sigma > 0.0))
        throw std::invalid_argument("tau and sigma must be positive");
}

}  // namespace

CoverageResult coverage_study(const SimulationConfig& config, std::uint32_t cell) {
    validate_config(config);
    const double z = normal_quantile(0.5 + 0.5 * config.level);
    std::vector<ReplicateOutcome> outcomes(config.replicates);

#ifdef _OPENMP
    const int workers = config.parallelism > 0 ? config.parallelism : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers)
    for (int r = 0; r < config.replicates; ++r)
        outcomes[r] = run_replicate(config, cell, static_cast<std::uint32_t>(r), z);
#else
    for (int r = 0; r < config.replicates; ++r)
        outcomes[r] = run_replicate(config, cell, static_cast<std::uint32_t>(r), z);
#endif
    return reduce_outcomes(outcomes);
}

CoverageResult coverage_study_serial(const SimulationConfig& config, std::uint32_t cell) {
    validate_config(config);
    const double z = normal_quantile(0.5 + 0.5 * config.level);
    std::vector<ReplicateOutcome> outcomes(config.replicates);
    for (int r = 0; r < config.replicates; ++r)
        outcomes[r] = run_replicate(config, cell, static_cast<std::uint32_t>(r), z);
    return reduce_outcomes(outcomes);
}

std::vector<GridCellResult> run_grid(const GridSpec& spec, const SimulationConfig& base,
                                     std::ostream* csv) {
    if (spec.scenarios.empty() || spec.n_values.empty())
        throw std::invalid_argument("run_grid: empty grid");

    std::vector<GridCellResult> cells;
    std::uint32_t cell_id = 0;
    for (const auto& [label, scenario] : spec.scenarios) {
        const std::vector<double> taus =
            spec.tau_values.empty() ? std::vector<double>{scenario.tau} : spec.tau_values;
        const std::vector<double> sigmas =
            spec.sigma_values.empty() ? std::vector<double>{scenario.sigma} : spec.sigma_values;
        for (int n : spec.n_values) {
            for (double tau : taus) {
                for (double sigma : sigmas) {
                    SimulationConfig cfg = base;
                    cfg.scenario = scenario;
                    cfg.scenario.tau = tau;
                    cfg.scenario.sigma = sigma;
                    cfg.n = n;
                    GridCellResult cell;
                    cell.scenario_label = label;
                    cell.n = n;
                    cell.tau = tau;
                    cell.sigma = sigma;
                    cell.result = coverage_study(cfg, cell_id++);
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    if (csv) write_grid_csv(cells, *csv);
    return cells;
}

void write_grid_csv(const std::vector<GridCellResult>& cells, std::ostream& out) {
    out << "scenario,n,tau,sigma,method,coverage,mc_se,failures,replicates\n";
    char line[256];
    for (const auto& cell : cells) {
        const std::pair<const char*, const MethodCoverage*> methods[] = {
            {"wls_wald", &cell.result.wls_wald},
            {"r_p", &cell.result.r_p},
            {"r_bar", &cell.result.r_bar},
        };
        for (const auto& [name, cov] : methods) {
            std::snprintf(line, sizeof(line), "%s,%d,%g,%g,%s,%.6f,%.6f,%ld,%ld\n",
                          cell.scenario_label.c_str(), cell.n, cell.tau, cell.sigma, name,
                          cov->coverage(), cov->mc_se(), cov->failed, cov->replicates);
            out << line;
        }
    }
}

}  // namespace crr
