#pragma once

// Two-step Poisson data generation and the coverage-probability experiment
// harness. Replicates are embarrassingly parallel; each owns a counter-based
// RNG stream keyed by (seed, cell, replicate), so a run's output is identical
// for any worker count. A plain serial implementation of the study loop is
// kept alongside the OpenMP kernel as a reference for testing and
// benchmarking.

#include <iosfwd>
#include <string>
#include <vector>

#include "crr/data_model.hpp"
#include "crr/rng.hpp"

namespace crr {

struct Scenario {
    double beta0 = 0.0;
    double beta1 = 1.0;
    double mu = 1.0;
    double tau = 0.3;    // sqrt of the heterogeneity variance
    double sigma = 1.0;  // sqrt of the latent control-risk variance
};

// The four reducing-event-rate parameterizations used by the coverage
// experiments; tau and sigma are filled from the sweep.
Scenario scenario_by_number(int number, double tau, double sigma);

struct SimulationConfig {
    Scenario scenario;
    int n = 10;               // studies per replicate
    int replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    double person_years_low = 100.0;
    double person_years_high = 5000.0;
    int parallelism = 0;      // OpenMP worker count; 0 means library default
    int max_iterations = 1000;
};

// Draws one replicate's dataset: person-years ~ U(low, high), latent control
// risks from N(mu, sigma^2), treated risks from the regression line with
// N(0, tau^2) error, counts from the two Poissons, then the standard
// count -> observation transformation (0.5 correction applies to zero draws).
Dataset simulate_dataset(const Scenario& scenario, int n, RngStream& rng,
                         double py_low = 100.0, double py_high = 5000.0);

enum class Method { wls_wald, r_p, r_bar };

struct MethodCoverage {
    long covered = 0;
    long failed = 0;
    long replicates = 0;

    long usable() const { return replicates - failed; }
    double coverage() const {
        return usable() > 0 ? static_cast<double>(covered) / usable() : 0.0;
    }
    double mc_se() const {
        const long m = usable();
        if (m <= 0) return 0.0;
        const double p = coverage();
        return std::sqrt(p * (1.0 - p) / static_cast<double>(m));
    }
};

struct CoverageResult {
    MethodCoverage wls_wald;
    MethodCoverage r_p;
    MethodCoverage r_bar;

    const MethodCoverage& method(Method m) const {
        switch (m) {
            case Method::wls_wald: return wls_wald;
            case Method::r_p: return r_p;
            default: return r_bar;
        }
    }
};

bool operator==(const MethodCoverage& a, const MethodCoverage& b);
bool operator==(const CoverageResult& a, const CoverageResult& b);

// Coverage of the three nominal-level confidence procedures at the true
// beta1. A replicate covers when the statistic evaluated at the truth falls
// inside the acceptance region (that is the definition of the inversion
// interval's coverage); failed fits are excluded from the affected method's
// denominator and counted as failures.
CoverageResult coverage_study(const SimulationConfig& config, std::uint32_t cell = 0);

// Serial reference implementation; produces bit-identical results.
CoverageResult coverage_study_serial(const SimulationConfig& config, std::uint32_t cell = 0);

struct GridSpec {
    std::vector<std::pair<std::string, Scenario>> scenarios;
    std::vector<int> n_values;
    std::vector<double> tau_values;    // empty: keep each scenario's tau
    std::vector<double> sigma_values;  // empty: keep each scenario's sigma
};

struct GridCellResult {
    std::string scenario_label;
    int n = 0;
    double tau = 0.0, sigma = 0.0;
    CoverageResult result;
};

// Cartesian-product execution with an independent stream cell per grid
// point (cells numbered in row order, first cell 0). Writes one CSV row per
// (cell, method): scenario,n,tau,sigma,method,coverage,mc_se,failures,replicates.
std::vector<GridCellResult> run_grid(const GridSpec& spec, const SimulationConfig& base,
                                     std::ostream* csv);

void write_grid_csv(const std::vector<GridCellResult>& cells, std::ostream& out);

}  // namespace crr
