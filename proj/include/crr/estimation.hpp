#pragma once

// Weighted least squares starting values, derivative-free simplex
// maximization, and the unconstrained / slope-constrained maximum likelihood
// fits.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crr/likelihood.hpp"

namespace crr {

struct OptimizerConfig {
    int max_iterations = 1000;         // function-evaluation budget per run
    double relative_tolerance = 1e-10; // simplex value-spread stop
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    int restarts = 0;  // re-runs from the incumbent; see fit notes below
};

enum class FitKind { unconstrained, constrained, wls };

struct FitResult {
    Theta theta;
    std::optional<Vec5> std_errs;  // absent for constrained fits or singular info
    double loglik_value = 0.0;
    bool converged = false;
    int iterations = 0;  // function evaluations consumed
    FitKind kind = FitKind::unconstrained;
    double beta1_fixed = 0.0;  // meaningful for constrained fits
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;  // value spread met the tolerance before the cap
};

// Simplex ascent (maximization) with standard reflection / expansion /
// contraction / shrink moves; the initial simplex and the stopping rule
// follow the classic Nash formulation. Objective values of -inf/NaN are
// treated as very bad vertices, which keeps the simplex out of rejected
// regions (tau2 <= 0 and the like).
// Throws std::invalid_argument if the objective is not finite at the start.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const OptimizerConfig& config);

// Classical weighted least squares of eta_hat on xi_hat with weights
// 1/gamma_11. Returned theta carries the canonical MLE starting vector
// (beta0, beta1, mean(xi), mean squared residual, sample variance of xi);
// std_errs holds the WLS standard errors in the beta slots (NaN elsewhere).
// Throws std::invalid_argument for degenerate designs (collinear xi_hat).
FitResult wls_fit(const Dataset& data);

FitResult fit_mle(const Dataset& data, const OptimizerConfig& config = {});

// Maximizes over (beta0, mu, tau2, sigma2) with beta1 frozen at beta1_0.
FitResult fit_constrained(const Dataset& data, double beta1_0,
                          const OptimizerConfig& config = {});

// Estimated log-likelihood improvement left on the table: 1/2 s' I^-1 s over
// directions admissible under the tau2/sigma2 >= 0 constraints (a variance
// component within 1e-6 of zero whose score points outward is excluded;
// slope_fixed removes the beta1 direction for constrained fits). The
// converged flag requires this gap below 1e-3 in addition to a clean
// optimizer stop.
double convergence_gap(const Theta& theta, const Dataset& data, const Vec5& score_vec,
                       bool slope_fixed = false);

}  // namespace crr
