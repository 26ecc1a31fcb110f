#pragma once

// Homogeneous random-effects meta-analysis: Y_i ~ N(upsilon, omega) with
// omega = sigma2 + tau2 and sigma2 known. Everything is closed-form, which
// makes this model an independent analytic testbed for the second-order
// correction pipeline.

#include <vector>

#include "crr/linalg.hpp"
#include "crr/skovgaard.hpp"

namespace crr {

struct REData {
    std::vector<double> y;  // per-study effect estimates
    double sigma2 = 1.0;    // common known within-study variance
};

struct REFit {
    double upsilon_hat = 0.0;
    double omega_hat = 0.0;          // mean squared deviation, floored at sigma2
    double omega_constrained = 0.0;  // same with the mean fixed at upsilon_0
    bool floored = false;            // some variance hit the tau2 >= 0 floor
    bool degenerate = false;         // all observations identical
};

// Closed-form fits; omega estimates are floored at sigma2 + 1e-12 so the
// implied tau2 stays nonnegative.
REFit re_fit(const REData& data, double upsilon_0);

struct REReport {
    REFit fit;
    double r = 0.0;
    double r_bar = 0.0;
    Mat s;  // 2x2, parameter order (upsilon, omega)
    double q_upsilon = 0.0, q_omega = 0.0;
    double u = 0.0;
    DiagSet diagnostics;
};

// Closed-form S, q and the same u assembly / guards as the regression module:
//   S_uu = n/omega~            S_uo = n (u^ - u0) / omega~^2
//   S_ou = 0                   S_oo = n / (2 omega~^2)
//   q_u  = n (u^ - u0)/omega~  q_o  = -(n/2)(1/omega^ - 1/omega~)
// and, at this model's MLE, observed and expected information coincide:
// diag(n/omega^, n/(2 omega^2)), with nuisance block n/(2 omega~^2) at the
// constrained fit.
REReport re_skovgaard(const REData& data, double upsilon_0);

}  // namespace crr
