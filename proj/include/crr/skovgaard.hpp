#pragma once

// Second-order likelihood machinery for the slope: the S matrix and q vector
// (covariances of likelihood terms between the unconstrained and constrained
// fits), the correction term u, the signed-root and corrected statistics with
// p-values, and confidence intervals by statistic inversion.

#include <set>
#include <string>

#include "crr/estimation.hpp"

namespace crr {

enum class Alternative { two_sided, less, greater };
enum class StatisticKind { wald, r_p, r_bar };

// Warning flags carried by reports instead of printed text.
enum class Diag {
    info_fallback_hat,    // det(observed info at theta_hat) <= 0, expected used
    info_fallback_tilde,  // det of nuisance block at theta_tilde <= 0, expected used
    u_sign_guard,         // u / r_p <= 0, corrected statistic fell back to r_p
    near_zero_r,          // |r_p| < 1e-4, correction undefined, fell back to r_p
    non_monotone,         // statistic not locally decreasing at a CI endpoint
    se_unavailable        // expected information singular at the MLE
};

using DiagSet = std::set<Diag>;

std::string diag_name(Diag d);

// S_{jk} = sum_i [ 1/2 tr(G_j V W_k V) + fg_j' W_k (f~ - f^) + fg_j' V~^-1 f~g_k ]
// where G_j = d(V^-1)/d theta_j at theta_hat, W_k the same at theta_tilde,
// hatted pieces at theta_hat and tilded at theta_tilde. The single generic
// expression reproduces every per-block closed form, including the
// identically-zero (tau2/sigma2, mu) block.
Mat s_matrix(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data);

// q_j = sum_i [ 1/2 tr(G_j V (V^-1 - V~^-1) V) + fg_j' V~^-1 (f^ - f~) ].
Vec5 q_vector(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data);

// Everything u is assembled from; split out so determinant-sign fallbacks can
// be exercised directly in tests.
struct UIngredients {
    Mat s;            // 5x5
    Vec5 q;
    Mat j_hat;        // observed info at theta_hat
    Mat i_hat;        // expected info at theta_hat
    Mat j_tilde;      // observed info at theta_tilde
    Mat i_tilde;      // expected info at theta_tilde
};

// u = [S^-1 q]_beta1 * det(j^)^(1/2) * det(i^)^-1 * det(S) * det(j~_nuis)^(-1/2),
// substituting expected for observed information wherever the determinant is
// nonpositive (flags record which side fell back).
// Throws SingularMatrixError when det(S) vanishes.
double u_from_ingredients(const UIngredients& ing, DiagSet& diags);

double u_correction(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data,
                    DiagSet& diags);

struct TestReport {
    double beta1_null = 0.0;
    Alternative alternative = Alternative::two_sided;
    double wald = 0.0;    // (beta1_wls - beta1_null) / se_wls, matching the reference report
    double r_p = 0.0;
    double r_bar = 0.0;
    double u = 0.0;
    double p_wald = 0.0, p_r = 0.0, p_rbar = 0.0;
    DiagSet diagnostics;

    // estimates carried along for reporting
    double beta1_wls = 0.0, se_wls = 0.0;
    double beta1_mle = 0.0, se_mle = 0.0;
    double wald_mle = 0.0;  // diagnostic alternative using the MLE standard error
    bool fits_converged = true;
};

TestReport test_beta1(const Dataset& data, double beta1_null, Alternative alternative,
                      const OptimizerConfig& config = {});

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    StatisticKind kind = StatisticKind::r_p;
    DiagSet diagnostics;
};

class UnboundedIntervalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inverts the chosen statistic by bisection on each side of the MLE
// (bracket grows geometrically in WLS-SE units, cap 50 SE; tolerance 1e-6 on
// beta1). The wald kind is closed-form. Throws UnboundedIntervalError when a
// bracket never changes sign.
ConfidenceInterval confint_beta1(const Dataset& data, double level, StatisticKind kind,
                                 const OptimizerConfig& config = {});

}  // namespace crr
