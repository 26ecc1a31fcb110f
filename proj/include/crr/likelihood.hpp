#pragma once

// The marginal bivariate-normal model for (eta_hat, xi_hat) and its analytic
// derivative machinery: marginal moments, log-likelihood, score, expected and
// observed information. Everything downstream (profile statistics, the
// second-order correction) is assembled from these pieces.

#include <array>

#include "crr/data_model.hpp"
#include "crr/linalg.hpp"

namespace crr {

// Canonical parameter ordering, used everywhere:
//   0: beta0   regression intercept
//   1: beta1   regression slope (the parameter of interest)
//   2: mu      latent control-risk mean
//   3: tau2    residual heterogeneity variance
//   4: sigma2  latent control-risk variance
struct Theta {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double mu = 0.0;
    double tau2 = 1.0;
    double sigma2 = 1.0;

    static constexpr int kDim = 5;
    static constexpr int kSlopeIndex = 1;

    bool valid() const { return tau2 > 0.0 && sigma2 > 0.0; }

    double operator[](int k) const;
    double& operator[](int k);
    std::array<double, kDim> to_array() const { return {beta0, beta1, mu, tau2, sigma2}; }
    static Theta from_array(const std::array<double, kDim>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
};

using Vec5 = std::array<double, Theta::kDim>;

// Marginal mean and covariance of one study's observation pair.
struct MarginalMoments {
    Mat f;  // 2x1: (beta0 + beta1*mu, mu)
    Mat v;  // 2x2: gamma + [[tau2 + beta1^2 sigma2, beta1 sigma2], [beta1 sigma2, sigma2]]
};

// Throws std::domain_error for nonpositive variance components.
MarginalMoments marginal_moments(const Theta& theta, const Mat& gamma);

// First and second parameter derivatives of f and V. Only a handful of
// entries are nonzero; all are closed-form in theta (gamma drops out).
struct ModelDerivs {
    std::array<Mat, Theta::kDim> f_grad;                         // 2x1 each
    std::array<Mat, Theta::kDim> v_grad;                         // 2x2 each
    std::array<std::array<Mat, Theta::kDim>, Theta::kDim> f_hess;
    std::array<std::array<Mat, Theta::kDim>, Theta::kDim> v_hess;
};

ModelDerivs model_derivs(const Theta& theta);

// d(V^-1)/d theta_k = -V^-1 V_{,k} V^-1, given V^-1 and V_{,k}.
Mat dinv(const Mat& v_inv, const Mat& v_grad_k);

// Sum over studies of the bivariate-normal log density, 2*pi constant
// included. Returns -infinity when tau2 <= 0 or sigma2 <= 0 or some V_i is
// not positive definite (the optimizer treats the sentinel as a rejection).
double loglik(const Theta& theta, const Dataset& data);

// Analytic gradient of loglik. Evaluates mechanically wherever every V_i is
// invertible (slightly negative variance components are fine; the finite-
// difference observed information relies on that).
Vec5 score(const Theta& theta, const Dataset& data);

// Fisher information: i_{jk} = sum_i [ 1/2 tr(V^-1 V_j V^-1 V_k) + f_j' V^-1 f_k ].
Mat expected_info(const Theta& theta, const Dataset& data);

// Negative Hessian of loglik via central differences of the analytic score
// (step 1e-5 * max(1, |theta_k|)), symmetrized.
Mat observed_info(const Theta& theta, const Dataset& data);

}  // namespace crr
