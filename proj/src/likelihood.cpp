#include "crr/likelihood.hpp"

#include <cmath>
#include <limits>

namespace crr {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

// Unchecked moments used by the derivative machinery, which must remain
// evaluable just outside the valid region (finite-difference steps).
MarginalMoments moments_unchecked(const Theta& theta, const Mat& gamma) {
    MarginalMoments m;
    m.f = Mat(2, 1, {theta.beta0 + theta.beta1 * theta.mu, theta.mu});
    const double b1 = theta.beta1;
    m.v = Mat(2, 2,
              {gamma(0, 0) + theta.tau2 + b1 * b1 * theta.sigma2,
               gamma(0, 1) + b1 * theta.sigma2,
               gamma(1, 0) + b1 * theta.sigma2,
               gamma(1, 1) + theta.sigma2});
    return m;
}

}  // namespace

double Theta::operator[](int k) const {
    switch (k) {
        case 0: return beta0;
        case 1: return beta1;
        case 2: return mu;
        case 3: return tau2;
        case 4: return sigma2;
    }
    throw std::out_of_range("Theta index");
}

double& Theta::operator[](int k) {
    switch (k) {
        case 0: return beta0;
        case 1: return beta1;
        case 2: return mu;
        case 3: return tau2;
        case 4: return sigma2;
    }
    throw std::out_of_range("Theta index");
}

MarginalMoments marginal_moments(const Theta& theta, const Mat& gamma) {
    if (!theta.valid())
        throw std::domain_error("marginal_moments: tau2 and sigma2 must be positive");
    return moments_unchecked(theta, gamma);
}

ModelDerivs model_derivs(const Theta& theta) {
    const double b1 = theta.beta1;
    const double s2 = theta.sigma2;

    ModelDerivs d;
    const Mat zero_v = Mat(2, 1);
    const Mat zero_m = Mat(2, 2);
    for (int k = 0; k < Theta::kDim; ++k) {
        d.f_grad[k] = zero_v;
        d.v_grad[k] = zero_m;
        for (int j = 0; j < Theta::kDim; ++j) {
            d.f_hess[k][j] = zero_v;
            d.v_hess[k][j] = zero_m;
        }
    }

    d.f_grad[0] = Mat(2, 1, {1.0, 0.0});
    d.f_grad[1] = Mat(2, 1, {theta.mu, 0.0});
    d.f_grad[2] = Mat(2, 1, {b1, 1.0});

    d.v_grad[1] = Mat(2, 2, {2.0 * b1 * s2, s2, s2, 0.0});
    d.v_grad[3] = Mat(2, 2, {1.0, 0.0, 0.0, 0.0});
    d.v_grad[4] = Mat(2, 2, {b1 * b1, b1, b1, 1.0});

    d.f_hess[1][2] = Mat(2, 1, {1.0, 0.0});
    d.f_hess[2][1] = d.f_hess[1][2];

    d.v_hess[1][1] = Mat(2, 2, {2.0 * s2, 0.0, 0.0, 0.0});
    d.v_hess[1][4] = Mat(2, 2, {2.0 * b1, 1.0, 1.0, 0.0});
    d.v_hess[4][1] = d.v_hess[1][4];

    return d;
}

Mat dinv(const Mat& v_inv, const Mat& v_grad_k) {
    return -1.0 * (v_inv * v_grad_k * v_inv);
}

double loglik(const Theta& theta, const Dataset& data) {
    if (!theta.valid()) return -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (const auto& study : data.studies) {
        const MarginalMoments m = moments_unchecked(theta, study.gamma);
        const double a = m.v(0, 0), b = m.v(0, 1), c = m.v(1, 1);
        const double detv = a * c - b * b;
        if (!(detv > 0.0) || !(a > 0.0)) return -std::numeric_limits<double>::infinity();
        const double r0 = study.eta_hat - m.f(0, 0);
        const double r1 = study.xi_hat - m.f(1, 0);
        const double quad = (c * r0 * r0 - 2.0 * b * r0 * r1 + a * r1 * r1) / detv;
        total += -0.5 * std::log(detv) - 0.5 * quad - kLogTwoPi;
    }
    return total;
}

Vec5 score(const Theta& theta, const Dataset& data) {
    const ModelDerivs d = model_derivs(theta);
    Vec5 s{};
    for (const auto& study : data.studies) {
        const MarginalMoments m = moments_unchecked(theta, study.gamma);
        const Mat v_inv = inverse(m.v);
        const Mat resid(2, 1, {study.eta_hat - m.f(0, 0), study.xi_hat - m.f(1, 0)});
        const Mat w = v_inv * resid;  // V^-1 (y - f)
        for (int k = 0; k < Theta::kDim; ++k) {
            double term = 0.0;
            const Mat& vg = d.v_grad[k];
            // -1/2 tr(V^-1 V_k) + 1/2 (y-f)' V^-1 V_k V^-1 (y-f) + f_k' V^-1 (y-f)
            if (k == 1 || k == 3 || k == 4) {
                term -= 0.5 * trace_prod(v_inv, vg);
                const Mat vw = vg * w;
                term += 0.5 * (w(0, 0) * vw(0, 0) + w(1, 0) * vw(1, 0));
            }
            const Mat& fg = d.f_grad[k];
            term += fg(0, 0) * w(0, 0) + fg(1, 0) * w(1, 0);
            s[k] += term;
        }
    }
    return s;
}

Mat expected_info(const Theta& theta, const Dataset& data) {
    const ModelDerivs d = model_derivs(theta);
    Mat info(Theta::kDim, Theta::kDim);
    for (const auto& study : data.studies) {
        const MarginalMoments m = moments_unchecked(theta, study.gamma);
        const Mat v_inv = inverse(m.v);
        std::array<Mat, Theta::kDim> vi_vg;
        std::array<Mat, Theta::kDim> vi_fg;
        for (int k = 0; k < Theta::kDim; ++k) {
            vi_vg[k] = v_inv * d.v_grad[k];
            vi_fg[k] = v_inv * d.f_grad[k];
        }
        for (int j = 0; j < Theta::kDim; ++j) {
            for (int k = j; k < Theta::kDim; ++k) {
                const double tr_term = 0.5 * trace_prod(vi_vg[j], vi_vg[k]);
                const double mean_term = d.f_grad[j](0, 0) * vi_fg[k](0, 0) +
                                         d.f_grad[j](1, 0) * vi_fg[k](1, 0);
                info(j, k) += tr_term + mean_term;
            }
        }
    }
    for (int j = 0; j < Theta::kDim; ++j)
        for (int k = 0; k < j; ++k) info(j, k) = info(k, j);
    return info;
}

Mat observed_info(const Theta& theta, const Dataset& data) {
    Mat hess(Theta::kDim, Theta::kDim);
    for (int k = 0; k < Theta::kDim; ++k) {
        const double h = 1e-5 * std::max(1.0, std::fabs(theta[k]));
        Theta up = theta, down = theta;
        up[k] += h;
        down[k] -= h;
        const Vec5 s_up = score(up, data);
        const Vec5 s_down = score(down, data);
        for (int j = 0; j < Theta::kDim; ++j)
            hess(j, k) = -(s_up[j] - s_down[j]) / (2.0 * h);
    }
    // symmetrize: FD cross-derivatives differ in the last digits
    Mat sym(Theta::kDim, Theta::kDim);
    for (int j = 0; j < Theta::kDim; ++j)
        for (int k = 0; k < Theta::kDim; ++k) sym(j, k) = 0.5 * (hess(j, k) + hess(k, j));
    return sym;
}

}  // namespace crr
