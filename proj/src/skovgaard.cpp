#include "crr/skovgaard.hpp"

#include <cmath>
#include <limits>

#include "crr/normal.hpp"

namespace crr {

namespace {

constexpr double kNearZeroR = 1e-4;

struct PointPieces {
    ModelDerivs derivs;
    // per-study quantities
    std::vector<Mat> f, v, v_inv;
};

PointPieces pieces_at(const Theta& theta, const Dataset& data) {
    PointPieces p;
    p.derivs = model_derivs(theta);
    p.f.reserve(data.size());
    p.v.reserve(data.size());
    p.v_inv.reserve(data.size());
    for (int i = 0; i < data.size(); ++i) {
        MarginalMoments m = marginal_moments(theta, data.studies[i].gamma);
        try {
            p.v_inv.push_back(inverse(m.v));
        } catch (const SingularMatrixError&) {
            throw std::runtime_error("study " + std::to_string(i + 1) +
                                     ": marginal covariance is singular at this parameter point");
        }
        p.f.push_back(std::move(m.f));
        p.v.push_back(std::move(m.v));
    }
    return p;
}

double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

double tail_p(double stat, Alternative alt) {
    switch (alt) {
        case Alternative::less: return normal_cdf(stat);
        case Alternative::greater: return 1.0 - normal_cdf(stat);
        case Alternative::two_sided: return 2.0 * normal_cdf(-std::fabs(stat));
    }
    return 0.0;
}

}  // namespace

std::string diag_name(Diag d) {
    switch (d) {
        case Diag::info_fallback_hat: return "info-fallback-hat";
        case Diag::info_fallback_tilde: return "info-fallback-tilde";
        case Diag::u_sign_guard: return "u-sign-guard";
        case Diag::near_zero_r: return "near-zero-r";
        case Diag::non_monotone: return "non-monotone-statistic";
        case Diag::se_unavailable: return "se-unavailable";
    }
    return "unknown";
}

Mat s_matrix(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data) {
    const PointPieces hat = pieces_at(theta_hat, data);
    const PointPieces til = pieces_at(theta_tilde, data);

    Mat s(Theta::kDim, Theta::kDim);
    for (int i = 0; i < data.size(); ++i) {
        const Mat diff = til.f[i] - hat.f[i];
        std::array<Mat, Theta::kDim> g_hat, w_til;
        for (int k = 0; k < Theta::kDim; ++k) {
            g_hat[k] = dinv(hat.v_inv[i], hat.derivs.v_grad[k]);
            w_til[k] = dinv(til.v_inv[i], til.derivs.v_grad[k]);
        }
        for (int j = 0; j < Theta::kDim; ++j) {
            const Mat fg_j_t = hat.derivs.f_grad[j].transpose();
            for (int k = 0; k < Theta::kDim; ++k) {
                double entry = 0.5 * trace_prod(g_hat[j], hat.v[i], w_til[k], hat.v[i]);
                entry += (fg_j_t * w_til[k] * diff)(0, 0);
                entry += (fg_j_t * til.v_inv[i] * til.derivs.f_grad[k])(0, 0);
                s(j, k) += entry;
            }
        }
    }
    return s;
}

Vec5 q_vector(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data) {
    const PointPieces hat = pieces_at(theta_hat, data);
    const PointPieces til = pieces_at(theta_tilde, data);

    Vec5 q{};
    for (int i = 0; i < data.size(); ++i) {
        const Mat inv_diff = hat.v_inv[i] - til.v_inv[i];
        const Mat mean_diff = hat.f[i] - til.f[i];
        for (int j = 0; j < Theta::kDim; ++j) {
            const Mat g_j = dinv(hat.v_inv[i], hat.derivs.v_grad[j]);
            double entry = 0.5 * trace_prod(g_j, hat.v[i], inv_diff, hat.v[i]);
            entry += (hat.derivs.f_grad[j].transpose() * til.v_inv[i] * mean_diff)(0, 0);
            q[j] += entry;
        }
    }
    return q;
}

double u_from_ingredients(const UIngredients& ing, DiagSet& diags) {
    const double det_s = crr::det(ing.s);
    if (det_s == 0.0) throw SingularMatrixError(det_s);

    double det_j_hat = crr::det(ing.j_hat);
    if (det_j_hat <= 0.0) {
        diags.insert(Diag::info_fallback_hat);
        det_j_hat = crr::det(ing.i_hat);
    }
    const int psi = Theta::kSlopeIndex;
    double det_nuis = crr::det(ing.j_tilde.drop_row_col(psi, psi));
    if (det_nuis <= 0.0) {
        diags.insert(Diag::info_fallback_tilde);
        det_nuis = crr::det(ing.i_tilde.drop_row_col(psi, psi));
    }

    Mat q_col(Theta::kDim, 1);
    for (int k = 0; k < Theta::kDim; ++k) q_col(k, 0) = ing.q[k];
    const Mat s_inv_q = solve(ing.s, q_col);

    return s_inv_q(psi, 0) * std::sqrt(det_j_hat) / crr::det(ing.i_hat) * det_s /
           std::sqrt(det_nuis);
}

double u_correction(const Theta& theta_hat, const Theta& theta_tilde, const Dataset& data,
                    DiagSet& diags) {
    UIngredients ing;
    ing.s = s_matrix(theta_hat, theta_tilde, data);
    ing.q = q_vector(theta_hat, theta_tilde, data);
    ing.j_hat = observed_info(theta_hat, data);
    ing.i_hat = expected_info(theta_hat, data);
    ing.j_tilde = observed_info(theta_tilde, data);
    ing.i_tilde = expected_info(theta_tilde, data);
    return u_from_ingredients(ing, diags);
}

namespace {

// r_p plus the log correction, with the removable-singularity guards.
double corrected_statistic(double r_p, double u, DiagSet& diags) {
    if (std::fabs(r_p) < kNearZeroR) {
        diags.insert(Diag::near_zero_r);
        return r_p;
    }
    const double ratio = u / r_p;
    if (!(ratio > 0.0)) {
        diags.insert(Diag::u_sign_guard);
        return r_p;
    }
    return r_p + std::log(ratio) / r_p;
}

struct FittedPair {
    FitResult mle;
    FitResult constrained;
    double r_p;
};

FittedPair fit_pair(const Dataset& data, double beta1_null, const FitResult& mle,
                    const OptimizerConfig& config) {
    FittedPair out{mle, fit_constrained(data, beta1_null, config), 0.0};
    const double drop = std::max(mle.loglik_value - out.constrained.loglik_value, 0.0);
    out.r_p = sign_of(mle.theta.beta1 - beta1_null) * std::sqrt(2.0 * drop);
    return out;
}

}  // namespace

TestReport test_beta1(const Dataset& data, double beta1_null, Alternative alternative,
                      const OptimizerConfig& config) {
    TestReport rep;
    rep.beta1_null = beta1_null;
    rep.alternative = alternative;

    const FitResult wls = wls_fit(data);
    rep.beta1_wls = wls.theta.beta1;
    rep.se_wls = (*wls.std_errs)[1];
    rep.wald = (rep.beta1_wls - beta1_null) / rep.se_wls;

    const FitResult mle = fit_mle(data, config);
    rep.beta1_mle = mle.theta.beta1;
    if (mle.std_errs) {
        rep.se_mle = (*mle.std_errs)[1];
        rep.wald_mle = (rep.beta1_mle - beta1_null) / rep.se_mle;
    } else {
        rep.diagnostics.insert(Diag::se_unavailable);
        rep.se_mle = std::numeric_limits<double>::quiet_NaN();
        rep.wald_mle = std::numeric_limits<double>::quiet_NaN();
    }

    const FittedPair pair = fit_pair(data, beta1_null, mle, config);
    rep.fits_converged = mle.converged && pair.constrained.converged;
    rep.r_p = pair.r_p;
    rep.u = u_correction(mle.theta, pair.constrained.theta, data, rep.diagnostics);
    rep.r_bar = corrected_statistic(rep.r_p, rep.u, rep.diagnostics);

    rep.p_wald = tail_p(rep.wald, alternative);
    rep.p_r = tail_p(rep.r_p, alternative);
    rep.p_rbar = tail_p(rep.r_bar, alternative);
    return rep;
}

namespace {

struct StatProbe {
    double value;  // the statistic used for inversion
    double r_p;    // distance from the MLE in likelihood-root units
};

class StatisticCurve {
public:
    StatisticCurve(const Dataset& data, StatisticKind kind, const FitResult& mle,
                   const OptimizerConfig& config)
        : data_(data), kind_(kind), mle_(mle), config_(config) {}

    StatProbe eval(double beta1_null) const {
        DiagSet diags;
        const FittedPair pair = fit_pair(data_, beta1_null, mle_, config_);
        if (kind_ == StatisticKind::r_p) return {pair.r_p, pair.r_p};
        const double u = u_correction(mle_.theta, pair.constrained.theta, data_, diags);
        return {corrected_statistic(pair.r_p, u, diags), pair.r_p};
    }

    // Inside this band the profile drop is dominated by optimizer noise and
    // the log correction of r_bar is meaningless; such probes are treated as
    // lying inside the acceptance region (the statistic is ~0 at the MLE).
    double noise_collar() const { return kind_ == StatisticKind::r_bar ? 0.3 : 0.0; }

private:
    const Dataset& data_;
    StatisticKind kind_;
    const FitResult& mle_;
    const OptimizerConfig& config_;
};

// One-sided search: walk outward from the MLE until the statistic passes the
// target quantile, then bisect. direction = -1 for the lower endpoint. The
// inner bracket value is anchored at 0 (the statistic's value at the MLE)
// rather than evaluated inside the removable-singularity neighborhood.
double invert_side(const StatisticCurve& stat, double beta1_hat, double se, double target,
                   int direction, DiagSet& diags) {
    const double exclusion = 1e-3 * se;
    const double collar = stat.noise_collar();
    const double f_anchor = -target;

    double inner = beta1_hat + direction * exclusion;
    double f_inner = f_anchor;
    double pos = inner;
    double step = 0.25 * se;
    bool bracketed = false;
    double outer = 0.0, f_outer = 0.0;
    while (std::fabs(pos - beta1_hat) < 50.0 * se) {
        pos += direction * step;
        step *= 1.6;
        const StatProbe probe = stat.eval(pos);
        if (std::fabs(probe.r_p) < collar) continue;  // untrustworthy, keep walking
        const double f_pos = probe.value - target;
        if (f_inner * f_pos <= 0.0) {
            outer = pos;
            f_outer = f_pos;
            bracketed = true;
            break;
        }
        inner = pos;
        f_inner = f_pos;
    }
    if (!bracketed)
        throw UnboundedIntervalError(
            std::string("confint_beta1: no sign change within 50 standard errors on the ") +
            (direction < 0 ? "lower" : "upper") + " side");

    double lo = std::min(inner, outer), hi = std::max(inner, outer);
    double f_lo = (inner < outer) ? f_inner : f_outer;
    const double anchor_sign = f_anchor;
    for (int it = 0; it < 200 && hi - lo > 1e-6; ++it) {
        const double mid = 0.5 * (lo + hi);
        const StatProbe probe = stat.eval(mid);
        // collar points count as the MLE's side of the bracket
        const double f_mid =
            std::fabs(probe.r_p) < collar ? anchor_sign : probe.value - target;
        if (f_lo * f_mid <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    const double root = 0.5 * (lo + hi);

    // the statistic should be decreasing in beta1_null through the root
    const double probe_step = 1e-3 * se;
    if (stat.eval(root - probe_step).value < stat.eval(root + probe_step).value)
        diags.insert(Diag::non_monotone);
    return root;
}

}  // namespace

ConfidenceInterval confint_beta1(const Dataset& data, double level, StatisticKind kind,
                                 const OptimizerConfig& config) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("confint_beta1: level must be in (0,1)");

    const double z = normal_quantile(0.5 + 0.5 * level);
    ConfidenceInterval ci;
    ci.level = level;
    ci.kind = kind;

    const FitResult wls = wls_fit(data);
    const double se_wls = (*wls.std_errs)[1];
    if (kind == StatisticKind::wald) {
        ci.lower = wls.theta.beta1 - z * se_wls;
        ci.upper = wls.theta.beta1 + z * se_wls;
        return ci;
    }

    const FitResult mle = fit_mle(data, config);
    if (!mle.converged)
        throw std::runtime_error("confint_beta1: unconstrained fit did not converge");
    const StatisticCurve stat(data, kind, mle, config);
    ci.lower = invert_side(stat, mle.theta.beta1, se_wls, +z, -1, ci.diagnostics);
    ci.upper = invert_side(stat, mle.theta.beta1, se_wls, -z, +1, ci.diagnostics);
    return ci;
}

}  // namespace crr
