#include "crr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crr {

namespace {

constexpr double kBigValue = 1.0e35;
constexpr double kBoundaryTol = 1e-6;
constexpr double kGapTol = 1e-3;

// Non-finite (rejected) objective values become very bad vertices for the
// internal minimizer.
double clean(double v) { return std::isfinite(v) ? v : kBigValue; }

// The canonical starting vector: WLS coefficients, mean(xi), mean squared WLS
// residual for tau2, sample variance of xi for sigma2.
struct WlsSummary {
    double beta0, beta1, se_beta0, se_beta1;
    double xi_mean, xi_var, resid_ms;
};

WlsSummary wls_summary(const Dataset& data) {
    const int n = data.size();
    if (n < 2) throw std::invalid_argument("wls_fit: need at least 2 studies");

    double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
    for (const auto& s : data.studies) {
        const double g = s.gamma(0, 0);
        if (!(g > 0.0)) throw std::invalid_argument("wls_fit: nonpositive var(eta) weight");
        const double w = 1.0 / g;
        sw += w;
        swx += w * s.xi_hat;
        swxx += w * s.xi_hat * s.xi_hat;
        swy += w * s.eta_hat;
        swxy += w * s.xi_hat * s.eta_hat;
    }
    const double denom = sw * swxx - swx * swx;
    if (!(std::fabs(denom) > 1e-12 * sw * swxx))
        throw std::invalid_argument("wls_fit: degenerate design (xi_hat has no weighted spread)");

    WlsSummary out;
    out.beta1 = (sw * swxy - swx * swy) / denom;
    out.beta0 = (swy - out.beta1 * swx) / sw;

    double wrss = 0, resid_ss = 0, xi_sum = 0;
    for (const auto& s : data.studies) {
        const double r = s.eta_hat - out.beta0 - out.beta1 * s.xi_hat;
        wrss += r * r / s.gamma(0, 0);
        resid_ss += r * r;
        xi_sum += s.xi_hat;
    }
    const double sigma2_hat = wrss / (n - 2);
    out.se_beta0 = std::sqrt(sigma2_hat * swxx / denom);
    out.se_beta1 = std::sqrt(sigma2_hat * sw / denom);
    out.resid_ms = resid_ss / n;
    out.xi_mean = xi_sum / n;
    double xi_ss = 0;
    for (const auto& s : data.studies) {
        const double d = s.xi_hat - out.xi_mean;
        xi_ss += d * d;
    }
    out.xi_var = xi_ss / (n - 1);
    return out;
}

NelderMeadResult nm_single_run(const std::function<double(std::span<const double>)>& objective,
                               const std::vector<double>& start, const OptimizerConfig& cfg) {
    const int n = static_cast<int>(start.size());
    const int n1 = n + 1;
    // internally minimize -objective
    auto fn = [&](const std::vector<double>& x) { return clean(-objective(x)); };

    std::vector<std::vector<double>> p(n1, start);
    std::vector<double> fv(n1);
    int evals = 0;

    const double f0 = -objective(start);
    ++evals;
    if (!std::isfinite(f0))
        throw std::invalid_argument("nelder_mead: objective not finite at the start");
    fv[0] = f0;
    const double convtol = cfg.relative_tolerance * (std::fabs(f0) + cfg.relative_tolerance);

    double step = 0.0;
    for (int i = 0; i < n; ++i) step = std::max(step, 0.1 * std::fabs(start[i]));
    if (step == 0.0) step = 0.1;
    double size = 0.0;
    for (int j = 1; j < n1; ++j) {
        double trystep = step;
        while (p[j][j - 1] == start[j - 1]) {
            p[j][j - 1] = start[j - 1] + trystep;
            trystep *= 10.0;
        }
        size += trystep;
    }
    double oldsize = size;
    bool calcvert = true;
    int best = 0;
    bool stopped_by_spread = false;

    const double alpha = cfg.reflection;
    const double beta = cfg.contraction;
    const double gamma = cfg.expansion;

    for (;;) {
        if (calcvert) {
            for (int j = 0; j < n1; ++j) {
                if (j == best) continue;
                fv[j] = fn(p[j]);
                ++evals;
            }
            calcvert = false;
        }
        double vl = fv[best];
        int low = best, high = best;
        double vh = vl;
        for (int j = 0; j < n1; ++j) {
            if (j == best) continue;
            if (fv[j] < vl) { low = j; vl = fv[j]; }
            if (fv[j] > vh) { high = j; vh = fv[j]; }
        }
        best = low;
        if (vh <= vl + convtol) { stopped_by_spread = true; break; }
        if (evals > cfg.max_iterations) break;

        std::vector<double> centroid(n, 0.0);
        for (int j = 0; j < n1; ++j) {
            if (j == high) continue;
            for (int i = 0; i < n; ++i) centroid[i] += p[j][i];
        }
        for (int i = 0; i < n; ++i) centroid[i] /= n;

        std::vector<double> reflected(n);
        for (int i = 0; i < n; ++i)
            reflected[i] = (1.0 + alpha) * centroid[i] - alpha * p[high][i];
        const double vr = fn(reflected);
        ++evals;

        if (vr < vl) {
            std::vector<double> expanded(n);
            for (int i = 0; i < n; ++i)
                expanded[i] = gamma * reflected[i] + (1.0 - gamma) * centroid[i];
            const double ve = fn(expanded);
            ++evals;
            if (ve < vr) {
                p[high] = std::move(expanded);
                fv[high] = ve;
            } else {
                p[high] = std::move(reflected);
                fv[high] = vr;
            }
        } else {
            if (vr < vh) {
                p[high] = reflected;
                fv[high] = vr;
            }
            std::vector<double> contracted(n);
            for (int i = 0; i < n; ++i)
                contracted[i] = (1.0 - beta) * p[high][i] + beta * centroid[i];
            const double vc = fn(contracted);
            ++evals;
            if (vc < fv[high]) {
                p[high] = std::move(contracted);
                fv[high] = vc;
            } else if (vr >= vh) {
                // full shrink toward the incumbent
                calcvert = true;
                size = 0.0;
                for (int j = 0; j < n1; ++j) {
                    if (j == best) continue;
                    for (int i = 0; i < n; ++i) {
                        p[j][i] = beta * (p[j][i] - p[best][i]) + p[best][i];
                        size += std::fabs(p[j][i] - p[best][i]);
                    }
                }
                if (size < oldsize) {
                    oldsize = size;
                } else {
                    break;  // simplex stopped shrinking
                }
            }
        }
    }

    NelderMeadResult out;
    out.x = p[best];
    out.value = -fv[best];
    out.evaluations = evals;
    out.converged = stopped_by_spread;
    return out;
}

FitResult finish_unconstrained(const Dataset& data, const NelderMeadResult& nm) {
    FitResult fit;
    fit.kind = FitKind::unconstrained;
    fit.theta = Theta{nm.x[0], nm.x[1], nm.x[2], nm.x[3], nm.x[4]};
    fit.loglik_value = nm.value;
    fit.iterations = nm.evaluations;

    const Vec5 s = score(fit.theta, data);
    fit.converged = nm.converged && convergence_gap(fit.theta, data, s) < kGapTol;

    try {
        const Mat info_inv = inverse(expected_info(fit.theta, data));
        Vec5 se{};
        bool ok = true;
        for (int k = 0; k < Theta::kDim; ++k) {
            if (info_inv(k, k) <= 0.0) { ok = false; break; }
            se[k] = std::sqrt(info_inv(k, k));
        }
        if (ok) fit.std_errs = se;
    } catch (const SingularMatrixError&) {
        // SEs stay absent; caller sees the missing optional
    }
    return fit;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const OptimizerConfig& config) {
    if (config.max_iterations < 1 || !(config.relative_tolerance > 0.0) ||
        !(config.reflection > 0.0) || !(config.expansion > 0.0) ||
        !(config.contraction > 0.0) || config.restarts < 0)
        throw std::invalid_argument("nelder_mead: invalid optimizer configuration");
    if (start.empty()) throw std::invalid_argument("nelder_mead: empty start");
    NelderMeadResult result = nm_single_run(objective, start, config);
    for (int r = 0; r < config.restarts; ++r) {
        NelderMeadResult again = nm_single_run(objective, result.x, config);
        again.evaluations += result.evaluations;
        result = std::move(again);
    }
    return result;
}

FitResult wls_fit(const Dataset& data) {
    const WlsSummary w = wls_summary(data);
    FitResult fit;
    fit.kind = FitKind::wls;
    fit.theta = Theta{w.beta0, w.beta1, w.xi_mean, w.resid_ms, w.xi_var};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.std_errs = Vec5{w.se_beta0, w.se_beta1, nan, nan, nan};
    fit.loglik_value = loglik(fit.theta, data);
    fit.converged = true;
    return fit;
}

FitResult fit_mle(const Dataset& data, const OptimizerConfig& config) {
    const FitResult wls = wls_fit(data);
    const auto start_arr = wls.theta.to_array();
    std::vector<double> start(start_arr.begin(), start_arr.end());

    auto objective = [&data](std::span<const double> x) {
        return loglik(Theta{x[0], x[1], x[2], x[3], x[4]}, data);
    };
    return finish_unconstrained(data, nelder_mead(objective, start, config));
}

FitResult fit_constrained(const Dataset& data, double beta1_0, const OptimizerConfig& config) {
    const FitResult wls = wls_fit(data);
    std::vector<double> start = {wls.theta.beta0, wls.theta.mu, wls.theta.tau2,
                                 wls.theta.sigma2};

    auto objective = [&data, beta1_0](std::span<const double> x) {
        return loglik(Theta{x[0], beta1_0, x[1], x[2], x[3]}, data);
    };
    const NelderMeadResult nm = nelder_mead(objective, start, config);

    FitResult fit;
    fit.kind = FitKind::constrained;
    fit.beta1_fixed = beta1_0;
    fit.theta = Theta{nm.x[0], beta1_0, nm.x[1], nm.x[2], nm.x[3]};
    fit.loglik_value = nm.value;
    fit.iterations = nm.evaluations;

    const Vec5 s = score(fit.theta, data);
    fit.converged =
        nm.converged && convergence_gap(fit.theta, data, s, /*slope_fixed=*/true) < kGapTol;
    return fit;
}

double convergence_gap(const Theta& theta, const Dataset& data, const Vec5& score_vec,
                       bool slope_fixed) {
    std::vector<int> admissible;
    for (int k = 0; k < Theta::kDim; ++k) {
        if (slope_fixed && k == Theta::kSlopeIndex) continue;
        if ((k == 3 || k == 4) && theta[k] <= kBoundaryTol && score_vec[k] < 0.0) continue;
        admissible.push_back(k);
    }
    if (admissible.empty()) return 0.0;

    const Mat info = expected_info(theta, data);
    const int m = static_cast<int>(admissible.size());
    Mat sub(m, m);
    Mat s(m, 1);
    for (int i = 0; i < m; ++i) {
        s(i, 0) = score_vec[admissible[i]];
        for (int j = 0; j < m; ++j) sub(i, j) = info(admissible[i], admissible[j]);
    }
    try {
        const Mat x = solve(sub, s);
        double gap = 0.0;
        for (int i = 0; i < m; ++i) gap += s(i, 0) * x(i, 0);
        return 0.5 * std::fabs(gap);
    } catch (const SingularMatrixError&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace crr
