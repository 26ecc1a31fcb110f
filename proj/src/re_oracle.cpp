#include "crr/re_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace crr {

namespace {

constexpr double kNearZeroR = 1e-4;

double mean_sq_dev(const std::vector<double>& y, double center) {
    double ss = 0.0;
    for (double v : y) ss += (v - center) * (v - center);
    return ss / static_cast<double>(y.size());
}

}  // namespace

REFit re_fit(const REData& data, double upsilon_0) {
    const int n = static_cast<int>(data.y.size());
    if (n < 2) throw std::invalid_argument("re_fit: need at least 2 observations");
    if (!(data.sigma2 > 0.0)) throw std::invalid_argument("re_fit: sigma2 must be positive");

    REFit fit;
    double sum = 0.0;
    for (double v : data.y) sum += v;
    fit.upsilon_hat = sum / n;

    const double floor = data.sigma2 + 1e-12;
    const double raw_hat = mean_sq_dev(data.y, fit.upsilon_hat);
    const double raw_con = mean_sq_dev(data.y, upsilon_0);
    fit.omega_hat = std::max(raw_hat, floor);
    fit.omega_constrained = std::max(raw_con, floor);
    fit.floored = raw_hat < floor || raw_con < floor;
    fit.degenerate = raw_hat == 0.0;
    return fit;
}

REReport re_skovgaard(const REData& data, double upsilon_0) {
    REReport rep;
    rep.fit = re_fit(data, upsilon_0);
    const double n = static_cast<double>(data.y.size());
    const double u_hat = rep.fit.upsilon_hat;
    const double om_hat = rep.fit.omega_hat;
    const double om_til = rep.fit.omega_constrained;

    const double ll_hat = -0.5 * n * std::log(om_hat) - 0.5 * n * mean_sq_dev(data.y, u_hat) / om_hat;
    const double ll_til =
        -0.5 * n * std::log(om_til) - 0.5 * n * mean_sq_dev(data.y, upsilon_0) / om_til;
    const double drop = std::max(ll_hat - ll_til, 0.0);
    const double sgn = (u_hat > upsilon_0) - (u_hat < upsilon_0);
    rep.r = sgn * std::sqrt(2.0 * drop);

    rep.s = Mat(2, 2,
                {n / om_til, n * (u_hat - upsilon_0) / (om_til * om_til),
                 0.0, n / (2.0 * om_til * om_til)});
    rep.q_upsilon = n * (u_hat - upsilon_0) / om_til;
    rep.q_omega = -0.5 * n * (1.0 / om_hat - 1.0 / om_til);

    // u assembled exactly as in the regression module; here j^ = i^ in
    // closed form, so no fallback can trigger.
    const double det_s = det(rep.s);
    if (det_s == 0.0) throw SingularMatrixError(det_s);
    const double det_info = (n / om_hat) * (n / (2.0 * om_hat * om_hat));
    const double nuis = n / (2.0 * om_til * om_til);
    const Mat s_inv_q = solve(rep.s, Mat(2, 1, {rep.q_upsilon, rep.q_omega}));
    rep.u = s_inv_q(0, 0) * std::sqrt(det_info) / det_info * det_s / std::sqrt(nuis);

    if (std::fabs(rep.r) < kNearZeroR) {
        rep.diagnostics.insert(Diag::near_zero_r);
        rep.r_bar = rep.r;
    } else if (!(rep.u / rep.r > 0.0)) {
        rep.diagnostics.insert(Diag::u_sign_guard);
        rep.r_bar = rep.r;
    } else {
        rep.r_bar = rep.r + std::log(rep.u / rep.r) / rep.r;
    }
    return rep;
}

}  // namespace crr
