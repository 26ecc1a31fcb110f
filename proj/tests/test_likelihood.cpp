#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "crr/likelihood.hpp"
#include "crr/rng.hpp"

using namespace crr;

namespace {

const std::string kHoesPath = std::string(CRR_DATA_DIR) + "/hoes.csv";

// Bypasses the dataset-level floor; the math itself is per-study.
Dataset single_study(double eta, double xi, const Mat& gamma) {
    Dataset d;
    d.studies.push_back({eta, xi, gamma});
    return d;
}

Dataset random_dataset(std::mt19937& gen, int n) {
    std::uniform_real_distribution<double> obs(-3.0, 1.0);
    std::uniform_real_distribution<double> var(0.02, 0.5);
    Dataset d;
    for (int i = 0; i < n; ++i) {
        const double v1 = var(gen), v2 = var(gen);
        d.studies.push_back({obs(gen), obs(gen), Mat(2, 2, {v1, 0, 0, v2})});
    }
    return d;
}

Theta random_theta(std::mt19937& gen) {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.1, 4.0);
    return Theta{coef(gen), coef(gen), coef(gen), var(gen), var(gen)};
}

// Independent density route: Cholesky whitening instead of det/inverse.
double bvn_logpdf(double y0, double y1, const Mat& f, const Mat& v) {
    const double l11 = std::sqrt(v(0, 0));
    const double l21 = v(1, 0) / l11;
    const double l22 = std::sqrt(v(1, 1) - l21 * l21);
    const double z0 = (y0 - f(0, 0)) / l11;
    const double z1 = ((y1 - f(1, 0)) - l21 * z0) / l22;
    return -std::log(2.0 * M_PI) - std::log(l11 * l22) - 0.5 * (z0 * z0 + z1 * z1);
}

double loglik_oracle(const Theta& theta, const Dataset& data) {
    double total = 0.0;
    for (const auto& s : data.studies) {
        const MarginalMoments m = marginal_moments(theta, s.gamma);
        total += bvn_logpdf(s.eta_hat, s.xi_hat, m.f, m.v);
    }
    return total;
}

}  // namespace

TEST_CASE("marginal moments by direct substitution") {
    const Theta theta{0, 1, 1, 1, 1};
    const MarginalMoments m = marginal_moments(theta, Mat(2, 2));
    CHECK(m.f(0, 0) == doctest::Approx(1.0));
    CHECK(m.f(1, 0) == doctest::Approx(1.0));
    CHECK(approx_equal(m.v, Mat(2, 2, {2, 1, 1, 1}), 1e-15));
}

TEST_CASE("zero slope kills the marginal covariance") {
    const MarginalMoments m =
        marginal_moments(Theta{0.4, 0.0, -1.0, 0.7, 1.3}, Mat(2, 2, {0.3, 0, 0, 0.2}));
    CHECK(m.v(0, 1) == 0.0);
    CHECK(m.v(1, 0) == 0.0);
}

TEST_CASE("marginal covariance with the table row-1 gamma") {
    const MarginalMoments m =
        marginal_moments(Theta{0, 1, 1, 1, 1}, Mat(2, 2, {0.1, 0, 0, 1.0 / 21}));
    CHECK(approx_equal(m.v, Mat(2, 2, {2.1, 1, 1, 1 + 1.0 / 21}), 1e-15));
}

TEST_CASE("nonpositive variance components raise a domain error") {
    CHECK_THROWS_AS((void)marginal_moments(Theta{0, 1, 1, -0.1, 1}, Mat(2, 2)),
                    std::domain_error);
    CHECK_THROWS_AS((void)marginal_moments(Theta{0, 1, 1, 1, 0.0}, Mat(2, 2)),
                    std::domain_error);
}

TEST_CASE("single zero-residual study with unit determinant") {
    const Dataset d = single_study(0.0, 0.0, Mat(2, 2));
    CHECK(loglik(Theta{0, 1, 0, 1, 1}, d) == doctest::Approx(-std::log(2 * M_PI)));
}

TEST_CASE("invalid variance components give the -inf sentinel") {
    const Dataset d = single_study(0.0, 0.0, Mat(2, 2));
    CHECK(loglik(Theta{0, 1, 0, -0.1, 1}, d) == -std::numeric_limits<double>::infinity());
    CHECK(loglik(Theta{0, 1, 0, 1, -0.1}, d) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("loglik equals the independent bivariate-normal density oracle") {
    const Dataset hoes = load_csv(kHoesPath);
    std::mt19937 gen(11);
    for (int trial = 0; trial < 25; ++trial) {
        const Theta theta = random_theta(gen);
        CHECK(loglik(theta, hoes) ==
              doctest::Approx(loglik_oracle(theta, hoes)).epsilon(1e-8));
    }
}

TEST_CASE("score matches central finite differences of loglik") {
    std::mt19937 gen(23);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Dataset data = random_dataset(gen, 6);
        const Theta theta = random_theta(gen);
        const Vec5 s = score(theta, data);
        for (int k = 0; k < Theta::kDim; ++k) {
            const double h = 1e-6 * std::max(1.0, std::fabs(theta[k]));
            Theta up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            const double fd = (loglik(up, data) - loglik(down, data)) / (2 * h);
            CHECK(s[k] == doctest::Approx(fd).epsilon(1e-4));
            ++checked;
        }
    }
    CHECK(checked == 500);
}

TEST_CASE("single-study mu score by hand substitution") {
    // beta1 = 0, gamma = 0, theta = (0,0,0,1,1), y = (a,b): f_mu = (0,1), V = I
    const double a = 0.7, b = -1.9;
    const Dataset d = single_study(a, b, Mat(2, 2));
    const Vec5 s = score(Theta{0, 0, 0, 1, 1}, d);
    CHECK(s[2] == doctest::Approx(b));
}

TEST_CASE("model derivative values by substitution") {
    const ModelDerivs d = model_derivs(Theta{0, 1, 1, 1, 1});
    CHECK(approx_equal(d.v_grad[1], Mat(2, 2, {2, 1, 1, 0}), 1e-15));
    CHECK(approx_equal(d.f_grad[1], Mat(2, 1, {1, 0}), 1e-15));
    CHECK(approx_equal(d.v_hess[1][1], Mat(2, 2, {2, 0, 0, 0}), 1e-15));
    CHECK(approx_equal(d.v_hess[1][4], Mat(2, 2, {2, 1, 1, 0}), 1e-15));
    CHECK(approx_equal(d.f_hess[1][2], Mat(2, 1, {1, 0}), 1e-15));
}

TEST_CASE("all model derivatives match finite differences of the moments") {
    std::mt19937 gen(31);
    const Mat gamma(2, 2, {0.15, 0.02, 0.02, 0.4});
    for (int trial = 0; trial < 20; ++trial) {
        const Theta theta = random_theta(gen);
        const ModelDerivs d = model_derivs(theta);
        for (int k = 0; k < Theta::kDim; ++k) {
            const double h = 1e-5;
            Theta up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            const MarginalMoments mu = marginal_moments(up, gamma);
            const MarginalMoments md = marginal_moments(down, gamma);
            for (int r = 0; r < 2; ++r) {
                CHECK(d.f_grad[k](r, 0) ==
                      doctest::Approx((mu.f(r, 0) - md.f(r, 0)) / (2 * h)).epsilon(1e-7));
                for (int c = 0; c < 2; ++c)
                    CHECK(d.v_grad[k](r, c) ==
                          doctest::Approx((mu.v(r, c) - md.v(r, c)) / (2 * h)).epsilon(1e-7));
            }
            // second derivatives against differences of first derivatives
            for (int j = 0; j < Theta::kDim; ++j) {
                const ModelDerivs du = model_derivs(up);
                const ModelDerivs dd = model_derivs(down);
                for (int r = 0; r < 2; ++r) {
                    CHECK(d.f_hess[j][k](r, 0) ==
                          doctest::Approx((du.f_grad[j](r, 0) - dd.f_grad[j](r, 0)) / (2 * h))
                              .epsilon(1e-7));
                    for (int c = 0; c < 2; ++c)
                        CHECK(d.v_hess[j][k](r, c) ==
                              doctest::Approx((du.v_grad[j](r, c) - dd.v_grad[j](r, c)) /
                                              (2 * h))
                                  .epsilon(1e-7));
                }
            }
        }
    }
}

TEST_CASE("derivative-of-inverse convention in the diagonal case") {
    const Theta theta{0, 0, 0, 1, 1};
    const MarginalMoments m = marginal_moments(theta, Mat(2, 2));
    const ModelDerivs d = model_derivs(theta);
    const Mat di = dinv(inverse(m.v), d.v_grad[3]);
    CHECK(approx_equal(di, Mat(2, 2, {-1, 0, 0, 0}), 1e-14));
}

TEST_CASE("expected information is symmetric and matches the score-covariance oracle") {
    std::mt19937 gen(41);
    const Dataset data = random_dataset(gen, 3);
    const Theta theta{-0.5, 0.8, -1.0, 0.6, 1.1};
    const Mat info = expected_info(theta, data);
    for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 5; ++k) CHECK(std::fabs(info(j, k) - info(k, j)) < 1e-9);

    // Bartlett identity: cov(score) over datasets simulated from the model
    const int reps = 20000;
    std::array<std::vector<double>, 5> draws;
    for (auto& v : draws) v.reserve(reps);
    RngStream rng(99, 0, 0);
    for (int r = 0; r < reps; ++r) {
        Dataset sim = data;
        for (auto& s : sim.studies) {
            const MarginalMoments m = marginal_moments(theta, s.gamma);
            const double l11 = std::sqrt(m.v(0, 0));
            const double l21 = m.v(1, 0) / l11;
            const double l22 = std::sqrt(m.v(1, 1) - l21 * l21);
            const double z0 = rng.normal(), z1 = rng.normal();
            s.eta_hat = m.f(0, 0) + l11 * z0;
            s.xi_hat = m.f(1, 0) + l21 * z0 + l22 * z1;
        }
        const Vec5 s = score(theta, sim);
        for (int k = 0; k < 5; ++k) draws[k].push_back(s[k]);
    }
    std::array<double, 5> mean{};
    for (int k = 0; k < 5; ++k) {
        for (double v : draws[k]) mean[k] += v;
        mean[k] /= reps;
    }
    for (int j = 0; j < 5; ++j) {
        for (int k = j; k < 5; ++k) {
            double cov = 0.0, var_prod = 0.0;
            for (int r = 0; r < reps; ++r) {
                const double p = (draws[j][r] - mean[j]) * (draws[k][r] - mean[k]);
                cov += p;
                var_prod += p * p;
            }
            cov /= (reps - 1);
            const double se =
                std::sqrt((var_prod / reps - cov * cov) / reps);
            // 3.5 sigma: 15 simultaneous entries make an occasional 3-sigma
            // excursion routine
            CHECK(std::fabs(info(j, k) - cov) < 3.5 * se + 1e-12);
        }
    }
}

TEST_CASE("observed information is symmetric and sane at a zero-residual point") {
    const Dataset d = single_study(0.0, 0.0, Mat(2, 2));
    const Theta theta{0, 1, 0, 1, 1};
    const Mat j = observed_info(theta, d);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) CHECK(std::fabs(j(a, b) - j(b, a)) < 1e-6);
    // with y = f the (beta0, beta0) entry reduces to (V^-1)_{11}
    const Mat v_inv = inverse(marginal_moments(theta, Mat(2, 2)).v);
    CHECK(j(0, 0) == doctest::Approx(v_inv(0, 0)).epsilon(1e-6));
}

TEST_CASE("observed approaches expected information in large samples") {
    // law of large numbers at n = 5000, entries compared on the scale of the
    // matching diagonal magnitudes
    const Theta truth{-0.4, 0.9, -1.2, 0.5, 0.8};
    RngStream rng(512, 0, 0);
    Dataset data;
    const int n = 5000;
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> var(0.02, 0.3);
    for (int i = 0; i < n; ++i) {
        const Mat gamma(2, 2, {var(gen), 0, 0, var(gen)});
        const MarginalMoments m = marginal_moments(truth, gamma);
        const double l11 = std::sqrt(m.v(0, 0));
        const double l21 = m.v(1, 0) / l11;
        const double l22 = std::sqrt(m.v(1, 1) - l21 * l21);
        const double z0 = rng.normal(), z1 = rng.normal();
        data.studies.push_back({m.f(0, 0) + l11 * z0, m.f(1, 0) + l21 * z0 + l22 * z1, gamma});
    }
    const Mat i_mat = expected_info(truth, data);
    const Mat j_mat = observed_info(truth, data);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            const double scale = std::sqrt(i_mat(a, a) * i_mat(b, b));
            CHECK(std::fabs(j_mat(a, b) - i_mat(a, b)) < 0.05 * scale);
        }
}
