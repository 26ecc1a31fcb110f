#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crr/linalg.hpp"

using crr::Mat;

namespace {

std::mt19937 rng(20240917);

Mat random_matrix(int rows, int cols, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

// B'B + n I is symmetric positive definite and well conditioned.
Mat random_spd(int n) {
    const Mat b = random_matrix(n, n);
    Mat m = b.transpose() * b;
    for (int i = 0; i < n; ++i) m(i, i) += n;
    return m;
}

}  // namespace

TEST_CASE("identity inverts to itself") {
    CHECK(approx_equal(crr::inverse(Mat::identity(5)), Mat::identity(5), 1e-14));
}

TEST_CASE("analytic 2x2 inverse") {
    const Mat m(2, 2, {2, 1, 1, 1});
    const Mat expected(2, 2, {1, -1, -1, 2});
    CHECK(approx_equal(crr::inverse(m), expected, 1e-14));
}

TEST_CASE("random SPD 5x5: product with inverse is the identity") {
    for (int trial = 0; trial < 50; ++trial) {
        const Mat m = random_spd(5);
        CHECK(approx_equal(m * crr::inverse(m), Mat::identity(5), 1e-10));
    }
}

TEST_CASE("singular matrix raises with the determinant attached") {
    const Mat m(2, 2, {1, 2, 2, 4});
    CHECK_THROWS_AS((void)crr::inverse(m), crr::SingularMatrixError);
    try {
        (void)crr::inverse(m);
    } catch (const crr::SingularMatrixError& err) {
        CHECK(std::fabs(err.det) < 1e-12);
    }
}

TEST_CASE("determinant basics") {
    CHECK(crr::det(Mat::identity(4)) == doctest::Approx(1.0));
    CHECK(crr::det(Mat(2, 2, {2, 1, 1, 1})) == doctest::Approx(1.0));
    Mat d(5, 5);
    const double vals[] = {2, 3, 5, 7, 11};
    for (int i = 0; i < 5; ++i) d(i, i) = vals[i];
    CHECK(crr::det(d) == doctest::Approx(2.0 * 3 * 5 * 7 * 11));
}

TEST_CASE("det is multiplicative on well-conditioned matrices") {
    for (int trial = 0; trial < 50; ++trial) {
        const Mat a = random_spd(4);
        const Mat b = random_spd(4);
        const double lhs = crr::det(a * b);
        const double rhs = crr::det(a) * crr::det(b);
        CHECK(std::fabs(lhs - rhs) <= 1e-9 * std::fabs(rhs));
    }
}

TEST_CASE("trace_prod identities") {
    CHECK(crr::trace_prod(Mat::identity(2), Mat::identity(2)) == doctest::Approx(2.0));
    const Mat a = random_spd(5);
    CHECK(crr::trace_prod(a, crr::inverse(a)) == doctest::Approx(5.0));
}

TEST_CASE("trace_prod of a 4-factor chain matches multiply-then-trace") {
    for (int trial = 0; trial < 50; ++trial) {
        const Mat a = random_matrix(2, 2), b = random_matrix(2, 2);
        const Mat c = random_matrix(2, 2), d = random_matrix(2, 2);
        const double fused = crr::trace_prod(a, b, c, d);
        const double naive = crr::trace(a * b * c * d);
        CHECK(std::fabs(fused - naive) < 1e-12);
    }
}

TEST_CASE("trace_prod is cyclic") {
    for (int trial = 0; trial < 50; ++trial) {
        const Mat a = random_matrix(3, 4);
        const Mat b = random_matrix(4, 3);
        CHECK(std::fabs(crr::trace_prod(a, b) - crr::trace_prod(b, a)) < 1e-12);
    }
}

TEST_CASE("inverse of inverse returns the original") {
    for (int trial = 0; trial < 30; ++trial) {
        const Mat m = random_spd(5);
        CHECK(approx_equal(crr::inverse(crr::inverse(m)), m, 1e-9));
    }
}

TEST_CASE("shape mismatches are rejected") {
    CHECK_THROWS_AS((void)(random_matrix(2, 3) * random_matrix(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS((void)crr::det(random_matrix(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS((void)crr::trace_prod(random_matrix(2, 3), random_matrix(3, 3)),
                    std::invalid_argument);
}

TEST_CASE("drop_row_col removes the right entries") {
    const Mat m(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Mat sub = m.drop_row_col(1, 1);
    CHECK(sub.rows() == 2);
    CHECK(sub(0, 0) == 1.0);
    CHECK(sub(0, 1) == 3.0);
    CHECK(sub(1, 0) == 7.0);
    CHECK(sub(1, 1) == 9.0);
}

TEST_CASE("solve agrees with inverse-multiply") {
    const Mat a = random_spd(5);
    const Mat b = random_matrix(5, 2);
    CHECK(approx_equal(crr::solve(a, b), crr::inverse(a) * b, 1e-10));
}
