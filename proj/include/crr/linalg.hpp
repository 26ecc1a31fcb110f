#pragma once

// Dense linear algebra for the small fixed dimensions this project needs:
// 2x2 per-study covariance matrices and 5x5 parameter-space matrices.
// Storage is fixed-capacity (max dim 8), so matrices live on the stack.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace crr {

class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(double determinant)
        : std::runtime_error("matrix is numerically singular (det = " +
                             std::to_string(determinant) + ")"),
          det(determinant) {}
    double det;
};

class Mat {
public:
    static constexpr int kMaxDim = 8;

    Mat() : rows_(0), cols_(0), a_{} {}
    Mat(int rows, int cols);
    Mat(int rows, int cols, std::initializer_list<double> entries);

    static Mat identity(int n);
    static Mat zeros(int rows, int cols) { return Mat(rows, cols); }
    static Mat col_vec(std::initializer_list<double> entries);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * kMaxDim + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * kMaxDim + j]; }

    Mat transpose() const;

    // Removes one row and one column; used for nuisance sub-blocks.
    Mat drop_row_col(int row, int col) const;

    Mat& operator+=(const Mat& other);
    Mat& operator-=(const Mat& other);
    Mat& operator*=(double s);

private:
    int rows_, cols_;
    std::array<double, kMaxDim * kMaxDim> a_;
};

Mat operator+(Mat lhs, const Mat& rhs);
Mat operator-(Mat lhs, const Mat& rhs);
Mat operator*(const Mat& lhs, const Mat& rhs);
Mat operator*(double s, Mat m);

bool approx_equal(const Mat& a, const Mat& b, double tol);

// LU with partial pivoting. inverse() throws SingularMatrixError when the
// pivoted determinant magnitude falls below 1e-300.
Mat inverse(const Mat& m);
double det(const Mat& m);

double trace(const Mat& m);

// Trace of a left-to-right matrix product. Accumulates row-by-row instead of
// materializing the full product.
double trace_prod(const Mat& a, const Mat& b);

template <typename... Rest>
double trace_prod(const Mat& a, const Mat& b, const Rest&... rest) {
    return trace_prod(a * b, rest...);
}

// Solves a x = b for square a (b may have several columns).
Mat solve(const Mat& a, const Mat& b);

}  // namespace crr
