#include "crr/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace crr {

namespace {

void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("linalg: ") + what);
}

// Factors a copy of m in place: returns pivoted LU, permutation sign and a
// singularity flag. Used by inverse(), det() and solve().
struct LuFactors {
    Mat lu;
    std::array<int, Mat::kMaxDim> perm;
    double sign = 1.0;
    bool singular = false;
};

LuFactors lu_factor(const Mat& m) {
    const int n = m.rows();
    LuFactors f{m, {}, 1.0, false};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(f.lu(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::fabs(f.lu(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best == 0.0) { f.singular = true; return f; }
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        const double pval = f.lu(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = f.lu(i, k) / pval;
            f.lu(i, k) = l;
            for (int j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
        }
    }
    return f;
}

double lu_det(const LuFactors& f, int n) {
    if (f.singular) return 0.0;
    double d = f.sign;
    for (int i = 0; i < n; ++i) d *= f.lu(i, i);
    return d;
}

}  // namespace

Mat::Mat(int rows, int cols) : rows_(rows), cols_(cols), a_{} {
    check_shape(rows >= 0 && cols >= 0 && rows <= kMaxDim && cols <= kMaxDim,
                "dimension exceeds fixed capacity");
}

Mat::Mat(int rows, int cols, std::initializer_list<double> entries) : Mat(rows, cols) {
    check_shape(static_cast<int>(entries.size()) == rows * cols,
                "initializer size does not match shape");
    auto it = entries.begin();
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) (*this)(i, j) = *it++;
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::col_vec(std::initializer_list<double> entries) {
    Mat m(static_cast<int>(entries.size()), 1);
    int i = 0;
    for (double v : entries) m(i++, 0) = v;
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat Mat::drop_row_col(int row, int col) const {
    check_shape(row >= 0 && row < rows_ && col >= 0 && col < cols_, "drop index out of range");
    Mat r(rows_ - 1, cols_ - 1);
    for (int i = 0, ri = 0; i < rows_; ++i) {
        if (i == row) continue;
        for (int j = 0, rj = 0; j < cols_; ++j) {
            if (j == col) continue;
            r(ri, rj++) = (*this)(i, j);
        }
        ++ri;
    }
    return r;
}

Mat& Mat::operator+=(const Mat& other) {
    check_shape(rows_ == other.rows_ && cols_ == other.cols_, "shape mismatch in +");
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) (*this)(i, j) += other(i, j);
    return *this;
}

Mat& Mat::operator-=(const Mat& other) {
    check_shape(rows_ == other.rows_ && cols_ == other.cols_, "shape mismatch in -");
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) (*this)(i, j) -= other(i, j);
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) (*this)(i, j) *= s;
    return *this;
}

Mat operator+(Mat lhs, const Mat& rhs) { lhs += rhs; return lhs; }
Mat operator-(Mat lhs, const Mat& rhs) { lhs -= rhs; return lhs; }
Mat operator*(double s, Mat m) { m *= s; return m; }

Mat operator*(const Mat& lhs, const Mat& rhs) {
    check_shape(lhs.cols() == rhs.rows(), "shape mismatch in *");
    Mat r(lhs.rows(), rhs.cols());
    for (int i = 0; i < lhs.rows(); ++i)
        for (int k = 0; k < lhs.cols(); ++k) {
            const double v = lhs(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < rhs.cols(); ++j) r(i, j) += v * rhs(k, j);
        }
    return r;
}

bool approx_equal(const Mat& a, const Mat& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (std::fabs(a(i, j) - b(i, j)) > tol) return false;
    return true;
}

Mat inverse(const Mat& m) {
    check_shape(m.rows() == m.cols(), "inverse of non-square matrix");
    const int n = m.rows();
    const LuFactors f = lu_factor(m);
    const double d = lu_det(f, n);
    if (f.singular || std::fabs(d) < 1e-300) throw SingularMatrixError(d);
    Mat inv(n, n);
    for (int c = 0; c < n; ++c) {
        std::array<double, Mat::kMaxDim> x{};
        for (int i = 0; i < n; ++i) {
            double s = (f.perm[i] == c) ? 1.0 : 0.0;
            for (int j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
            x[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x[i];
            for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
            x[i] = s / f.lu(i, i);
        }
        for (int i = 0; i < n; ++i) inv(i, c) = x[i];
    }
    return inv;
}

double det(const Mat& m) {
    check_shape(m.rows() == m.cols(), "determinant of non-square matrix");
    if (m.rows() == 0) return 1.0;
    if (m.rows() == 1) return m(0, 0);
    if (m.rows() == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return lu_det(lu_factor(m), m.rows());
}

double trace(const Mat& m) {
    check_shape(m.rows() == m.cols(), "trace of non-square matrix");
    double t = 0.0;
    for (int i = 0; i < m.rows(); ++i) t += m(i, i);
    return t;
}

double trace_prod(const Mat& a, const Mat& b) {
    check_shape(a.cols() == b.rows() && b.cols() == a.rows(), "trace_prod chain not square");
    double t = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) t += a(i, k) * b(k, i);
    return t;
}

Mat solve(const Mat& a, const Mat& b) {
    check_shape(a.rows() == a.cols() && a.rows() == b.rows(), "solve shape mismatch");
    const int n = a.rows();
    const LuFactors f = lu_factor(a);
    const double d = lu_det(f, n);
    if (f.singular || std::fabs(d) < 1e-300) throw SingularMatrixError(d);
    Mat x(n, b.cols());
    for (int c = 0; c < b.cols(); ++c) {
        std::array<double, Mat::kMaxDim> y{};
        for (int i = 0; i < n; ++i) {
            double s = b(f.perm[i], c);
            for (int j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
            y[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = y[i];
            for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * y[j];
            y[i] = s / f.lu(i, i);
        }
        for (int i = 0; i < n; ++i) x(i, c) = y[i];
    }
    return x;
}

}  // namespace crr
