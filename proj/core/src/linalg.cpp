// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/linalg.hpp"

#include <cmath>

namespace nk {

void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vec matvec(const Mat& m, const Vec& x) {
    require(m.cols == static_cast<int>(x.size()), "matvec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = &m.a[static_cast<size_t>(r) * m.cols];
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Vec matvec_t(const Mat& m, const Vec& x) {
    require(m.rows == static_cast<int>(x.size()), "matvec_t: dimension mismatch");
    Vec y(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = &m.a[static_cast<size_t>(r) * m.cols];
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

Mat matmul(const Mat& a, const Mat& b) {
    require(a.cols == b.rows, "matmul: dimension mismatch");
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Mat transpose(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
    return out;
}

void outer_add(Mat& out, const Vec& dy, const Vec& x) {
    require(out.rows == static_cast<int>(dy.size()) && out.cols == static_cast<int>(x.size()),
            "outer_add: dimension mismatch");
    for (int r = 0; r < out.rows; ++r) {
        double* row = &out.a[static_cast<size_t>(r) * out.cols];
        const double d = dy[r];
        if (d == 0.0) continue;
        for (int c = 0; c < out.cols; ++c) row[c] += d * x[c];
    }
}

void add_inplace(Vec& y, const Vec& x) {
    require(y.size() == x.size(), "add_inplace: size mismatch");
    for (size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

void add_inplace(Mat& y, const Mat& x) {
    require(y.same_shape(x), "add_inplace: shape mismatch");
    for (size_t i = 0; i < y.a.size(); ++i) y.a[i] += x.a[i];
}

void scale_inplace(Vec& y, double s) {
    for (double& v : y) v *= s;
}

void scale_inplace(Mat& y, double s) {
    for (double& v : y.a) v *= s;
}

Vec add(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "add: size mismatch");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec sub(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "sub: size mismatch");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec hadamard(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "hadamard: size mismatch");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

double dot(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "dot: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec concat(std::span<const Vec> parts) {
    size_t n = 0;
    for (const Vec& p : parts) n += p.size();
    Vec out;
    out.reserve(n);
    for (const Vec& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Mat& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

Mat cholesky(const Mat& m) {
    require(m.rows == m.cols, "cholesky: matrix not square");
    const int n = m.rows;
    Mat l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = m(i, j);
            for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0 || !std::isfinite(acc))
                    throw NumericalError("cholesky: matrix not positive definite");
                l(i, j) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return l;
}

Vec cholesky_solve(const Mat& chol_l, const Vec& b) {
    const int n = chol_l.rows;
    require(static_cast<int>(b.size()) == n, "cholesky_solve: dimension mismatch");
    Vec y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double acc = b[i];
        for (int k = 0; k < i; ++k) acc -= chol_l(i, k) * y[k];
        y[i] = acc / chol_l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double acc = y[i];
        for (int k = i + 1; k < n; ++k) acc -= chol_l(k, i) * x[k];
        x[i] = acc / chol_l(i, i);
    }
    return x;
}

Mat spd_inverse(const Mat& m) {
    const Mat l = cholesky(m);
    const int n = m.rows;
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vec col = cholesky_solve(l, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

}  // namespace nk
