// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nk {

/// Dense vector of 64-bit floats. All model state (latents, features,
/// measurements) is carried in this type.
using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    static Mat identity(int n);

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// y = M x
Vec matvec(const Mat& m, const Vec& x);
// y = M^T x
Vec matvec_t(const Mat& m, const Vec& x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);

// out += dy * x^T  (rank-1 accumulate for weight gradients)
void outer_add(Mat& out, const Vec& dy, const Vec& x);

void add_inplace(Vec& y, const Vec& x);
void add_inplace(Mat& y, const Mat& x);
void scale_inplace(Vec& y, double s);
void scale_inplace(Mat& y, double s);

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec hadamard(const Vec& a, const Vec& b);
double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec concat(std::span<const Vec> parts);
Vec concat(const Vec& a, const Vec& b);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

/// Cholesky factor L of a symmetric positive-definite matrix (m = L L^T).
/// Throws nk::NumericalError if the matrix is not positive definite.
Mat cholesky(const Mat& m);
/// Solve m x = b via the Cholesky factorization of m.
Vec cholesky_solve(const Mat& chol_l, const Vec& b);
/// Inverse of a symmetric positive-definite matrix via Cholesky.
Mat spd_inverse(const Mat& m);

/// Raised when matrix/vector dimensions do not line up with the model
/// configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on non-finite values, singular systems, or training divergence.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

void require(bool cond, const std::string& what);

}  // namespace nk
