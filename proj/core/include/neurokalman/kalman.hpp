// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "neurokalman/linalg.hpp"

namespace nk::kf {

/// x' = A x + u + w,  w ~ N(0, Q);   y = H x + v,  v ~ N(0, R)
struct LinearGaussianModel {
    Mat A;
    Mat H;
    Mat Q;
    Mat R;
};

struct GaussianBelief {
    Vec mean;
    Mat covariance;
};

/// Prediction step: mean' = A mean + control, cov' = A cov A^T + Q.
GaussianBelief predict(const GaussianBelief& belief, const LinearGaussianModel& model,
                       const Vec& control);

/// Measurement update:
///   K = cov H^T (H cov H^T + R)^-1
///   mean' = mean + K (y - H mean)
///   cov'  = (I - K H) cov
/// The innovation covariance is inverted via Cholesky; a singular system
/// raises NumericalError.
GaussianBelief update(const GaussianBelief& belief, const LinearGaussianModel& model, const Vec& y);

/// Precision-weighted fusion of a diagonal-covariance prior with a
/// diagonal-covariance observation:
///   argmin_z 1/2 |z - mean|^2_{Sp^-1} + 1/2 |z - obs|^2_{So^-1}
///     = (Sp^-1 + So^-1)^-1 (Sp^-1 mean + So^-1 obs)
/// Restricted to strictly positive diagonal covariances.
Vec argmin_fusion(const GaussianBelief& prior, const Vec& obs_mean, const Mat& obs_cov);

}  // namespace nk::kf
