// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/kalman.hpp"

#include <cmath>

namespace nk::kf {

GaussianBelief predict(const GaussianBelief& belief, const LinearGaussianModel& model,
                       const Vec& control) {
    const int n = model.A.rows;
    require(model.A.cols == n && model.Q.rows == n && model.Q.cols == n,
            "kf::predict: inconsistent model dimensions");
    require(static_cast<int>(belief.mean.size()) == n && belief.covariance.rows == n,
            "kf::predict: belief dimension mismatch");
    require(control.size() == belief.mean.size(), "kf::predict: control dimension mismatch");

    GaussianBelief out;
    out.mean = add(matvec(model.A, belief.mean), control);
    Mat acat = matmul(matmul(model.A, belief.covariance), transpose(model.A));
    add_inplace(acat, model.Q);
    out.covariance = std::move(acat);
    return out;
}

GaussianBelief update(const GaussianBelief& belief, const LinearGaussianModel& model, const Vec& y) {
    const int n = belief.covariance.rows;
    const int p = model.H.rows;
    require(model.H.cols == n, "kf::update: H column count mismatch");
    require(static_cast<int>(y.size()) == p, "kf::update: measurement dimension mismatch");
    require(model.R.rows == p && model.R.cols == p, "kf::update: R dimension mismatch");

    const Mat ht = transpose(model.H);
    const Mat pht = matmul(belief.covariance, ht);
    Mat s = matmul(model.H, pht);
    add_inplace(s, model.R);

    Mat s_inv;
    try {
        s_inv = spd_inverse(s);
    } catch (const NumericalError&) {
        throw NumericalError("kf::update: innovation covariance is singular or indefinite");
    }
    const Mat k = matmul(pht, s_inv);

    Vec innovation = sub(y, matvec(model.H, belief.mean));

    GaussianBelief out;
    out.mean = add(belief.mean, matvec(k, innovation));
    Mat ikh = Mat::identity(n);
    const Mat kh = matmul(k, model.H);
    for (size_t i = 0; i < ikh.a.size(); ++i) ikh.a[i] -= kh.a[i];
    out.covariance = matmul(ikh, belief.covariance);
    return out;
}

Vec argmin_fusion(const GaussianBelief& prior, const Vec& obs_mean, const Mat& obs_cov) {
    const int n = static_cast<int>(prior.mean.size());
    require(prior.covariance.rows == n && prior.covariance.cols == n,
            "argmin_fusion: prior covariance dimension mismatch");
    require(static_cast<int>(obs_mean.size()) == n, "argmin_fusion: observation dimension mismatch");
    require(obs_cov.rows == n && obs_cov.cols == n, "argmin_fusion: obs covariance dimension mismatch");

    Vec out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double sp = prior.covariance(i, i);
        const double so = obs_cov(i, i);
        require(sp > 0.0 && so > 0.0, "argmin_fusion: non-positive diagonal covariance entry");
        const double wp = 1.0 / sp;
        const double wo = 1.0 / so;
        out[static_cast<size_t>(i)] =
            (wp * prior.mean[static_cast<size_t>(i)] + wo * obs_mean[static_cast<size_t>(i)]) / (wp + wo);
    }
    return out;
}

}  // namespace nk::kf
