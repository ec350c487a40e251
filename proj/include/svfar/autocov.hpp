#pragma once

#include <cstddef>

#include "svfar/funcspace.hpp"

namespace svfar {

/// Lag-h sample autocovariance matrix function
///   S_h(u, v) = (n - h)^{-1} sum_{t=1}^{n-h} X_t(u) X_{t+h}(v)^T
/// as a p x p KernelMatrix. With `center` the pointwise variable means are
/// removed first; the default assumes mean-zero curves.
KernelMatrix sample_autocovariance(const CurvePanel& panel, std::size_t h, bool center = false);

/// Subtracts each variable's pointwise sample mean.
CurvePanel centering(const CurvePanel& panel);

struct CovarianceError {
    double max = 0.0;
    double frobenius = 0.0;
};

/// ||est - truth||_max and ||est - truth||_F in functional norms.
CovarianceError covariance_error(const KernelMatrix& est, const KernelMatrix& truth);

/// Dense (pT x pT) symmetric matrix W^{1/2} S W^{1/2} whose eigenvalues are
/// those of the grid-discretised operator with kernel S. Rayleigh quotients
/// of this matrix are <Phi, S Phi> for Phi expressed in W^{1/2}-scaled values.
Eigen::MatrixXd weighted_operator_matrix(const KernelMatrix& S);

}  // namespace svfar
