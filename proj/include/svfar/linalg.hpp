#pragma once

#include <Eigen/Dense>

namespace svfar::linalg {

/// Symmetric square root of a symmetric PSD matrix; tiny negative
/// eigenvalues from rounding are clamped to zero.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s);

/// Square root and floored inverse square root of a symmetric PSD matrix.
/// Eigenvalues below `rel_floor * max_eigenvalue` are raised to that floor
/// before inverting and `floored` is set.
struct SqrtPair {
    Eigen::MatrixXd sqrt;
    Eigen::MatrixXd inv_sqrt;
    bool floored = false;
};
SqrtPair sqrt_with_floored_inverse(const Eigen::MatrixXd& s, double rel_floor = 1e-10);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration, stopping
/// when the Rayleigh quotient changes by less than `rel_tol` relatively.
double max_eigenvalue_psd(const Eigen::MatrixXd& g, double rel_tol = 1e-8, int max_iter = 100000);

}  // namespace svfar::linalg
