#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace svfar {

/// Finite-rank VAR(1) surrogate x_t = C x_{t-1} + e_t, e_t ~ N(0, sigma2 I),
/// for a curve process living in a known d-dimensional orthonormal basis.
struct SpectralModel {
    Eigen::MatrixXd C;
    double sigma2 = 1.0;
    Eigen::MatrixXd S0;  ///< stationary covariance, S0 = C S0 C^T + sigma2 I

    std::size_t basis_dim() const { return static_cast<std::size_t>(C.rows()); }
};

struct StabilityReport {
    double m_fx = 1.0;        ///< functional stability measure M(F_X)
    double m1_fx = 1.0;       ///< one-sparse version (single basis coordinate)
    double op_norm_A = 0.0;   ///< ||A||_L = largest singular value of C
    double spec_radius = 0.0; ///< rho(A) = rho(C)
    double theta_max = 0.0;   ///< grid frequency attaining m_fx
    std::size_t theta_grid_size = 0;
};

/// |largest-magnitude eigenvalue| of a square matrix.
///
/// Uses Gelfand's formula rho(B) = lim ||B^k||^{1/k} evaluated with k = 2^m
/// by repeated normalised squaring. This is the power method applied to the
/// whole matrix, so complex-conjugate dominant pairs and defective
/// (Jordan) structure are handled without special cases; the error decays
/// like log(k)/k, which is below 1e-13 after the 64 squarings used here.
double spectral_radius(const Eigen::MatrixXd& B);

/// Solves S = C S C^T + sigma2 I by the doubling iteration
/// S <- S + A S A^T, A <- A^2, stopping when the update is below 1e-12 in
/// max norm. Throws NonStationaryError when rho(C) >= 1.
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& C, double sigma2);

/// Validates C and sigma2 and computes S0.
SpectralModel make_spectral_model(const Eigen::MatrixXd& C, double sigma2);

/// Coefficient matrix [[a, b], [0, a]] of the two-variable illustrative model.
Eigen::MatrixXd illustrative_transition(double a, double b);

/// f(theta) = sigma2 / (2 pi) (I - C e^{-i theta})^{-1} (I - C^T e^{i theta})^{-1}
///          = (2 pi)^{-1} sum_h Gamma_h e^{-i h theta},  Gamma_h = C^h S0 (h >= 0).
Eigen::MatrixXcd spectral_density(const SpectralModel& model, double theta);

/// Uniform periodic frequency grid theta_i = -pi + 2 pi i / N, i = 0..N-1.
std::vector<double> theta_grid(std::size_t N);

/// M = max over the theta grid of lambda_max(2 pi S0^{-1/2} f(theta) S0^{-1/2}),
/// together with ||C||, rho(C) and the one-sparse measure
/// max_theta max_j 2 pi f_jj(theta) / S0_jj.
StabilityReport stability_measure(const SpectralModel& model, std::size_t theta_grid_size = 4096);

/// Lag-h autocovariance recovered from the density on the theta grid,
/// (2 pi / N) sum_i f(theta_i) e^{i h theta_i}.
Eigen::MatrixXd inverse_transform(const SpectralModel& model, int h, std::size_t theta_grid_size = 4096);

struct Figure1Row {
    double a = 0.0;
    double b = 0.0;
    double opnorm = 0.0;
    double m = 0.0;
};

/// ||A||_L and M(F_X) of the illustrative model over an (a, b) grid.
std::vector<Figure1Row> figure1_curves(const std::vector<double>& a_values, const std::vector<double>& b_values,
                                       std::size_t theta_grid_size = 4096);

}  // namespace svfar
