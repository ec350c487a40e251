#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "svfar/funcspace.hpp"
#include "svfar/rng.hpp"

namespace svfar {

/// Clamped B-spline basis on [0, 1] with uniform interior knots.
class BsplineBasis {
public:
    BsplineBasis() = default;
    BsplineBasis(const Grid& grid, std::size_t G, std::size_t degree);

    std::size_t dim() const { return G_; }
    std::size_t degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }

    /// G x T matrix of basis values on the grid it was built for.
    const Eigen::MatrixXd& eval() const { return eval_; }

    /// Values (deriv = 0) or derivatives of all G basis functions at u.
    Eigen::VectorXd evaluate(double u, std::size_t deriv = 0) const;

    /// G x T matrix of values or derivatives at arbitrary points.
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& points, std::size_t deriv = 0) const;

    /// Exact integrals of each basis function over [0, 1].
    Eigen::VectorXd integrals() const;

    /// Coefficients c with c^T b(u) = u (Greville abscissae).
    Eigen::VectorXd greville() const;

private:
    std::size_t G_ = 0;
    std::size_t degree_ = 0;
    std::vector<double> knots_;
    Eigen::MatrixXd eval_;
};

BsplineBasis build_basis(const Grid& grid, std::size_t G, std::size_t degree);

struct PenaltyMatrices {
    Eigen::MatrixXd J;  ///< int b b^T
    Eigen::MatrixXd Q;  ///< int b'' b''^T
};

/// Gram and roughness matrices, integrated exactly span by span with
/// Gauss-Legendre quadrature. With `roughness` false Q is left at zero,
/// which is the only option for degree < 2.
PenaltyMatrices penalty_matrices(const BsplineBasis& basis, bool roughness = true);

/// Regularised FPCA of one functional variable.
struct FpcaResult {
    std::size_t q = 0;
    double eta = 0.0;
    Eigen::VectorXd eigenvalues;      ///< q leading penalised variances, nonincreasing
    Eigen::VectorXd all_eigenvalues;  ///< all G penalised variances
    Eigen::MatrixXd coefficients;     ///< G x q spline coefficients of the eigenfunctions
    Eigen::MatrixXd eigenfunctions;   ///< T x q grid values of the eigenfunctions
    Eigen::MatrixXd scores;           ///< n x q FPC scores of the smoothed centred curves
    Eigen::VectorXd mean_coefficients;
    Curve mean;                       ///< smoothed mean curve on the grid
};

/// n x G least-squares spline coefficients of gridded curves (rows), with a
/// 1e-10 ridge for conditioning.
Eigen::MatrixXd spline_coefficients(const Grid& grid, const BsplineBasis& basis, const Eigen::MatrixXd& curves);

/// Penalised FPCA: maximise Var<phi, X> / (||phi||^2 + eta ||phi''||^2).
/// `curves` is n x T (one curve per row on `grid`).
FpcaResult regularized_fpca(const Grid& grid, const Eigen::MatrixXd& curves, std::size_t q, double eta,
                            const BsplineBasis& basis, const PenaltyMatrices& penalties);

/// n x q matrix of <X_t, phi_l> for curves (n x T) and eigenfunctions (T x q).
Eigen::MatrixXd fpc_scores(const Grid& grid, const Eigen::MatrixXd& curves, const Eigen::MatrixXd& eigenfunctions);

struct CvSelection {
    std::size_t q = 0;
    double eta = 0.0;
    /// cv_error(a, b) for q_grid[a], eta_grid[b]; +inf where q was infeasible.
    Eigen::MatrixXd cv_error;
};

/// K-fold split of 0..n-1 after a seeded shuffle: fold f holds the shuffled
/// positions [f n / K, (f + 1) n / K).
std::vector<std::vector<std::size_t>> cv_folds(std::size_t n, std::size_t K, Rng& rng);

/// K-fold cross-validated choice of (q, eta) for one variable.
/// Held-out curves are reconstructed as mean + sum_l <W - mean, phi_l> phi_l
/// with the training mean and eigenfunctions, the inner products taken
/// between smoothed held-out curves and phi_l. The error is the mean squared
/// grid difference to the raw observations. Ties (within 1e-6 relative)
/// go to the smaller q, then the smaller eta.
CvSelection cv_select(const Grid& grid, const Eigen::MatrixXd& observations, const std::vector<std::size_t>& q_grid,
                      const std::vector<double>& eta_grid, std::size_t K, Rng& rng, const BsplineBasis& basis,
                      const PenaltyMatrices& penalties);

struct FpcaOptions {
    std::size_t G = 15;
    std::size_t degree = 3;
    std::vector<std::size_t> q_grid{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> eta_grid{0.0, 1e-7, 1e-6, 1e-5, 1e-4};
    std::size_t folds = 5;
};

/// Per-variable CV selection followed by a full-sample fit. Variables run
/// in parallel; variable j draws its folds from stream `rng.split(j)`.
std::vector<FpcaResult> panel_fpca(const CurvePanel& panel, const FpcaOptions& options, const Rng& rng);

}  // namespace svfar
