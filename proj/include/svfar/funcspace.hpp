#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace svfar {

/// Sampled curve values aligned with a Grid.
using Curve = Eigen::VectorXd;
/// Bivariate kernel K(u_r, v_s) sampled on grid x grid; rows index u.
using BivariateKernel = Eigen::MatrixXd;

/// Ascending sample points in [0, 1] with trapezoidal quadrature weights.
class Grid {
public:
    Grid() = default;
    /// Trapezoidal weights are derived from the points.
    explicit Grid(std::vector<double> points);

    /// T equally spaced points 0 = u_1 < ... < u_T = 1.
    static Grid uniform(std::size_t T);

    std::size_t size() const { return points_.size(); }
    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double point(std::size_t s) const { return points_(static_cast<Eigen::Index>(s)); }
    double weight(std::size_t s) const { return weights_(static_cast<Eigen::Index>(s)); }

    /// Same points to the last bit.
    bool same_as(const Grid& other) const;
    /// Hex FNV-1a digest of the point values, used in serialized headers.
    std::string hash() const;

private:
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
};

/// n x p panel of curves on a shared grid. Storage is one n x T matrix per
/// variable; row t holds X_tj at the grid points.
class CurvePanel {
public:
    CurvePanel() = default;
    CurvePanel(std::size_t n, std::size_t p, Grid grid);
    CurvePanel(Grid grid, std::vector<Eigen::MatrixXd> variables);

    std::size_t n() const { return n_; }
    std::size_t p() const { return vars_.size(); }
    std::size_t T() const { return grid_.size(); }
    const Grid& grid() const { return grid_; }

    /// n x T matrix of variable j.
    const Eigen::MatrixXd& variable(std::size_t j) const { return vars_.at(j); }
    Eigen::MatrixXd& variable(std::size_t j) { return vars_.at(j); }

    Curve curve(std::size_t t, std::size_t j) const { return vars_.at(j).row(static_cast<Eigen::Index>(t)).transpose(); }
    void set_curve(std::size_t t, std::size_t j, const Curve& c);

private:
    std::size_t n_ = 0;
    Grid grid_;
    std::vector<Eigen::MatrixXd> vars_;
};

/// p_rows x p_cols matrix of bivariate kernels sharing one grid.
class KernelMatrix {
public:
    KernelMatrix() = default;
    /// Zero-initialised blocks.
    KernelMatrix(std::size_t p_rows, std::size_t p_cols, Grid grid);

    std::size_t p_rows() const { return p_rows_; }
    std::size_t p_cols() const { return p_cols_; }
    const Grid& grid() const { return grid_; }

    const BivariateKernel& block(std::size_t j, std::size_t k) const { return blocks_.at(j * p_cols_ + k); }
    BivariateKernel& block(std::size_t j, std::size_t k) { return blocks_.at(j * p_cols_ + k); }

    KernelMatrix operator-(const KernelMatrix& rhs) const;

private:
    std::size_t p_rows_ = 0;
    std::size_t p_cols_ = 0;
    Grid grid_;
    std::vector<BivariateKernel> blocks_;
};

/// sum_s w_s f(u_s) g(u_s).
double inner_product(const Grid& grid, const Curve& f, const Curve& g);
double norm(const Grid& grid, const Curve& f);

/// (Kf)(u_r) = sum_s w_s K(u_r, u_s) f(u_s).
Curve kernel_apply(const Grid& grid, const BivariateKernel& K, const Curve& f);

/// Hilbert-Schmidt norm (double integral of K^2)^{1/2} by tensor quadrature.
double hs_norm(const Grid& grid, const BivariateKernel& K);

enum class FunctionalNorm { max, frobenius, linf };
FunctionalNorm parse_functional_norm(std::string_view name);

/// max_{j,k} ||M_jk||_S, (sum ||M_jk||_S^2)^{1/2}, or max_j sum_k ||M_jk||_S.
double functional_norm(const KernelMatrix& M, FunctionalNorm kind);

/// p_rows x p_cols matrix of per-block HS norms.
Eigen::MatrixXd block_hs_norms(const KernelMatrix& M);

enum class BlockNorm { max_q, l1_q, frobenius };
BlockNorm parse_block_norm(std::string_view name);

/// q-block norms of a matrix partitioned into q x q blocks:
/// max_{j,k} ||B_jk||_F, max_k sum_j ||B_jk||_F, or the plain Frobenius norm.
double block_matrix_norm(const Eigen::MatrixXd& B, std::size_t q, BlockNorm kind);

}  // namespace svfar
