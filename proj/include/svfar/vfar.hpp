#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svfar/funcspace.hpp"
#include "svfar/rfpca.hpp"
#include "svfar/rng.hpp"

namespace svfar {

/// Lagged FPC-score design of a VFAR(L) model.
///
/// Predictor blocks are indexed by b = (h - 1) p + k for lag h = 1..L and
/// variable k. Each block is standardised by its own scale matrix
/// D_b = ((n - L)^{-1} V_b^T V_b)^{1/2}, so the standardised design
///   Zs_b = V_b D_b^{-1} / sqrt(n - L)
/// has orthonormal block columns and ||V_b Psi_b||_F = ||X_b||_F for the
/// standardised coefficients X_b = sqrt(n - L) D_b Psi_b.
struct VfarDesign {
    std::size_t n = 0;  ///< panel length
    std::size_t L = 0;
    std::size_t p = 0;
    std::vector<std::size_t> q;               ///< per-variable truncation q_j
    std::vector<Eigen::MatrixXd> response;    ///< V_0j, (n - L) x q_j
    std::vector<Eigen::MatrixXd> predictors;  ///< V_hk, (n - L) x q_k
    std::vector<Eigen::MatrixXd> D;           ///< per predictor block
    std::vector<Eigen::MatrixXd> D_inv;       ///< floored inverse of D
    std::vector<bool> floored;                ///< D_b was rank deficient
    std::vector<Eigen::Index> offset;         ///< first row of block b in stacked coefficients
    Eigen::MatrixXd Z;                        ///< raw predictors side by side, (n - L) x r
    Eigen::MatrixXd Zs;                       ///< standardised predictors
    double lambda_max = 0.0;                  ///< largest eigenvalue of Zs^T Zs

    std::size_t rows() const { return n - L; }
    std::size_t blocks() const { return L * p; }
    Eigen::Index r() const { return Z.cols(); }
    std::size_t block_size(std::size_t b) const { return q[b % p]; }
    std::size_t lag_of(std::size_t b) const { return b / p + 1; }
    std::size_t variable_of(std::size_t b) const { return b % p; }
    std::vector<Eigen::Index> block_rows() const;
};

/// Builds the lagged design from per-variable n x q_j score matrices.
/// Row i of V_hj holds the scores at time L + i - h (0-based i).
VfarDesign assemble_design(const std::vector<Eigen::MatrixXd>& scores, std::size_t L);
VfarDesign assemble_design(const std::vector<FpcaResult>& fpca, std::size_t L);

/// Coefficient blocks Psi_b (q_k x q_j) for one response j, indexed like the design blocks.
using CoefficientBlocks = std::vector<Eigen::MatrixXd>;

/// Psi_b = D_b^{-1} X_b / sqrt(n - L) from stacked standardised coefficients.
CoefficientBlocks to_psi(const VfarDesign& design, const Eigen::MatrixXd& X);
/// X_b = sqrt(n - L) D_b Psi_b, stacked.
Eigen::MatrixXd from_psi(const VfarDesign& design, const CoefficientBlocks& psi);

/// Blockwise group soft-thresholding of the row blocks of Z:
/// X_k = (1 - threshold / ||Z_k||_F)_+ Z_k, exactly zero when ||Z_k||_F <= threshold.
Eigen::MatrixXd group_prox(const Eigen::MatrixXd& Z, const std::vector<Eigen::Index>& block_rows, double threshold);

/// 1/2 ||V_0j - sum_b V_b Psi_b||_F^2 + gamma sum_b ||V_b Psi_b||_F.
double objective_fit(const VfarDesign& design, std::size_t j, const CoefficientBlocks& psi, double gamma);

/// Standardised form -<<Y, B>> + 1/2 <<B, Gamma B>> + gamma_s sum_b ||B_b||_F with
/// B = D Psi, Y = (n - L)^{-1} D^{-1} Z^T V_0j, Gamma = (n - L)^{-1} D^{-1} Z^T Z D^{-1}.
/// For full-rank D,
///   objective_fit(Psi, gamma) - ||V_0j||^2 / 2 = (n - L) objective_standardized(D Psi, gamma / sqrt(n - L)).
double objective_standardized(const VfarDesign& design, std::size_t j, const CoefficientBlocks& B, double gamma_s);

struct SolverConfig {
    double step_factor = 0.9;  ///< C = step_factor / lambda_max(Zs^T Zs)
    int max_iter = 10000;
    double tolerance = 1e-8;   ///< relative objective change
    bool restart = true;

    void validate() const;
};

struct SolverResult {
    Eigen::MatrixXd X;               ///< standardised coefficients, r x q_j
    std::vector<double> objective;   ///< objective at accepted prox points, starting at the initial point
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
    double final_objective = 0.0;
};

/// Block FISTA with restart for
///   min_X 1/2 ||V_0j - Zs X||_F^2 + gamma sum_b ||X_b||_F,
/// which is the fit criterion in standardised coordinates. With restart
/// enabled a step that raises the objective is rejected and momentum reset,
/// so the recorded objective never increases.
SolverResult block_fista(const VfarDesign& design, std::size_t j, double gamma, const SolverConfig& config = {},
                         const Eigen::MatrixXd* warm_start = nullptr);

/// Smallest gamma for which X = 0 solves the problem: max_b ||Zs_b^T V_0j||_F.
double gamma_max(const VfarDesign& design, std::size_t j);

struct InformationCriterion {
    double rss = 0.0;
    double df = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool rss_floored = false;
};

/// RSS, degrees of freedom
///   df = sum_b [ 1{Psi_b != 0} + (q_j q_k - 1) e_b / (e_b + gamma) ],  e_b = ||V_b Psi_b||_F^2,
/// AIC = n log RSS + 2 df and BIC = n log RSS + log(n) df with n the panel length.
InformationCriterion information_criterion(const VfarDesign& design, std::size_t j, const Eigen::MatrixXd& X,
                                           double gamma);

enum class Criterion { aic, bic };
Criterion parse_criterion(std::string_view name);

struct PathSpec {
    std::size_t length = 50;
    double min_ratio = 1e-3;  ///< last gamma = min_ratio * gamma_max
};

struct PathPoint {
    double gamma = 0.0;
    Eigen::MatrixXd X;
    InformationCriterion ic;
    int iterations = 0;
    int restarts = 0;
    double final_objective = 0.0;
    std::size_t active_blocks = 0;
};

/// Log-spaced gammas from gamma_max down to min_ratio * gamma_max, each fit
/// warm-started from the previous one.
std::vector<PathPoint> gamma_path(const VfarDesign& design, std::size_t j, const PathSpec& spec,
                                  const SolverConfig& config = {});

/// Index of the path point minimising the criterion (first one on ties).
std::size_t select_on_path(const std::vector<PathPoint>& path, Criterion criterion);

/// A_hjk(u, v) = phi_k(v)^T Psi_hjk phi_j(u) on the grid, one KernelMatrix per lag.
/// psi[j] holds the blocks of response j; eigenfunctions[j] is T x q_j.
std::vector<KernelMatrix> reconstruct_A(const Grid& grid, const std::vector<CoefficientBlocks>& psi,
                                        const std::vector<Eigen::MatrixXd>& eigenfunctions, std::size_t L);

struct Edge {
    std::size_t k = 0;  ///< source
    std::size_t j = 0;  ///< target
    std::size_t h = 0;  ///< lag with the largest kernel norm (1-based)
    double norm = 0.0;  ///< max_h ||A_hjk||_S
};

/// Edges k -> j with max_h ||A_hjk||_S > tol, sorted by (j, k).
std::vector<Edge> granger_graph(const std::vector<KernelMatrix>& A, double tol = 0.0);

/// Companion form of A_1..A_L as a pL x pL KernelMatrix. Identity blocks are
/// the grid Dirac kernel diag(1 / w_s), which kernel_apply maps to the
/// identity. L = 1 returns A_1 unchanged.
KernelMatrix lift_to_var1(const std::vector<KernelMatrix>& A);

/// Dense matrix of the grid operator (blocks K diag(w)); its eigenvalues are
/// those of the discretised kernel operator.
Eigen::MatrixXd grid_operator_matrix(const KernelMatrix& K);

struct VfarOptions {
    FpcaOptions fpca;
    std::size_t L = 1;
    PathSpec path;
    Criterion criterion = Criterion::bic;
    SolverConfig solver;
    double edge_tol = 0.0;
    bool keep_path = false;
};

struct ResponseFit {
    double gamma = 0.0;
    std::size_t path_index = 0;
    InformationCriterion ic;
    CoefficientBlocks psi;
    int iterations = 0;
    int restarts = 0;
    double final_objective = 0.0;
};

struct VfarFit {
    std::size_t L = 0;
    std::size_t p = 0;
    std::vector<FpcaResult> fpca;
    std::vector<ResponseFit> responses;
    std::vector<KernelMatrix> A;
    std::vector<Edge> edges;
    bool rank_deficient = false;                ///< some D_b needed the eigenvalue floor
    std::vector<std::vector<PathPoint>> path;   ///< per response, when requested
};

/// Steps 2 and 3 on precomputed FPCA results: per-response gamma paths,
/// criterion selection, kernel reconstruction and the Granger graph.
VfarFit fit_from_fpca(const Grid& grid, std::vector<FpcaResult> fpca, const VfarOptions& options);

/// Full pipeline: per-variable regularised FPCA with CV, then fit_from_fpca.
VfarFit fit_vfar(const CurvePanel& panel, const VfarOptions& options, const Rng& rng);

/// p x p support of a stacked-X path point set: entry (j, k) is true when
/// some lag block of response j from variable k is nonzero.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> path_support(const VfarDesign& design,
                                                                 const std::vector<const Eigen::MatrixXd*>& X);

}  // namespace svfar
