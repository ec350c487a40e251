#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "svfar/funcspace.hpp"
#include "svfar/rng.hpp"

namespace svfar {

/// d orthonormal Fourier functions on the grid as a T x d matrix, ordered
/// {1, sqrt2 sin 2pi u, sqrt2 cos 2pi u, sqrt2 sin 4pi u, sqrt2 cos 4pi u, ...}.
Eigen::MatrixXd fourier_basis(const Grid& grid, std::size_t d);

enum class SimModel { block_sparse, block_banded };
SimModel parse_sim_model(std::string_view name);
std::string_view sim_model_name(SimModel model);

struct SimSpec {
    std::size_t n = 100;
    std::size_t p = 40;
    std::size_t T = 50;
    std::size_t basis_dim = 5;
    SimModel model = SimModel::block_sparse;
    double noise_sd = 0.5;
    std::size_t row_support = 5;  ///< nonzero blocks per row, block-sparse model
    std::size_t bandwidth = 2;    ///< |j - k| <= bandwidth, block-banded model
    std::size_t burn_in = 200;
    std::uint64_t seed = 0;

    void validate() const;
    Grid grid() const { return Grid::uniform(T); }
};

struct GroundTruth {
    Eigen::MatrixXd B;  ///< (d p) x (d p), block (j, k) maps theta_k to theta_j
    KernelMatrix A;     ///< A_jk(u, v) = s(u)^T B_jk s(v)
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support;
    double kappa = 0.0;
    std::size_t basis_dim = 0;
};

/// Kernels s(u)^T B_jk s(v) on the grid for a d p x d p coefficient transition.
KernelMatrix kernels_from_coefficients(const Grid& grid, const Eigen::MatrixXd& B, std::size_t d);

/// Draws B for the spec's model and rescales it to spectral radius kappa ~ U[0.5, 1].
GroundTruth gen_transition(const SimSpec& spec, Rng& rng);

/// Ground truth with a prescribed coefficient transition (kappa = rho(B)).
GroundTruth truth_from_coefficients(const SimSpec& spec, const Eigen::MatrixXd& B);

struct SimulatedPanel {
    CurvePanel observed;     ///< W_tjs = X_tj(u_s) + e_tjs
    CurvePanel latent;       ///< X_tj(u_s)
    Eigen::MatrixXd theta;   ///< n x d p basis coefficients
};

/// theta_t = B theta_{t-1} + eta_t from zero after burn_in steps, curves s^T theta_tj
/// and Gaussian measurement noise. Innovations and each variable's noise use
/// separate child streams of rng.
SimulatedPanel simulate_panel(const GroundTruth& truth, const SimSpec& spec, const Rng& rng);

/// One replicate: truth from rng.split(0), panel from rng.split(1).
std::pair<GroundTruth, SimulatedPanel> simulate_replicate(const SimSpec& spec, const Rng& rng);

}  // namespace svfar
