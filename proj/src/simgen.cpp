#include "svfar/simgen.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <string>

#include "svfar/errors.hpp"
#include "svfar/stability.hpp"

namespace svfar {

Eigen::MatrixXd fourier_basis(const Grid& grid, std::size_t d) {
    if (d < 1) throw UsageError("fourier_basis: d must be at least 1");
    const auto T = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd s(T, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < T; ++i) {
        const double u = grid.points()(i);
        s(i, 0) = 1.0;
        for (std::size_t l = 1; l < d; ++l) {
            const double freq = 2.0 * std::numbers::pi * static_cast<double>((l + 1) / 2);
            s(i, static_cast<Eigen::Index>(l)) =
                std::numbers::sqrt2 * (l % 2 == 1 ? std::sin(freq * u) : std::cos(freq * u));
        }
    }
    return s;
}

SimModel parse_sim_model(std::string_view name) {
    if (name == "sparse" || name == "block_sparse") return SimModel::block_sparse;
    if (name == "banded" || name == "block_banded") return SimModel::block_banded;
    throw UsageError("unknown model '" + std::string(name) + "' (expected sparse or banded)");
}

std::string_view sim_model_name(SimModel model) {
    return model == SimModel::block_sparse ? "sparse" : "banded";
}

void SimSpec::validate() const {
    if (n < 2) throw UsageError("simulation: n must be at least 2");
    if (p < 1) throw UsageError("simulation: p must be at least 1");
    if (T < 2) throw UsageError("simulation: T must be at least 2");
    if (basis_dim < 1) throw UsageError("simulation: basis_dim must be at least 1");
    if (!(noise_sd >= 0.0)) throw UsageError("simulation: noise_sd must be nonnegative");
    if (model == SimModel::block_sparse && p < row_support)
        throw UsageError("simulation: block-sparse model needs p >= " + std::to_string(row_support));
}

KernelMatrix kernels_from_coefficients(const Grid& grid, const Eigen::MatrixXd& B, std::size_t d) {
    const auto di = static_cast<Eigen::Index>(d);
    if (B.rows() != B.cols() || B.rows() % di != 0)
        throw DimensionError("kernels_from_coefficients: B must be square with blocks of size d");
    const std::size_t p = static_cast<std::size_t>(B.rows() / di);
    const Eigen::MatrixXd s = fourier_basis(grid, d);
    KernelMatrix A(p, p, grid);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) {
            const auto Bjk = B.block(static_cast<Eigen::Index>(j) * di, static_cast<Eigen::Index>(k) * di, di, di);
            if (Bjk.isZero(0.0)) continue;
            A.block(j, k) = s * Bjk * s.transpose();
        }
    return A;
}

GroundTruth truth_from_coefficients(const SimSpec& spec, const Eigen::MatrixXd& B) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.basis_dim);
    const auto p = static_cast<Eigen::Index>(spec.p);
    if (B.rows() != d * p || B.cols() != d * p) throw DimensionError("ground truth: B must be (d p) x (d p)");
    GroundTruth truth;
    truth.B = B;
    truth.basis_dim = spec.basis_dim;
    truth.kappa = spectral_radius(B);
    truth.support.resize(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < p; ++k) truth.support(j, k) = !B.block(j * d, k * d, d, d).isZero(0.0);
    truth.A = kernels_from_coefficients(spec.grid(), B, spec.basis_dim);
    return truth;
}

GroundTruth gen_transition(const SimSpec& spec, Rng& rng) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.basis_dim);
    const auto p = static_cast<Eigen::Index>(spec.p);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d * p, d * p);
    auto fill = [&](Eigen::Index j, Eigen::Index k) {
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) B(j * d + a, k * d + b) = rng.normal();
    };
    for (Eigen::Index j = 0; j < p; ++j) {
        if (spec.model == SimModel::block_sparse) {
            // Partial Fisher-Yates: the first row_support entries are a uniform subset.
            std::vector<Eigen::Index> cols(static_cast<std::size_t>(p));
            for (Eigen::Index k = 0; k < p; ++k) cols[static_cast<std::size_t>(k)] = k;
            for (std::size_t i = 0; i < spec.row_support; ++i) {
                const std::size_t pick = i + rng.below(static_cast<std::uint64_t>(p) - i);
                std::swap(cols[i], cols[pick]);
            }
            std::sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(spec.row_support));
            for (std::size_t i = 0; i < spec.row_support; ++i) fill(j, cols[i]);
        } else {
            const auto bw = static_cast<Eigen::Index>(spec.bandwidth);
            for (Eigen::Index k = std::max<Eigen::Index>(0, j - bw); k <= std::min(p - 1, j + bw); ++k) fill(j, k);
        }
    }
    const double kappa = rng.uniform(0.5, 1.0);
    const double rho = spectral_radius(B);
    if (!(rho > 0.0)) throw NumericalError("gen_transition: drawn transition has zero spectral radius");
    B *= kappa / rho;
    GroundTruth truth = truth_from_coefficients(spec, B);
    truth.kappa = kappa;
    return truth;
}

SimulatedPanel simulate_panel(const GroundTruth& truth, const SimSpec& spec, const Rng& rng) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.basis_dim);
    const auto p = static_cast<Eigen::Index>(spec.p);
    const Eigen::Index dim = d * p;
    if (truth.B.rows() != dim) throw DimensionError("simulate_panel: truth does not match spec dimensions");
    if (spectral_radius(truth.B) >= 1.0) throw NonStationaryError("simulate_panel: transition is not stable");

    Rng innovations = rng.split(0);
    const auto n = static_cast<Eigen::Index>(spec.n);
    Eigen::MatrixXd theta(n, dim);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd eta(dim);
    const std::size_t total = spec.burn_in + spec.n;
    for (std::size_t t = 0; t < total; ++t) {
        for (Eigen::Index i = 0; i < dim; ++i) eta(i) = innovations.normal();
        state = truth.B * state + eta;
        if (t >= spec.burn_in) theta.row(static_cast<Eigen::Index>(t - spec.burn_in)) = state.transpose();
    }

    const Grid grid = spec.grid();
    const Eigen::MatrixXd s = fourier_basis(grid, spec.basis_dim);
    std::vector<Eigen::MatrixXd> latent(static_cast<std::size_t>(p)), observed(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        latent[uj] = theta.middleCols(j * d, d) * s.transpose();
        observed[uj] = latent[uj];
        if (spec.noise_sd > 0.0) {
            Rng noise = rng.split(1 + uj);
            for (Eigen::Index t = 0; t < n; ++t)
                for (Eigen::Index c = 0; c < observed[uj].cols(); ++c) observed[uj](t, c) += spec.noise_sd * noise.normal();
        }
    }
    return {CurvePanel(grid, std::move(observed)), CurvePanel(grid, std::move(latent)), std::move(theta)};
}

std::pair<GroundTruth, SimulatedPanel> simulate_replicate(const SimSpec& spec, const Rng& rng) {
    Rng truth_rng = rng.split(0);
    GroundTruth truth = gen_transition(spec, truth_rng);
    SimulatedPanel panel = simulate_panel(truth, spec, rng.split(1));
    return {std::move(truth), std::move(panel)};
}

}  // namespace svfar
