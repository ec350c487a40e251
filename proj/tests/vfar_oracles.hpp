#pragma once

// Reference solvers shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "svfar/rng.hpp"
#include "svfar/vfar.hpp"

namespace svfar::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

/// Cyclic proximal block coordinate descent on
///   1/2 ||Y - sum_b Zs_b X_b||^2 + gamma sum_b ||X_b||_F.
/// Each block update minimises exactly by a proximal-gradient inner loop with
/// the block Lipschitz constant, so no orthonormality is assumed.
inline Eigen::MatrixXd coordinate_descent(const VfarDesign& d, std::size_t j, double gamma, double tol = 1e-10,
                                          int max_sweeps = 100000) {
    const Eigen::MatrixXd& Y = d.response[j];
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(d.r(), Y.cols());
    Eigen::MatrixXd R = Y;
    std::vector<double> lip(d.blocks());
    for (std::size_t b = 0; b < d.blocks(); ++b) {
        const auto Zb = d.Zs.middleCols(d.offset[b], static_cast<Eigen::Index>(d.block_size(b)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Zb.transpose() * Zb, Eigen::EigenvaluesOnly);
        lip[b] = es.eigenvalues().maxCoeff();
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t b = 0; b < d.blocks(); ++b) {
            const auto qb = static_cast<Eigen::Index>(d.block_size(b));
            const auto Zb = d.Zs.middleCols(d.offset[b], qb);
            if (lip[b] <= 0.0) continue;
            Eigen::MatrixXd xb = X.middleRows(d.offset[b], qb);
            const Eigen::MatrixXd partial = R + Zb * xb;  // residual without block b
            for (int inner = 0; inner < 10000; ++inner) {
                const Eigen::MatrixXd z = xb + (Zb.transpose() * (partial - Zb * xb)) / lip[b];
                const double nz = z.norm();
                const double thr = gamma / lip[b];
                const Eigen::MatrixXd next = nz > thr ? Eigen::MatrixXd((1.0 - thr / nz) * z) : Eigen::MatrixXd::Zero(z.rows(), z.cols());
                const double delta = (next - xb).norm();
                xb = next;
                if (delta <= 1e-15 * std::max(1.0, xb.norm())) break;
            }
            max_change = std::max(max_change, (xb - X.middleRows(d.offset[b], qb)).norm());
            X.middleRows(d.offset[b], qb) = xb;
            R = partial - Zb * xb;
        }
        if (max_change < tol) break;
    }
    return X;
}

inline double standardized_objective(const VfarDesign& d, std::size_t j, const Eigen::MatrixXd& X, double gamma) {
    double pen = 0.0;
    for (std::size_t b = 0; b < d.blocks(); ++b)
        pen += X.middleRows(d.offset[b], static_cast<Eigen::Index>(d.block_size(b))).norm();
    return 0.5 * (d.response[j] - d.Zs * X).squaredNorm() + gamma * pen;
}

/// Random VFAR(1) score panel with p variables of q components each.
inline std::vector<Eigen::MatrixXd> random_scores(std::size_t n, std::size_t p, std::size_t q, Rng& rng,
                                                  double coupling = 0.3) {
    const auto dim = static_cast<Eigen::Index>(p * q);
    Eigen::MatrixXd B = random_matrix(dim, dim, rng) * (coupling / std::sqrt(static_cast<double>(dim)));
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), dim);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);
    for (std::size_t t = 0; t < n + 50; ++t) {
        Eigen::VectorXd eta(dim);
        for (Eigen::Index i = 0; i < dim; ++i) eta(i) = rng.normal();
        state = B * state + eta;
        if (t >= 50) theta.row(static_cast<Eigen::Index>(t - 50)) = state.transpose();
    }
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t j = 0; j < p; ++j)
        out.push_back(theta.middleCols(static_cast<Eigen::Index>(j * q), static_cast<Eigen::Index>(q)));
    return out;
}

}  // namespace svfar::testing
