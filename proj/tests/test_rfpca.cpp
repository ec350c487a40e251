#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "svfar/autocov.hpp"
#include "svfar/errors.hpp"
#include "svfar/rfpca.hpp"
#include "svfar/rng.hpp"

using namespace svfar;

namespace {

// Textbook recursive definition, independent of the table-based evaluator.
double bspline_recursive(const std::vector<double>& t, std::size_t i, std::size_t k, double u) {
    if (k == 0) return (t[i] <= u && u < t[i + 1]) ? 1.0 : 0.0;
    double v = 0.0;
    if (t[i + k] > t[i]) v += (u - t[i]) / (t[i + k] - t[i]) * bspline_recursive(t, i, k - 1, u);
    if (t[i + k + 1] > t[i + 1]) v += (t[i + k + 1] - u) / (t[i + k + 1] - t[i + 1]) * bspline_recursive(t, i + 1, k - 1, u);
    return v;
}

// Curves with exact spline coefficients: X_t = mean + sum_l z_tl c_l^T b on `grid`.
Eigen::MatrixXd spline_curves(const BsplineBasis& basis, const Eigen::MatrixXd& coef) {
    return coef * basis.eval();
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

// Composite Simpson weights on T equally spaced points of [0, 1] (T odd).
Eigen::VectorXd simpson_weights(int T) {
    const int m = T - 1;
    Eigen::VectorXd w(T);
    for (int i = 0; i <= m; ++i) w(i) = ((i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0)) / (3.0 * m);
    return w;
}

// Composite Boole weights on m + 1 equally spaced points of [0, 1] (m divisible by 4).
Eigen::VectorXd boole_weights(int m) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m + 1);
    const double h = 1.0 / m;
    for (int p = 0; p < m; p += 4) {
        w(p) += 7.0;
        w(p + 1) += 32.0;
        w(p + 2) += 12.0;
        w(p + 3) += 32.0;
        w(p + 4) += 7.0;
    }
    return w * (2.0 * h / 45.0);
}

double second_derivative_energy(const PenaltyMatrices& pen, const Eigen::VectorXd& z) { return z.dot(pen.Q * z); }

}  // namespace

TEST(Bspline, PiecewiseConstantGram) {
    const Grid g = Grid::uniform(41);
    const BsplineBasis b = build_basis(g, 4, 0);
    const PenaltyMatrices pen = penalty_matrices(b, false);
    EXPECT_LT((pen.J - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(penalty_matrices(b, true), UsageError);
    EXPECT_THROW(build_basis(g, 3, 3), UsageError);
}

TEST(Bspline, PartitionOfUnity) {
    const Grid g = Grid::uniform(50);
    for (std::size_t d : {0u, 1u, 2u, 3u}) {
        const BsplineBasis b = build_basis(g, 15, d);
        EXPECT_LT((b.eval().colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10) << "degree " << d;
        EXPECT_GE(b.eval().minCoeff(), 0.0);
    }
}

TEST(Bspline, MatchesRecursiveDefinition) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    Rng rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        const double u = rng.uniform();
        const Eigen::VectorXd v = b.evaluate(u);
        for (std::size_t i = 0; i < 15; ++i)
            EXPECT_NEAR(v(static_cast<Eigen::Index>(i)), bspline_recursive(b.knots(), i, 3, u), 1e-12);
    }
}

TEST(Bspline, DerivativesMatchFiniteDifferences) {
    const BsplineBasis b = build_basis(Grid::uniform(20), 10, 3);
    for (double u : {0.13, 0.5, 0.77}) {
        const double h = 1e-5;
        const Eigen::VectorXd fd1 = (b.evaluate(u + h) - b.evaluate(u - h)) / (2 * h);
        const Eigen::VectorXd fd2 = (b.evaluate(u + h) - 2 * b.evaluate(u) + b.evaluate(u - h)) / (h * h);
        EXPECT_LT((b.evaluate(u, 1) - fd1).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LT((b.evaluate(u, 2) - fd2).cwiseAbs().maxCoeff(), 1e-3);
    }
}

TEST(Bspline, IntegralsAndGreville) {
    const Grid fine = Grid::uniform(4001);
    const BsplineBasis b = build_basis(fine, 12, 3);
    const Eigen::VectorXd quad = b.eval() * simpson_weights(4001);
    EXPECT_LT((b.integrals() - quad).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::VectorXd line = b.eval().transpose() * b.greville();
    EXPECT_LT((line - fine.points()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Penalty, AffineAnnihilatedAndJPositiveDefinite) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 10, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    EXPECT_LT((pen.Q * Eigen::VectorXd::Ones(10)).norm(), 1e-8);
    EXPECT_LT((pen.Q * b.greville()).norm(), 1e-8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esJ(pen.J);
    EXPECT_GT(esJ.eigenvalues().minCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esQ(pen.Q);
    EXPECT_GE(esQ.eigenvalues().minCoeff(), -1e-8 * esQ.eigenvalues().maxCoeff());
    EXPECT_LT((pen.J - pen.J.transpose()).cwiseAbs().maxCoeff(), 1e-15);

    // Quadratic Bernstein basis: only the affine span lies in the kernel of Q.
    const PenaltyMatrices quad = penalty_matrices(build_basis(g, 3, 2));
    EXPECT_GT(quad.Q.norm(), 1.0);
}

TEST(Penalty, GramMatchesRefinedSimpson) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    // Composite Boole rule on a 10x refined grid (480 intervals, aligned with the knots).
    const int m = 480;
    const Eigen::VectorXd w = boole_weights(m);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(15, 15);
    for (int i = 0; i <= m; ++i) {
        const Eigen::VectorXd v = b.evaluate(static_cast<double>(i) / m);
        J += w(i) * v * v.transpose();
    }
    for (int r = 0; r < 15; ++r)
        for (int c = 0; c < 15; ++c) {
            if (std::abs(J(r, c)) < 1e-3 * J.maxCoeff()) {
                EXPECT_NEAR(pen.J(r, c), J(r, c), 1e-9);
                continue;
            }
            EXPECT_LT(std::abs(pen.J(r, c) - J(r, c)) / std::abs(J(r, c)), 1e-6) << r << "," << c;
        }
}

TEST(RegularizedFpca, RankOneRecovery) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Curve phi(50);
    for (int s = 0; s < 50; ++s) phi(s) = std::sqrt(2.0) * std::sin(std::numbers::pi * g.point(static_cast<std::size_t>(s)));
    Rng rng(2);
    const int n = 80;
    Eigen::VectorXd z(n);
    for (int t = 0; t < n; ++t) z(t) = 2.0 * rng.normal();
    const Eigen::MatrixXd X = z * phi.transpose();
    const FpcaResult r = regularized_fpca(g, X, 1, 0.0, b, pen);
    EXPECT_GT(std::abs(inner_product(g, r.eigenfunctions.col(0), phi)), 0.999);
    const double var = (z.array() - z.mean()).square().mean();
    EXPECT_NEAR(r.eigenvalues(0) / var, 1.0, 1e-3);
}

TEST(RegularizedFpca, UnpenalizedEigenvaluesMatchDenseGridOperator) {
    const int T = 1201;
    const Grid fine = Grid::uniform(T);
    const BsplineBasis b = build_basis(fine, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(3);
    const int n = 40;
    Eigen::MatrixXd coef = random_matrix(n, 15, rng);
    for (int g = 0; g < 15; ++g) coef.col(g) *= 1.0 / (1.0 + g);
    const Eigen::MatrixXd X = spline_curves(b, coef);
    const FpcaResult r = regularized_fpca(fine, X, 6, 0.0, b, pen);

    // Oracle: eigenvalues of W^{1/2} S W^{1/2}, S the centred sample covariance on the grid and W
    // Simpson weights (knots fall on grid points, so the rule is accurate span by span).
    const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    const Eigen::VectorXd root = simpson_weights(T).cwiseSqrt();
    const Eigen::MatrixXd S = Xc.transpose() * Xc / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(root.asDiagonal() * S * root.asDiagonal(), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd oracle = es.eigenvalues().reverse();
    for (int l = 0; l < 6; ++l) EXPECT_LT(std::abs(r.eigenvalues(l) - oracle(l)) / oracle(l), 1e-6) << "l=" << l;

    // Trace identity over all components.
    EXPECT_LT(std::abs(r.all_eigenvalues.sum() - oracle.sum()) / oracle.sum(), 1e-6);
}

TEST(RegularizedFpca, ConstraintsAndOrdering) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(4);
    const Eigen::MatrixXd X = random_matrix(60, 50, rng);
    for (double eta : {0.0, 1e-6, 1e-4, 1e-2}) {
        const FpcaResult r = regularized_fpca(g, X, 6, eta, b, pen);
        for (int l = 0; l < 6; ++l) {
            const Eigen::VectorXd zl = r.coefficients.col(l);
            EXPECT_NEAR(zl.dot(pen.J * zl), 1.0, 1e-8);
            EXPECT_GE(b.integrals().dot(zl), 0.0);
            if (l > 0) EXPECT_LE(r.eigenvalues(l), r.eigenvalues(l - 1));
            for (int m = l + 1; m < 6; ++m) {
                const Eigen::VectorXd zm = r.coefficients.col(m);
                EXPECT_NEAR(zl.dot((pen.J + eta * pen.Q) * zm), 0.0, 1e-6);
            }
        }
        EXPECT_GE(r.all_eigenvalues.minCoeff(), -1e-10);
    }
}

TEST(RegularizedFpca, LargeEtaIsSmoother) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(5);
    const int n = 100;
    Eigen::MatrixXd X(n, 50);
    for (int t = 0; t < n; ++t) {
        const double smooth = rng.normal(), rough = 2.0 * rng.normal();
        for (int s = 0; s < 50; ++s) {
            const double u = g.point(static_cast<std::size_t>(s));
            X(t, s) = smooth * std::sqrt(2.0) * std::sin(std::numbers::pi * u) +
                      rough * std::sqrt(2.0) * std::sin(7 * std::numbers::pi * u);
        }
    }
    const FpcaResult r0 = regularized_fpca(g, X, 1, 0.0, b, pen);
    const FpcaResult r1 = regularized_fpca(g, X, 1, 1e3, b, pen);
    EXPECT_LT(second_derivative_energy(pen, r1.coefficients.col(0)), second_derivative_energy(pen, r0.coefficients.col(0)));
}

TEST(RegularizedFpca, ScoresDiagonalAtZeroEta) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(6);
    const FpcaResult r = regularized_fpca(g, random_matrix(50, 50, rng), 3, 0.0, b, pen);
    const Eigen::MatrixXd cov = r.scores.transpose() * r.scores / 50.0;
    for (int l = 0; l < 3; ++l) {
        EXPECT_NEAR(cov(l, l) / r.eigenvalues(l), 1.0, 1e-8);
        for (int m = 0; m < 3; ++m)
            if (l != m) EXPECT_LE(std::abs(cov(l, m)), 1e-6 * std::sqrt(r.eigenvalues(l) * r.eigenvalues(m)));
    }
}

TEST(RegularizedFpca, ReconstructionErrorNonincreasingInQ) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(7);
    const Eigen::MatrixXd X = random_matrix(40, 50, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t q = 1; q <= 15; ++q) {
        const FpcaResult r = regularized_fpca(g, X, q, 0.0, b, pen);
        const Eigen::MatrixXd resid = (X.rowwise() - r.mean.transpose()) - r.scores * r.eigenfunctions.transpose();
        const double err = (resid.array().square().matrix() * g.weights()).sum();
        EXPECT_LE(err, prev * (1 + 1e-12));
        prev = err;
    }
}

TEST(RegularizedFpca, Errors) {
    const Grid g = Grid::uniform(20);
    const BsplineBasis b = build_basis(g, 8, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng rng(8);
    const Eigen::MatrixXd X = random_matrix(10, 20, rng);
    EXPECT_THROW(regularized_fpca(g, X.topRows(1), 1, 0.0, b, pen), UsageError);
    EXPECT_THROW(regularized_fpca(g, X, 9, 0.0, b, pen), UsageError);
    EXPECT_THROW(regularized_fpca(g, X, 1, -1.0, b, pen), UsageError);
    PenaltyMatrices singular{Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 8)};
    EXPECT_THROW(regularized_fpca(g, X, 1, 0.0, b, singular), NumericalError);
}

TEST(FpcScores, Examples) {
    const Grid g = Grid::uniform(200);
    Eigen::MatrixXd phi(200, 2);
    for (int s = 0; s < 200; ++s) {
        const double u = g.point(static_cast<std::size_t>(s));
        phi(s, 0) = 1.0;
        phi(s, 1) = std::sqrt(2.0) * std::cos(2 * std::numbers::pi * u);
    }
    EXPECT_EQ(fpc_scores(g, Eigen::MatrixXd::Zero(3, 200), phi).cwiseAbs().maxCoeff(), 0.0);
    Rng rng(9);
    const Eigen::MatrixXd c = random_matrix(5, 2, rng);
    EXPECT_LT((fpc_scores(g, c * phi.transpose(), phi) - c).cwiseAbs().maxCoeff(), 1e-10);

    const Eigen::MatrixXd X = random_matrix(4, 200, rng);
    const Eigen::MatrixXd sc = fpc_scores(g, X, phi);
    for (int t = 0; t < 4; ++t)
        for (int l = 0; l < 2; ++l) {
            double acc = 0.0;
            for (int s = 0; s < 200; ++s) acc += g.weight(static_cast<std::size_t>(s)) * X(t, s) * phi(s, l);
            EXPECT_NEAR(sc(t, l), acc, 1e-12);
        }
}

TEST(CrossValidation, FoldsPartitionSamples) {
    Rng rng(10);
    const auto loo = cv_folds(7, 7, rng);
    std::vector<int> seen(7, 0);
    for (const auto& f : loo) {
        ASSERT_EQ(f.size(), 1u);
        ++seen[f[0]];
    }
    for (int c : seen) EXPECT_EQ(c, 1);
    const auto five = cv_folds(23, 5, rng);
    std::size_t total = 0;
    for (const auto& f : five) {
        EXPECT_GE(f.size(), 4u);
        EXPECT_LE(f.size(), 5u);
        total += f.size();
    }
    EXPECT_EQ(total, 23u);
    EXPECT_THROW(cv_folds(3, 4, rng), UsageError);
    EXPECT_THROW(cv_folds(3, 1, rng), UsageError);
}

TEST(CrossValidation, SelectsTrueRankAndIsDeterministic) {
    const Grid g = Grid::uniform(50);
    const BsplineBasis b = build_basis(g, 15, 3);
    const PenaltyMatrices pen = penalty_matrices(b);
    Rng data(11);
    const int n = 40;
    const Eigen::MatrixXd loadings = random_matrix(3, 15, data);
    Eigen::MatrixXd z = random_matrix(n, 3, data);
    z.col(0) *= 3.0;
    z.col(1) *= 2.0;
    const Eigen::MatrixXd X = spline_curves(b, z * loadings);
    const std::vector<std::size_t> qs{1, 2, 3, 4, 5, 6};
    Rng r1(12), r2(12);
    const CvSelection a = cv_select(g, X, qs, {0.0}, 5, r1, b, pen);
    const CvSelection c = cv_select(g, X, qs, {0.0}, 5, r2, b, pen);
    EXPECT_EQ(a.q, 3u);
    EXPECT_EQ(a.q, c.q);
    EXPECT_EQ(a.eta, c.eta);
    EXPECT_TRUE(a.cv_error == c.cv_error);
    EXPECT_LT(a.cv_error(2, 0), 1e-12 * a.cv_error(1, 0));

    Rng r3(1);
    EXPECT_THROW(cv_select(g, X.topRows(2), qs, {0.0}, 2, r3, b, pen), UsageError);
}

TEST(CrossValidation, PanelFpcaDeterministic) {
    const Grid g = Grid::uniform(30);
    Rng data(13);
    std::vector<Eigen::MatrixXd> vars;
    for (int j = 0; j < 3; ++j) vars.push_back(random_matrix(30, 30, data));
    const CurvePanel panel(g, vars);
    FpcaOptions opt;
    opt.G = 10;
    opt.q_grid = {1, 2, 3};
    opt.eta_grid = {0.0, 1e-5};
    const auto a = panel_fpca(panel, opt, Rng(5));
    const auto c = panel_fpca(panel, opt, Rng(5));
    ASSERT_EQ(a.size(), 3u);
    for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(a[j].q, c[j].q);
        EXPECT_TRUE(a[j].scores == c[j].scores);
    }
}
