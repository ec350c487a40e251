#include "svfar/rfpca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "svfar/errors.hpp"
#include "svfar/parallel.hpp"

namespace svfar {

// ---------------------------------------------------------------------------
// B-spline basis
// ---------------------------------------------------------------------------

BsplineBasis::BsplineBasis(const Grid& grid, std::size_t G, std::size_t degree) : G_(G), degree_(degree) {
    if (G < degree + 1) throw UsageError("build_basis: G must be at least degree + 1");
    const std::size_t spans = G - degree;
    knots_.reserve(G + degree + 1);
    for (std::size_t i = 0; i <= degree; ++i) knots_.push_back(0.0);
    for (std::size_t i = 1; i < spans; ++i) knots_.push_back(static_cast<double>(i) / static_cast<double>(spans));
    for (std::size_t i = 0; i <= degree; ++i) knots_.push_back(1.0);
    eval_ = evaluate(grid.points(), 0);
}

Eigen::VectorXd BsplineBasis::evaluate(double u, std::size_t deriv) const {
    const std::size_t d = degree_;
    const std::size_t nk = knots_.size();
    const auto& t = knots_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G_));
    if (deriv > d) return out;
    if (u < 0.0 || u > 1.0) return out;

    // table[k] holds B_{i,k}(u) for i = 0 .. nk - k - 2.
    std::vector<std::vector<double>> table(d + 1);
    table[0].assign(nk - 1, 0.0);
    std::size_t span = 0;
    if (u >= 1.0) {
        // Right endpoint belongs to the last non-empty span.
        span = nk - 2;
        while (span > 0 && !(t[span] < t[span + 1])) --span;
    } else {
        while (!(t[span] <= u && u < t[span + 1])) ++span;
    }
    table[0][span] = 1.0;
    for (std::size_t k = 1; k <= d; ++k) {
        table[k].assign(nk - k - 1, 0.0);
        for (std::size_t i = 0; i + k + 1 < nk; ++i) {
            double v = 0.0;
            const double left = t[i + k] - t[i];
            const double right = t[i + k + 1] - t[i + 1];
            if (left > 0.0) v += (u - t[i]) / left * table[k - 1][i];
            if (right > 0.0) v += (t[i + k + 1] - u) / right * table[k - 1][i + 1];
            table[k][i] = v;
        }
    }

    // Differentiate r times: D^r B_{i,k} = k (D^{r-1} B_{i,k-1} / (t_{i+k} - t_i)
    //                                        - D^{r-1} B_{i+1,k-1} / (t_{i+k+1} - t_{i+1})).
    std::vector<double> cur = table[d - deriv];
    for (std::size_t r = 1; r <= deriv; ++r) {
        const std::size_t k = d - deriv + r;
        std::vector<double> next(nk - k - 1, 0.0);
        for (std::size_t i = 0; i + k + 1 < nk; ++i) {
            double v = 0.0;
            const double left = t[i + k] - t[i];
            const double right = t[i + k + 1] - t[i + 1];
            if (left > 0.0) v += cur[i] / left;
            if (right > 0.0) v -= cur[i + 1] / right;
            next[i] = static_cast<double>(k) * v;
        }
        cur = std::move(next);
    }
    for (std::size_t g = 0; g < G_; ++g) out(static_cast<Eigen::Index>(g)) = cur[g];
    return out;
}

Eigen::MatrixXd BsplineBasis::evaluate(const Eigen::VectorXd& points, std::size_t deriv) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(G_), points.size());
    for (Eigen::Index s = 0; s < points.size(); ++s) out.col(s) = evaluate(points(s), deriv);
    return out;
}

Eigen::VectorXd BsplineBasis::integrals() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(G_));
    for (std::size_t g = 0; g < G_; ++g)
        out(static_cast<Eigen::Index>(g)) = (knots_[g + degree_ + 1] - knots_[g]) / static_cast<double>(degree_ + 1);
    return out;
}

Eigen::VectorXd BsplineBasis::greville() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(G_));
    for (std::size_t g = 0; g < G_; ++g) {
        if (degree_ == 0) {
            out(static_cast<Eigen::Index>(g)) = 0.5 * (knots_[g] + knots_[g + 1]);
            continue;
        }
        double s = 0.0;
        for (std::size_t i = 1; i <= degree_; ++i) s += knots_[g + i];
        out(static_cast<Eigen::Index>(g)) = s / static_cast<double>(degree_);
    }
    return out;
}

BsplineBasis build_basis(const Grid& grid, std::size_t G, std::size_t degree) { return BsplineBasis(grid, G, degree); }

PenaltyMatrices penalty_matrices(const BsplineBasis& basis, bool roughness) {
    if (roughness && basis.degree() < 2)
        throw UsageError("penalty_matrices: a roughness penalty needs splines of degree >= 2");
    using Rule = boost::math::quadrature::gauss<double, 10>;
    std::vector<double> nodes, weights;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
        const double x = Rule::abscissa()[i];
        const double w = Rule::weights()[i];
        nodes.push_back(x);
        weights.push_back(w);
        if (x != 0.0) {
            nodes.push_back(-x);
            weights.push_back(w);
        }
    }

    const auto G = static_cast<Eigen::Index>(basis.dim());
    PenaltyMatrices out{Eigen::MatrixXd::Zero(G, G), Eigen::MatrixXd::Zero(G, G)};
    const auto& t = basis.knots();
    for (std::size_t s = 0; s + 1 < t.size(); ++s) {
        const double a = t[s];
        const double b = t[s + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double u = mid + half * nodes[i];
            const double w = half * weights[i];
            const Eigen::VectorXd v = basis.evaluate(u, 0);
            out.J.noalias() += w * v * v.transpose();
            if (roughness) {
                const Eigen::VectorXd d2 = basis.evaluate(u, 2);
                out.Q.noalias() += w * d2 * d2.transpose();
            }
        }
    }
    out.J = 0.5 * (out.J + out.J.transpose());
    out.Q = 0.5 * (out.Q + out.Q.transpose());
    return out;
}

// ---------------------------------------------------------------------------
// Regularised FPCA
// ---------------------------------------------------------------------------

Eigen::MatrixXd spline_coefficients(const Grid& grid, const BsplineBasis& basis, const Eigen::MatrixXd& curves) {
    const Eigen::MatrixXd& E = basis.eval();
    if (static_cast<std::size_t>(curves.cols()) != grid.size() || E.cols() != curves.cols())
        throw DimensionError("spline_coefficients: curves, grid and basis disagree on T");
    const Eigen::VectorXd& w = grid.weights();
    Eigen::MatrixXd gram = E * w.asDiagonal() * E.transpose();
    gram.diagonal().array() += 1e-10;
    const Eigen::MatrixXd rhs = E * w.asDiagonal() * curves.transpose();  // G x n
    return gram.ldlt().solve(rhs).transpose();
}

Eigen::MatrixXd fpc_scores(const Grid& grid, const Eigen::MatrixXd& curves, const Eigen::MatrixXd& eigenfunctions) {
    if (static_cast<std::size_t>(curves.cols()) != grid.size() ||
        static_cast<std::size_t>(eigenfunctions.rows()) != grid.size())
        throw DimensionError("fpc_scores: grid mismatch");
    return curves * grid.weights().asDiagonal() * eigenfunctions;
}

namespace {

struct EigenPipeline {
    Eigen::VectorXd values;        // all G, descending
    Eigen::MatrixXd coefficients;  // G x G, J-normalised, sign-canonical
    Eigen::VectorXd mean_coefficients;
};

// Penalised eigenproblem from spline coefficients of the curves (n x G).
EigenPipeline penalised_eigen(const Eigen::MatrixXd& delta, double eta, const BsplineBasis& basis,
                              const PenaltyMatrices& pen) {
    const auto n = delta.rows();
    const auto G = delta.cols();
    EigenPipeline out;
    out.mean_coefficients = delta.colwise().mean().transpose();
    const Eigen::MatrixXd centred = delta.rowwise() - out.mean_coefficients.transpose();

    const Eigen::MatrixXd JD = pen.J * centred.transpose();  // G x n
    const Eigen::MatrixXd U = JD * JD.transpose() / static_cast<double>(n);

    // J + eta Q = P1 S1^{-2} P1^T
    const Eigen::MatrixXd M = pen.J + eta * pen.Q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(0.5 * (M + M.transpose()));
    const Eigen::VectorXd lam = es1.eigenvalues();
    if (!(lam.minCoeff() > 1e-13 * lam.maxCoeff()))
        throw NumericalError("regularized_fpca: J + eta Q is singular (min eigenvalue " + std::to_string(lam.minCoeff()) +
                             ", max " + std::to_string(lam.maxCoeff()) + ")");
    const Eigen::MatrixXd P1S1 = es1.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal();

    // S1 P1^T U P1 S1 = P2 diag(d) P2^T
    Eigen::MatrixXd K = P1S1.transpose() * U * P1S1;
    K = 0.5 * (K + K.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(K);
    out.values = es2.eigenvalues().reverse();
    const Eigen::MatrixXd X = es2.eigenvectors().rowwise().reverse();

    out.coefficients = P1S1 * X;  // zeta_l = P1 S1 x_l
    const Eigen::VectorXd ints = basis.integrals();
    const Eigen::MatrixXd& E = basis.eval();
    for (Eigen::Index l = 0; l < G; ++l) {
        auto z = out.coefficients.col(l);
        z /= std::sqrt(z.dot(pen.J * z));
        const double area = ints.dot(z);
        bool flip = false;
        if (std::abs(area) >= 1e-10) {
            flip = area < 0.0;
        } else {
            const Eigen::VectorXd vals = E.transpose() * z;
            const double scale = vals.cwiseAbs().maxCoeff();
            for (Eigen::Index s = 0; s < vals.size(); ++s) {
                if (std::abs(vals(s)) > 1e-8 * scale) {
                    flip = vals(s) < 0.0;
                    break;
                }
            }
        }
        if (flip) z = -z;
    }
    return out;
}

}  // namespace

FpcaResult regularized_fpca(const Grid& grid, const Eigen::MatrixXd& curves, std::size_t q, double eta,
                            const BsplineBasis& basis, const PenaltyMatrices& penalties) {
    const auto n = static_cast<std::size_t>(curves.rows());
    if (n < 2) throw UsageError("regularized_fpca: at least two curves are required");
    if (q < 1 || q > std::min(n, basis.dim())) throw UsageError("regularized_fpca: q must lie in [1, min(n, G)]");
    if (!(eta >= 0.0)) throw UsageError("regularized_fpca: eta must be nonnegative");

    const Eigen::MatrixXd delta = spline_coefficients(grid, basis, curves);
    const EigenPipeline eig = penalised_eigen(delta, eta, basis, penalties);

    FpcaResult res;
    const auto qi = static_cast<Eigen::Index>(q);
    res.q = q;
    res.eta = eta;
    res.all_eigenvalues = eig.values;
    res.eigenvalues = eig.values.head(qi);
    res.coefficients = eig.coefficients.leftCols(qi);
    res.eigenfunctions = basis.eval().transpose() * res.coefficients;
    res.mean_coefficients = eig.mean_coefficients;
    res.mean = basis.eval().transpose() * res.mean_coefficients;
    // Scores of the smoothed centred curves, <(delta_t - mean)^T b, zeta^T b> = (delta_t - mean)^T J zeta.
    const Eigen::MatrixXd centred = delta.rowwise() - res.mean_coefficients.transpose();
    res.scores = centred * penalties.J * res.coefficients;
    return res;
}

std::vector<std::vector<std::size_t>> cv_folds(std::size_t n, std::size_t K, Rng& rng) {
    if (K < 2) throw UsageError("cv_folds: need at least 2 folds");
    if (K > n) throw UsageError("cv_folds: more folds than samples");
    const std::vector<std::size_t> perm = permutation(n, rng);
    std::vector<std::vector<std::size_t>> folds(K);
    for (std::size_t f = 0; f < K; ++f) {
        for (std::size_t i = f * n / K; i < (f + 1) * n / K; ++i) folds[f].push_back(perm[i]);
        std::sort(folds[f].begin(), folds[f].end());
    }
    return folds;
}

CvSelection cv_select(const Grid& grid, const Eigen::MatrixXd& observations, const std::vector<std::size_t>& q_grid,
                      const std::vector<double>& eta_grid, std::size_t K, Rng& rng, const BsplineBasis& basis,
                      const PenaltyMatrices& penalties) {
    if (q_grid.empty() || eta_grid.empty()) throw UsageError("cv_select: q and eta grids must be nonempty");
    const auto n = static_cast<std::size_t>(observations.rows());
    const auto folds = cv_folds(n, K, rng);
    for (const auto& f : folds)
        if (n - f.size() < 2) throw UsageError("cv_select: a training split has fewer than 2 curves");

    const Eigen::MatrixXd delta = spline_coefficients(grid, basis, observations);
    const std::size_t qmax = *std::max_element(q_grid.begin(), q_grid.end());
    const auto nq = static_cast<Eigen::Index>(q_grid.size());
    const auto ne = static_cast<Eigen::Index>(eta_grid.size());
    Eigen::MatrixXd sse = Eigen::MatrixXd::Zero(nq, ne);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feasible =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nq, ne, true);
    const Eigen::MatrixXd& E = basis.eval();

    for (const auto& held : folds) {
        std::vector<bool> is_held(n, false);
        for (std::size_t t : held) is_held[t] = true;
        std::vector<Eigen::Index> train;
        for (std::size_t t = 0; t < n; ++t)
            if (!is_held[t]) train.push_back(static_cast<Eigen::Index>(t));
        const Eigen::MatrixXd dtrain = delta(train, Eigen::all);
        std::vector<Eigen::Index> test(held.begin(), held.end());
        const Eigen::MatrixXd wtest = observations(test, Eigen::all);
        const Eigen::MatrixXd dtest = delta(test, Eigen::all);

        const std::size_t available = std::min(train.size(), basis.dim());
        for (Eigen::Index b = 0; b < ne; ++b) {
            const double eta = eta_grid[static_cast<std::size_t>(b)];
            const EigenPipeline eig = penalised_eigen(dtrain, eta, basis, penalties);
            const std::size_t use = std::min(qmax, available);
            const Eigen::MatrixXd phi = E.transpose() * eig.coefficients.leftCols(static_cast<Eigen::Index>(use));
            const Eigen::VectorXd mu = E.transpose() * eig.mean_coefficients;
            const Eigen::MatrixXd resid0 = wtest.rowwise() - mu.transpose();
            // Held-out scores: projections of the smoothed held-out curves onto the training eigenfunctions.
            const Eigen::MatrixXd xi = (dtest.rowwise() - eig.mean_coefficients.transpose()) * penalties.J *
                                       eig.coefficients.leftCols(static_cast<Eigen::Index>(use));
            for (Eigen::Index a = 0; a < nq; ++a) {
                const std::size_t q = q_grid[static_cast<std::size_t>(a)];
                if (q < 1 || q > use) {
                    feasible(a, b) = false;
                    continue;
                }
                const auto qi = static_cast<Eigen::Index>(q);
                const Eigen::MatrixXd resid = resid0 - xi.leftCols(qi) * phi.leftCols(qi).transpose();
                sse(a, b) += resid.squaredNorm();
            }
        }
    }

    CvSelection sel;
    sel.cv_error = sse / static_cast<double>(K * grid.size());
    for (Eigen::Index a = 0; a < nq; ++a)
        for (Eigen::Index b = 0; b < ne; ++b)
            if (!feasible(a, b)) sel.cv_error(a, b) = std::numeric_limits<double>::infinity();

    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < nq; ++a)
        for (Eigen::Index b = 0; b < ne; ++b) best = std::min(best, sel.cv_error(a, b));
    if (!std::isfinite(best)) throw UsageError("cv_select: no feasible (q, eta) combination");

    const double energy = observations.squaredNorm() / static_cast<double>(observations.size());
    const double tol = 1e-6 * best + 1e-12 * energy;
    bool found = false;
    for (Eigen::Index a = 0; a < nq; ++a) {
        for (Eigen::Index b = 0; b < ne; ++b) {
            if (!(sel.cv_error(a, b) <= best + tol)) continue;
            const std::size_t q = q_grid[static_cast<std::size_t>(a)];
            const double eta = eta_grid[static_cast<std::size_t>(b)];
            if (!found || q < sel.q || (q == sel.q && eta < sel.eta)) {
                sel.q = q;
                sel.eta = eta;
                found = true;
            }
        }
    }
    return sel;
}

std::vector<FpcaResult> panel_fpca(const CurvePanel& panel, const FpcaOptions& options, const Rng& rng) {
    const BsplineBasis basis = build_basis(panel.grid(), options.G, options.degree);
    const bool rough = options.degree >= 2;
    const PenaltyMatrices pen = penalty_matrices(basis, rough);
    std::vector<double> etas = options.eta_grid;
    if (!rough) etas = {0.0};

    std::vector<FpcaResult> out(panel.p());
    parallel_for(panel.p(), [&](std::size_t j) {
        const Eigen::MatrixXd& W = panel.variable(j);
        std::size_t q = options.q_grid.front();
        double eta = etas.front();
        if (options.q_grid.size() > 1 || etas.size() > 1) {
            Rng stream = rng.split(j);
            const CvSelection sel = cv_select(panel.grid(), W, options.q_grid, etas, options.folds, stream, basis, pen);
            q = sel.q;
            eta = sel.eta;
        }
        out[j] = regularized_fpca(panel.grid(), W, q, eta, basis, pen);
    });
    return out;
}

}  // namespace svfar
