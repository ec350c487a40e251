#include "svfar/vfar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "svfar/errors.hpp"
#include "svfar/linalg.hpp"
#include "svfar/parallel.hpp"

namespace svfar {

// ---------------------------------------------------------------------------
// Design
// ---------------------------------------------------------------------------

std::vector<Eigen::Index> VfarDesign::block_rows() const {
    std::vector<Eigen::Index> out(blocks());
    for (std::size_t b = 0; b < blocks(); ++b) out[b] = static_cast<Eigen::Index>(block_size(b));
    return out;
}

VfarDesign assemble_design(const std::vector<Eigen::MatrixXd>& scores, std::size_t L) {
    if (scores.empty()) throw UsageError("assemble_design: no variables");
    if (L < 1) throw UsageError("assemble_design: lag order must be at least 1");
    VfarDesign d;
    d.p = scores.size();
    d.n = static_cast<std::size_t>(scores.front().rows());
    d.L = L;
    for (const auto& s : scores) {
        if (static_cast<std::size_t>(s.rows()) != d.n) throw DimensionError("assemble_design: score matrices differ in n");
        if (s.cols() < 1) throw DimensionError("assemble_design: a variable has no components");
        d.q.push_back(static_cast<std::size_t>(s.cols()));
    }
    if (L >= d.n) throw UsageError("assemble_design: lag order must be smaller than n");
    const auto m = static_cast<Eigen::Index>(d.n - L);
    const auto Li = static_cast<Eigen::Index>(L);

    for (std::size_t j = 0; j < d.p; ++j) d.response.push_back(scores[j].middleRows(Li, m));

    Eigen::Index r = 0;
    for (std::size_t b = 0; b < d.blocks(); ++b) {
        const auto h = static_cast<Eigen::Index>(d.lag_of(b));
        const Eigen::MatrixXd& s = scores[d.variable_of(b)];
        d.predictors.push_back(s.middleRows(Li - h, m));
        d.offset.push_back(r);
        r += s.cols();
    }

    d.Z.resize(m, r);
    d.Zs.resize(m, r);
    const double root = std::sqrt(static_cast<double>(m));
    for (std::size_t b = 0; b < d.blocks(); ++b) {
        const Eigen::MatrixXd& V = d.predictors[b];
        const Eigen::MatrixXd cov = V.transpose() * V / static_cast<double>(m);
        const linalg::SqrtPair sp = linalg::sqrt_with_floored_inverse(cov, 1e-10);
        d.D.push_back(sp.sqrt);
        d.D_inv.push_back(sp.inv_sqrt);
        d.floored.push_back(sp.floored);
        d.Z.middleCols(d.offset[b], V.cols()) = V;
        d.Zs.middleCols(d.offset[b], V.cols()) = V * sp.inv_sqrt / root;
    }
    d.lambda_max = linalg::max_eigenvalue_psd(d.Zs.transpose() * d.Zs, 1e-10);
    return d;
}

VfarDesign assemble_design(const std::vector<FpcaResult>& fpca, std::size_t L) {
    std::vector<Eigen::MatrixXd> scores;
    scores.reserve(fpca.size());
    for (const auto& f : fpca) scores.push_back(f.scores);
    return assemble_design(scores, L);
}

CoefficientBlocks to_psi(const VfarDesign& design, const Eigen::MatrixXd& X) {
    if (X.rows() != design.r()) throw DimensionError("to_psi: coefficient rows do not match the design");
    const double scale = 1.0 / std::sqrt(static_cast<double>(design.rows()));
    CoefficientBlocks psi(design.blocks());
    for (std::size_t b = 0; b < design.blocks(); ++b) {
        const auto qk = static_cast<Eigen::Index>(design.block_size(b));
        psi[b] = scale * design.D_inv[b] * X.middleRows(design.offset[b], qk);
    }
    return psi;
}

Eigen::MatrixXd from_psi(const VfarDesign& design, const CoefficientBlocks& psi) {
    if (psi.size() != design.blocks()) throw DimensionError("from_psi: wrong number of blocks");
    const double scale = std::sqrt(static_cast<double>(design.rows()));
    Eigen::MatrixXd X(design.r(), psi.front().cols());
    for (std::size_t b = 0; b < design.blocks(); ++b) {
        const auto qk = static_cast<Eigen::Index>(design.block_size(b));
        if (psi[b].rows() != qk || psi[b].cols() != X.cols()) throw DimensionError("from_psi: block shape mismatch");
        X.middleRows(design.offset[b], qk) = scale * design.D[b] * psi[b];
    }
    return X;
}

// ---------------------------------------------------------------------------
// Objectives and proximal map
// ---------------------------------------------------------------------------

Eigen::MatrixXd group_prox(const Eigen::MatrixXd& Z, const std::vector<Eigen::Index>& block_rows, double threshold) {
    if (!(threshold >= 0.0)) throw UsageError("group_prox: threshold must be nonnegative");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Z.rows(), Z.cols());
    Eigen::Index row = 0;
    for (Eigen::Index size : block_rows) {
        const auto blk = Z.middleRows(row, size);
        const double nrm = blk.norm();
        if (nrm > threshold) out.middleRows(row, size) = (1.0 - threshold / nrm) * blk;
        row += size;
    }
    if (row != Z.rows()) throw DimensionError("group_prox: block sizes do not cover the rows");
    return out;
}

namespace {

void check_response(const VfarDesign& design, std::size_t j) {
    if (j >= design.p) throw UsageError("response index out of range");
}

double penalty(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& block_rows) {
    double acc = 0.0;
    Eigen::Index row = 0;
    for (Eigen::Index size : block_rows) {
        acc += X.middleRows(row, size).norm();
        row += size;
    }
    return acc;
}

}  // namespace

double objective_fit(const VfarDesign& design, std::size_t j, const CoefficientBlocks& psi, double gamma) {
    check_response(design, j);
    Eigen::MatrixXd resid = design.response[j];
    double pen = 0.0;
    for (std::size_t b = 0; b < design.blocks(); ++b) {
        const Eigen::MatrixXd fit = design.predictors[b] * psi[b];
        resid -= fit;
        pen += fit.norm();
    }
    return 0.5 * resid.squaredNorm() + gamma * pen;
}

double objective_standardized(const VfarDesign& design, std::size_t j, const CoefficientBlocks& B, double gamma_s) {
    check_response(design, j);
    const double m = static_cast<double>(design.rows());
    // D^{-1} B stacked.
    Eigen::MatrixXd DinvB(design.r(), design.response[j].cols());
    double pen = 0.0;
    for (std::size_t b = 0; b < design.blocks(); ++b) {
        const auto qk = static_cast<Eigen::Index>(design.block_size(b));
        DinvB.middleRows(design.offset[b], qk) = design.D_inv[b] * B[b];
        pen += B[b].norm();
    }
    const Eigen::MatrixXd ZDB = design.Z * DinvB;
    const double linear = (design.response[j].cwiseProduct(ZDB)).sum() / m;  // <<Y_hat, B>>
    const double quad = ZDB.squaredNorm() / m;                                // <<B, Gamma B>>
    return -linear + 0.5 * quad + gamma_s * pen;
}

// ---------------------------------------------------------------------------
// Block FISTA
// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
    if (!(step_factor > 0.0 && step_factor < 1.0)) throw UsageError("SolverConfig: step factor must lie in (0, 1)");
    if (!(tolerance > 0.0)) throw UsageError("SolverConfig: tolerance must be positive");
    if (max_iter < 1) throw UsageError("SolverConfig: max_iter must be positive");
}

SolverResult block_fista(const VfarDesign& design, std::size_t j, double gamma, const SolverConfig& config,
                         const Eigen::MatrixXd* warm_start) {
    check_response(design, j);
    config.validate();
    if (!(gamma >= 0.0)) throw UsageError("block_fista: gamma must be nonnegative");
    const Eigen::MatrixXd& Y = design.response[j];
    const Eigen::MatrixXd& Zs = design.Zs;
    const auto rows = design.block_rows();

    SolverResult res;
    const Eigen::Index r = design.r();
    const Eigen::Index qj = Y.cols();
    if (design.lambda_max <= 0.0) {
        // Degenerate design: nothing can be fitted.
        res.X = Eigen::MatrixXd::Zero(r, qj);
        res.final_objective = 0.5 * Y.squaredNorm();
        res.objective.push_back(res.final_objective);
        res.converged = true;
        return res;
    }
    const double C = config.step_factor / design.lambda_max;

    auto objective = [&](const Eigen::MatrixXd& X, const Eigen::MatrixXd& R) {
        return 0.5 * R.squaredNorm() + gamma * penalty(X, rows);
    };

    // X: extrapolated point; Xt: prox iterates. Residuals Y - Zs X are carried
    // along by the same affine updates and refreshed periodically.
    Eigen::MatrixXd Xt_prev = Eigen::MatrixXd::Zero(r, qj);
    if (warm_start) {
        if (warm_start->rows() != r || warm_start->cols() != qj) throw DimensionError("block_fista: warm start shape");
        Xt_prev = *warm_start;
    }
    Eigen::MatrixXd Rt_prev = Y - Zs * Xt_prev;
    double pen_prev = penalty(Xt_prev, rows);
    Eigen::MatrixXd X = Xt_prev;
    Eigen::MatrixXd R = Rt_prev;
    double theta = 1.0;
    double g_prev = objective(Xt_prev, Rt_prev);
    bool at_anchor = true;  // X coincides with the last accepted prox point
    res.objective.push_back(g_prev);

    for (int m = 0; m < config.max_iter; ++m) {
        ++res.iterations;
        const Eigen::MatrixXd grad = -(Zs.transpose() * R);
        const Eigen::MatrixXd Xt = group_prox(X - C * grad, rows, gamma * C);
        const Eigen::MatrixXd step = Xt - Xt_prev;
        const Eigen::MatrixXd Zstep = Zs * step;
        Eigen::MatrixXd Rt = (m % 64 == 63) ? Eigen::MatrixXd(Y - Zs * Xt) : Eigen::MatrixXd(Rt_prev - Zstep);
        const double pen_new = penalty(Xt, rows);
        // Objective change from the step itself: 1/2 ||R'||^2 - 1/2 ||R||^2 = -<Zs step, (R + R') / 2>.
        const double dg = -(Zstep.cwiseProduct(Rt_prev - 0.5 * Zstep)).sum() + gamma * (pen_new - pen_prev);
        if (!std::isfinite(dg)) throw NumericalError("block_fista: objective became non-finite");

        if (config.restart && dg > 0.0) {
            if (at_anchor) {
                // A plain proximal-gradient step cannot increase the objective;
                // an increase here is round-off at the optimum.
                res.converged = true;
                break;
            }
            ++res.restarts;
            X = Xt_prev;
            R = Rt_prev;
            theta = 1.0;
            at_anchor = true;
            continue;
        }

        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        const double proxy = ((X - Xt).cwiseProduct(step)).sum();
        if (config.restart && proxy > 0.0) {
            ++res.restarts;
            X = Xt;
            R = Rt;
            theta = 1.0;
            at_anchor = true;
        } else {
            const double omega = (theta - 1.0) / theta_next;
            X = Xt + omega * step;
            R = Rt - omega * Zstep;
            theta = theta_next;
            at_anchor = omega == 0.0;
        }

        const double g_new = g_prev + dg;
        const double change = std::abs(dg) / std::max(std::abs(g_new), std::numeric_limits<double>::min());
        Xt_prev = Xt;
        Rt_prev = std::move(Rt);
        pen_prev = pen_new;
        g_prev = g_new;
        res.objective.push_back(g_new);
        if (change < config.tolerance) {
            res.converged = true;
            break;
        }
    }
    res.X = Xt_prev;
    res.final_objective = objective(Xt_prev, Y - Zs * Xt_prev);
    return res;
}

double gamma_max(const VfarDesign& design, std::size_t j) {
    check_response(design, j);
    const Eigen::MatrixXd c = design.Zs.transpose() * design.response[j];
    double best = 0.0;
    for (std::size_t b = 0; b < design.blocks(); ++b)
        best = std::max(best, c.middleRows(design.offset[b], static_cast<Eigen::Index>(design.block_size(b))).norm());
    return best;
}

// ---------------------------------------------------------------------------
// Tuning
// ---------------------------------------------------------------------------

InformationCriterion information_criterion(const VfarDesign& design, std::size_t j, const Eigen::MatrixXd& X,
                                           double gamma) {
    check_response(design, j);
    const CoefficientBlocks psi = to_psi(design, X);
    InformationCriterion ic;
    Eigen::MatrixXd resid = design.response[j];
    const double qj = static_cast<double>(design.q[j]);
    for (std::size_t b = 0; b < design.blocks(); ++b) {
        const Eigen::MatrixXd fit = design.predictors[b] * psi[b];
        resid -= fit;
        if (psi[b].norm() == 0.0) continue;
        const double e = fit.squaredNorm();
        const double qk = static_cast<double>(design.block_size(b));
        const double ratio = e > 0.0 ? e / (e + gamma) : 0.0;
        ic.df += 1.0 + (qj * qk - 1.0) * ratio;
    }
    ic.rss = resid.squaredNorm();
    double logrss;
    if (ic.rss < 1e-300) {
        logrss = std::log(1e-300);
        ic.rss_floored = true;
    } else {
        logrss = std::log(ic.rss);
    }
    const double n = static_cast<double>(design.n);
    ic.aic = n * logrss + 2.0 * ic.df;
    ic.bic = n * logrss + std::log(n) * ic.df;
    return ic;
}

Criterion parse_criterion(std::string_view name) {
    if (name == "aic") return Criterion::aic;
    if (name == "bic") return Criterion::bic;
    throw UsageError("unknown criterion '" + std::string(name) + "' (expected aic or bic)");
}

std::vector<PathPoint> gamma_path(const VfarDesign& design, std::size_t j, const PathSpec& spec,
                                  const SolverConfig& config) {
    if (spec.length < 1) throw UsageError("gamma_path: path length must be at least 1");
    if (!(spec.min_ratio > 0.0 && spec.min_ratio < 1.0)) throw UsageError("gamma_path: min_ratio must lie in (0, 1)");
    // Slightly above the critical value so the first fit is exactly zero.
    const double top = gamma_max(design, j) * (1.0 + 1e-10);
    std::vector<PathPoint> path(spec.length);
    Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(design.r(), design.response[j].cols());
    for (std::size_t i = 0; i < spec.length; ++i) {
        const double frac = spec.length == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(spec.length - 1);
        PathPoint& pt = path[i];
        pt.gamma = top * std::pow(spec.min_ratio, frac);
        SolverResult sr = block_fista(design, j, pt.gamma, config, &warm);
        pt.X = std::move(sr.X);
        pt.iterations = sr.iterations;
        pt.restarts = sr.restarts;
        pt.final_objective = sr.final_objective;
        pt.ic = information_criterion(design, j, pt.X, pt.gamma);
        for (std::size_t b = 0; b < design.blocks(); ++b)
            if (pt.X.middleRows(design.offset[b], static_cast<Eigen::Index>(design.block_size(b))).norm() > 0.0)
                ++pt.active_blocks;
        warm = pt.X;
    }
    return path;
}

std::size_t select_on_path(const std::vector<PathPoint>& path, Criterion criterion) {
    if (path.empty()) throw UsageError("select_on_path: empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double v = criterion == Criterion::aic ? path[i].ic.aic : path[i].ic.bic;
        const double w = criterion == Criterion::aic ? path[best].ic.aic : path[best].ic.bic;
        if (v < w) best = i;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Kernels and graph
// ---------------------------------------------------------------------------

std::vector<KernelMatrix> reconstruct_A(const Grid& grid, const std::vector<CoefficientBlocks>& psi,
                                        const std::vector<Eigen::MatrixXd>& eigenfunctions, std::size_t L) {
    const std::size_t p = eigenfunctions.size();
    if (psi.size() != p) throw DimensionError("reconstruct_A: need coefficient blocks for every response");
    std::vector<KernelMatrix> A;
    for (std::size_t h = 0; h < L; ++h) A.emplace_back(p, p, grid);
    for (std::size_t j = 0; j < p; ++j) {
        if (psi[j].size() != L * p) throw DimensionError("reconstruct_A: wrong number of blocks");
        const Eigen::MatrixXd& phij = eigenfunctions[j];
        if (static_cast<std::size_t>(phij.rows()) != grid.size()) throw DimensionError("reconstruct_A: grid mismatch");
        for (std::size_t b = 0; b < L * p; ++b) {
            const std::size_t h = b / p;
            const std::size_t k = b % p;
            const Eigen::MatrixXd& phik = eigenfunctions[k];
            const Eigen::MatrixXd& P = psi[j][b];
            if (P.rows() != phik.cols() || P.cols() != phij.cols())
                throw DimensionError("reconstruct_A: block shape does not match eigenfunctions");
            if (P.isZero(0.0)) continue;  // exact zeros stay exact
            A[h].block(j, k).noalias() = phij * P.transpose() * phik.transpose();
        }
    }
    return A;
}

std::vector<Edge> granger_graph(const std::vector<KernelMatrix>& A, double tol) {
    if (!(tol >= 0.0)) throw UsageError("granger_graph: tolerance must be nonnegative");
    std::vector<Edge> edges;
    if (A.empty()) return edges;
    const std::size_t p = A.front().p_rows();
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) {
            Edge e{k, j, 0, 0.0};
            for (std::size_t h = 0; h < A.size(); ++h) {
                const double v = hs_norm(A[h].grid(), A[h].block(j, k));
                if (v > e.norm) {
                    e.norm = v;
                    e.h = h + 1;
                }
            }
            if (e.norm > tol) edges.push_back(e);
        }
    return edges;
}

KernelMatrix lift_to_var1(const std::vector<KernelMatrix>& A) {
    if (A.empty()) throw UsageError("lift_to_var1: no lag kernels");
    if (A.size() == 1) return A.front();
    const std::size_t L = A.size();
    const std::size_t p = A.front().p_rows();
    const Grid& grid = A.front().grid();
    for (const auto& a : A)
        if (a.p_rows() != p || a.p_cols() != p || !a.grid().same_as(grid))
            throw DimensionError("lift_to_var1: lag kernels differ in shape or grid");
    KernelMatrix out(p * L, p * L, grid);
    const BivariateKernel dirac = grid.weights().cwiseInverse().asDiagonal();
    for (std::size_t h = 0; h < L; ++h)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < p; ++k) out.block(j, h * p + k) = A[h].block(j, k);
    for (std::size_t h = 1; h < L; ++h)
        for (std::size_t j = 0; j < p; ++j) out.block(h * p + j, (h - 1) * p + j) = dirac;
    return out;
}

Eigen::MatrixXd grid_operator_matrix(const KernelMatrix& K) {
    const auto T = static_cast<Eigen::Index>(K.grid().size());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(K.p_rows()) * T, static_cast<Eigen::Index>(K.p_cols()) * T);
    for (std::size_t j = 0; j < K.p_rows(); ++j)
        for (std::size_t k = 0; k < K.p_cols(); ++k)
            out.block(static_cast<Eigen::Index>(j) * T, static_cast<Eigen::Index>(k) * T, T, T) =
                K.block(j, k) * K.grid().weights().asDiagonal();
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

VfarFit fit_from_fpca(const Grid& grid, std::vector<FpcaResult> fpca, const VfarOptions& options) {
    const VfarDesign design = assemble_design(fpca, options.L);
    VfarFit fit;
    fit.L = options.L;
    fit.p = design.p;
    fit.rank_deficient = std::any_of(design.floored.begin(), design.floored.end(), [](bool b) { return b; });
    fit.responses.resize(design.p);
    if (options.keep_path) fit.path.resize(design.p);

    parallel_for(design.p, [&](std::size_t j) {
        std::vector<PathPoint> path = gamma_path(design, j, options.path, options.solver);
        const std::size_t i = select_on_path(path, options.criterion);
        ResponseFit& rf = fit.responses[j];
        rf.gamma = path[i].gamma;
        rf.path_index = i;
        rf.ic = path[i].ic;
        rf.psi = to_psi(design, path[i].X);
        rf.iterations = path[i].iterations;
        rf.restarts = path[i].restarts;
        rf.final_objective = path[i].final_objective;
        if (options.keep_path) fit.path[j] = std::move(path);
    });

    std::vector<CoefficientBlocks> psi;
    std::vector<Eigen::MatrixXd> phi;
    for (std::size_t j = 0; j < design.p; ++j) {
        psi.push_back(fit.responses[j].psi);
        phi.push_back(fpca[j].eigenfunctions);
    }
    fit.A = reconstruct_A(grid, psi, phi, options.L);
    fit.edges = granger_graph(fit.A, options.edge_tol);
    fit.fpca = std::move(fpca);
    return fit;
}

VfarFit fit_vfar(const CurvePanel& panel, const VfarOptions& options, const Rng& rng) {
    if (panel.n() <= options.L) throw UsageError("fit_vfar: need more samples than the lag order");
    std::vector<FpcaResult> fpca = panel_fpca(panel, options.fpca, rng);
    return fit_from_fpca(panel.grid(), std::move(fpca), options);
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> path_support(const VfarDesign& design,
                                                                 const std::vector<const Eigen::MatrixXd*>& X) {
    if (X.size() != design.p) throw DimensionError("path_support: need one coefficient matrix per response");
    const auto p = static_cast<Eigen::Index>(design.p);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> S = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, p, false);
    for (std::size_t j = 0; j < design.p; ++j)
        for (std::size_t b = 0; b < design.blocks(); ++b)
            if (X[j]->middleRows(design.offset[b], static_cast<Eigen::Index>(design.block_size(b))).norm() > 0.0)
                S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(design.variable_of(b))) = true;
    return S;
}

}  // namespace svfar
