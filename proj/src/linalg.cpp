#include "svfar/linalg.hpp"

#include <cmath>

#include "svfar/errors.hpp"

namespace svfar::linalg {

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw DimensionError("sym_sqrt: matrix is not square");
    if (s.size() == 0) return s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

SqrtPair sqrt_with_floored_inverse(const Eigen::MatrixXd& s, double rel_floor) {
    if (s.rows() != s.cols()) throw DimensionError("sqrt_with_floored_inverse: matrix is not square");
    SqrtPair out;
    if (s.size() == 0) {
        out.sqrt = s;
        out.inv_sqrt = s;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    const double top = ev.maxCoeff();
    const Eigen::MatrixXd& vecs = es.eigenvectors();
    out.sqrt = vecs * ev.cwiseSqrt().asDiagonal() * vecs.transpose();
    if (top <= 0.0) {
        // All-zero block: no direction carries signal, the inverse maps to zero.
        out.inv_sqrt = Eigen::MatrixXd::Zero(s.rows(), s.cols());
        out.floored = true;
        return out;
    }
    const double floor = rel_floor * top;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < floor) {
            ev(i) = floor;
            out.floored = true;
        }
    }
    out.inv_sqrt = vecs * ev.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose();
    return out;
}

double max_eigenvalue_psd(const Eigen::MatrixXd& g, double rel_tol, int max_iter) {
    if (g.rows() != g.cols()) throw DimensionError("max_eigenvalue_psd: matrix is not square");
    const Eigen::Index n = g.rows();
    if (n == 0) return 0.0;
    // Deterministic start with a component along every coordinate.
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.01 * static_cast<double>(i % 7);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = g * x;
        const double next = x.dot(y);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        x = y / norm;
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace svfar::linalg
