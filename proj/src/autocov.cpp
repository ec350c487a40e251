#include "svfar/autocov.hpp"

#include "svfar/errors.hpp"

namespace svfar {

CurvePanel centering(const CurvePanel& panel) {
    if (panel.n() < 1) throw UsageError("centering: panel is empty");
    CurvePanel out(panel);
    for (std::size_t j = 0; j < panel.p(); ++j) {
        Eigen::MatrixXd& v = out.variable(j);
        const Eigen::RowVectorXd mean = v.colwise().mean();
        v.rowwise() -= mean;
    }
    return out;
}

KernelMatrix sample_autocovariance(const CurvePanel& panel, std::size_t h, bool center) {
    const std::size_t n = panel.n();
    if (h >= n) throw UsageError("sample_autocovariance: lag must be smaller than the sample size");
    const CurvePanel centered = center ? centering(panel) : CurvePanel{};
    const CurvePanel& src = center ? centered : panel;

    const std::size_t p = src.p();
    const auto m = static_cast<Eigen::Index>(n - h);
    KernelMatrix out(p, p, src.grid());
    const double scale = 1.0 / static_cast<double>(n - h);
    for (std::size_t j = 0; j < p; ++j) {
        const auto lead = src.variable(j).topRows(m);
        for (std::size_t k = 0; k < p; ++k) {
            const auto lag = src.variable(k).bottomRows(m);
            out.block(j, k).noalias() = scale * (lead.transpose() * lag);
        }
    }
    return out;
}

CovarianceError covariance_error(const KernelMatrix& est, const KernelMatrix& truth) {
    const KernelMatrix diff = est - truth;
    return {functional_norm(diff, FunctionalNorm::max), functional_norm(diff, FunctionalNorm::frobenius)};
}

Eigen::MatrixXd weighted_operator_matrix(const KernelMatrix& S) {
    if (S.p_rows() != S.p_cols()) throw DimensionError("weighted_operator_matrix: kernel matrix must be square");
    const auto T = static_cast<Eigen::Index>(S.grid().size());
    const auto p = static_cast<Eigen::Index>(S.p_rows());
    const Eigen::VectorXd root = S.grid().weights().cwiseSqrt();
    Eigen::MatrixXd out(p * T, p * T);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < p; ++k)
            out.block(j * T, k * T, T, T) =
                root.asDiagonal() * S.block(static_cast<std::size_t>(j), static_cast<std::size_t>(k)) * root.asDiagonal();
    return out;
}

}  // namespace svfar
