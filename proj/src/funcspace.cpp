#include "svfar/funcspace.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <cstdio>

#include "svfar/errors.hpp"

namespace svfar {

Grid::Grid(std::vector<double> points) {
    const std::size_t T = points.size();
    if (T < 2) throw UsageError("Grid: at least two points are required");
    for (std::size_t s = 0; s < T; ++s) {
        if (!std::isfinite(points[s])) throw DataError("Grid: non-finite point");
        if (s > 0 && !(points[s] > points[s - 1])) throw DataError("Grid: points must be strictly increasing");
    }
    if (points.front() < 0.0 || points.back() > 1.0) throw DataError("Grid: points must lie in [0, 1]");

    points_ = Eigen::Map<const Eigen::VectorXd>(points.data(), static_cast<Eigen::Index>(T));
    weights_.resize(static_cast<Eigen::Index>(T));
    for (std::size_t s = 0; s < T; ++s) {
        const double left = s > 0 ? points[s] - points[s - 1] : 0.0;
        const double right = s + 1 < T ? points[s + 1] - points[s] : 0.0;
        weights_(static_cast<Eigen::Index>(s)) = 0.5 * (left + right);
    }
}

Grid Grid::uniform(std::size_t T) {
    if (T < 2) throw UsageError("Grid::uniform: T must be at least 2");
    std::vector<double> pts(T);
    for (std::size_t s = 0; s < T; ++s) pts[s] = static_cast<double>(s) / static_cast<double>(T - 1);
    return Grid(std::move(pts));
}

bool Grid::same_as(const Grid& other) const {
    if (size() != other.size()) return false;
    return size() == 0 || std::memcmp(points_.data(), other.points_.data(), size() * sizeof(double)) == 0;
}

std::string Grid::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(points_.data());
    for (std::size_t i = 0; i < size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CurvePanel::CurvePanel(std::size_t n, std::size_t p, Grid grid) : n_(n), grid_(std::move(grid)) {
    vars_.assign(p, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid_.size())));
}

CurvePanel::CurvePanel(Grid grid, std::vector<Eigen::MatrixXd> variables)
    : grid_(std::move(grid)), vars_(std::move(variables)) {
    n_ = vars_.empty() ? 0 : static_cast<std::size_t>(vars_.front().rows());
    for (const auto& v : vars_) {
        if (static_cast<std::size_t>(v.rows()) != n_ || static_cast<std::size_t>(v.cols()) != grid_.size())
            throw DimensionError("CurvePanel: variables must all be n x T");
        if (!v.allFinite()) throw DataError("CurvePanel: non-finite curve value");
    }
}

void CurvePanel::set_curve(std::size_t t, std::size_t j, const Curve& c) {
    if (static_cast<std::size_t>(c.size()) != grid_.size()) throw DimensionError("CurvePanel::set_curve: length mismatch");
    vars_.at(j).row(static_cast<Eigen::Index>(t)) = c.transpose();
}

KernelMatrix::KernelMatrix(std::size_t p_rows, std::size_t p_cols, Grid grid)
    : p_rows_(p_rows), p_cols_(p_cols), grid_(std::move(grid)) {
    const auto T = static_cast<Eigen::Index>(grid_.size());
    blocks_.assign(p_rows * p_cols, BivariateKernel::Zero(T, T));
}

KernelMatrix KernelMatrix::operator-(const KernelMatrix& rhs) const {
    if (p_rows_ != rhs.p_rows_ || p_cols_ != rhs.p_cols_) throw DimensionError("KernelMatrix: shape mismatch");
    if (!grid_.same_as(rhs.grid_)) throw DimensionError("KernelMatrix: grid mismatch");
    KernelMatrix out(*this);
    for (std::size_t i = 0; i < blocks_.size(); ++i) out.blocks_[i] -= rhs.blocks_[i];
    return out;
}

namespace {

void check_curve(const Grid& grid, const Curve& f, const char* what) {
    if (static_cast<std::size_t>(f.size()) != grid.size())
        throw DimensionError(std::string(what) + ": curve length does not match grid");
}

void check_kernel(const Grid& grid, const BivariateKernel& K, const char* what) {
    const auto T = static_cast<Eigen::Index>(grid.size());
    if (K.rows() != T || K.cols() != T) throw DimensionError(std::string(what) + ": kernel does not match grid");
}

}  // namespace

double inner_product(const Grid& grid, const Curve& f, const Curve& g) {
    check_curve(grid, f, "inner_product");
    check_curve(grid, g, "inner_product");
    return (grid.weights().array() * f.array() * g.array()).sum();
}

double norm(const Grid& grid, const Curve& f) { return std::sqrt(inner_product(grid, f, f)); }

Curve kernel_apply(const Grid& grid, const BivariateKernel& K, const Curve& f) {
    check_kernel(grid, K, "kernel_apply");
    check_curve(grid, f, "kernel_apply");
    return K * grid.weights().cwiseProduct(f);
}

double hs_norm(const Grid& grid, const BivariateKernel& K) {
    check_kernel(grid, K, "hs_norm");
    const Eigen::VectorXd& w = grid.weights();
    return std::sqrt((w.asDiagonal() * K.cwiseAbs2() * w.asDiagonal()).sum());
}

FunctionalNorm parse_functional_norm(std::string_view name) {
    if (name == "max") return FunctionalNorm::max;
    if (name == "frobenius" || name == "F") return FunctionalNorm::frobenius;
    if (name == "linf" || name == "inf") return FunctionalNorm::linf;
    throw UsageError("unknown functional norm '" + std::string(name) + "' (expected max, frobenius, linf)");
}

Eigen::MatrixXd block_hs_norms(const KernelMatrix& M) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(M.p_rows()), static_cast<Eigen::Index>(M.p_cols()));
    for (std::size_t j = 0; j < M.p_rows(); ++j)
        for (std::size_t k = 0; k < M.p_cols(); ++k)
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = hs_norm(M.grid(), M.block(j, k));
    return out;
}

double functional_norm(const KernelMatrix& M, FunctionalNorm kind) {
    if (M.p_rows() == 0 || M.p_cols() == 0) return 0.0;
    const Eigen::MatrixXd hs = block_hs_norms(M);
    switch (kind) {
        case FunctionalNorm::max: return hs.maxCoeff();
        case FunctionalNorm::frobenius: return hs.norm();
        case FunctionalNorm::linf: return hs.rowwise().sum().maxCoeff();
    }
    throw UsageError("functional_norm: unknown kind");
}

BlockNorm parse_block_norm(std::string_view name) {
    if (name == "max_q" || name == "max") return BlockNorm::max_q;
    if (name == "l1_q" || name == "l1") return BlockNorm::l1_q;
    if (name == "frobenius" || name == "F") return BlockNorm::frobenius;
    throw UsageError("unknown block norm '" + std::string(name) + "' (expected max_q, l1_q, frobenius)");
}

double block_matrix_norm(const Eigen::MatrixXd& B, std::size_t q, BlockNorm kind) {
    if (q == 0) throw DimensionError("block_matrix_norm: block size must be positive");
    const auto qi = static_cast<Eigen::Index>(q);
    if (B.rows() % qi != 0 || B.cols() % qi != 0)
        throw DimensionError("block_matrix_norm: matrix shape is not a multiple of the block size");
    if (kind == BlockNorm::frobenius) return B.norm();
    const Eigen::Index rb = B.rows() / qi;
    const Eigen::Index cb = B.cols() / qi;
    if (rb == 0 || cb == 0) return 0.0;
    Eigen::MatrixXd norms(rb, cb);
    for (Eigen::Index j = 0; j < rb; ++j)
        for (Eigen::Index k = 0; k < cb; ++k) norms(j, k) = B.block(j * qi, k * qi, qi, qi).norm();
    if (kind == BlockNorm::max_q) return norms.maxCoeff();
    return norms.colwise().sum().maxCoeff();
}

}  // namespace svfar
