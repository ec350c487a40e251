#include "svfar/stability.hpp"

#include <cmath>
#include <numbers>

#include "svfar/errors.hpp"

namespace svfar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_square(const Eigen::MatrixXd& B, const char* what) {
    if (B.rows() != B.cols()) throw DimensionError(std::string(what) + ": matrix is not square");
    if (!B.allFinite()) throw DataError(std::string(what) + ": matrix has non-finite entries");
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& B) {
    require_square(B, "spectral_radius");
    if (B.size() == 0) return 0.0;
    double s = B.cwiseAbs().maxCoeff();
    if (s == 0.0) return 0.0;
    Eigen::MatrixXd M = B / s;
    double log_rho = std::log(s);
    double weight = 1.0;
    for (int m = 0; m < 64; ++m) {
        M = (M * M).eval();
        weight *= 0.5;
        s = M.cwiseAbs().maxCoeff();
        if (s == 0.0) return 0.0;  // nilpotent
        M /= s;
        log_rho += weight * std::log(s);
    }
    return std::exp(log_rho);
}

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& C, double sigma2) {
    require_square(C, "stationary_covariance");
    if (!(sigma2 > 0.0)) throw UsageError("stationary_covariance: sigma2 must be positive");
    const double rho = spectral_radius(C);
    if (!(rho < 1.0)) throw NonStationaryError("stationary_covariance: spectral radius " + std::to_string(rho) + " >= 1");

    const auto d = C.rows();
    Eigen::MatrixXd S = sigma2 * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd A = C;
    for (int it = 0; it < 200; ++it) {
        const Eigen::MatrixXd delta = A * S * A.transpose();
        S += delta;
        A = (A * A).eval();
        if (delta.cwiseAbs().maxCoeff() < 1e-12) return 0.5 * (S + S.transpose());
    }
    throw NumericalError("stationary_covariance: doubling iteration did not converge");
}

SpectralModel make_spectral_model(const Eigen::MatrixXd& C, double sigma2) {
    SpectralModel model;
    model.C = C;
    model.sigma2 = sigma2;
    model.S0 = stationary_covariance(C, sigma2);
    return model;
}

Eigen::MatrixXd illustrative_transition(double a, double b) {
    Eigen::MatrixXd C(2, 2);
    C << a, b, 0.0, a;
    return C;
}

namespace {

// (I - C e^{-i theta})^{-1}
Eigen::MatrixXcd transfer_inverse(const Eigen::MatrixXd& C, double theta) {
    const auto d = C.rows();
    const std::complex<double> z = std::polar(1.0, -theta);
    const Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(d, d) - C.cast<std::complex<double>>() * z;
    return M.partialPivLu().inverse();
}

}  // namespace

Eigen::MatrixXcd spectral_density(const SpectralModel& model, double theta) {
    if (!(theta >= -std::numbers::pi && theta <= std::numbers::pi))
        throw UsageError("spectral_density: theta must lie in [-pi, pi]");
    const Eigen::MatrixXcd X = transfer_inverse(model.C, theta);
    Eigen::MatrixXcd f = (model.sigma2 / kTwoPi) * X * X.adjoint();
    return 0.5 * (f + f.adjoint());
}

std::vector<double> theta_grid(std::size_t N) {
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i)
        out[i] = -std::numbers::pi + kTwoPi * static_cast<double>(i) / static_cast<double>(N);
    return out;
}

StabilityReport stability_measure(const SpectralModel& model, std::size_t theta_grid_size) {
    if (theta_grid_size < 64) throw UsageError("stability_measure: theta grid needs at least 64 points");
    require_square(model.C, "stability_measure");

    StabilityReport report;
    report.theta_grid_size = theta_grid_size;
    report.spec_radius = spectral_radius(model.C);
    if (!(report.spec_radius < 1.0))
        throw NonStationaryError("stability_measure: spectral radius " + std::to_string(report.spec_radius) + " >= 1");
    report.op_norm_A = model.C.size() == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(model.C).singularValues()(0);

    const Eigen::LLT<Eigen::MatrixXd> chol(model.S0);
    if (chol.info() != Eigen::Success) throw NumericalError("stability_measure: S0 is not positive definite");
    const Eigen::MatrixXcd Linv =
        chol.matrixL().solve(Eigen::MatrixXd::Identity(model.S0.rows(), model.S0.cols())).cast<std::complex<double>>();

    double best = -1.0;
    double best_one = -1.0;
    for (double theta : theta_grid(theta_grid_size)) {
        const Eigen::MatrixXcd f = spectral_density(model, theta);
        const Eigen::MatrixXcd G = Linv * f * Linv.adjoint();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (G + G.adjoint()), Eigen::EigenvaluesOnly);
        const double top = kTwoPi * es.eigenvalues().maxCoeff();
        if (top > best) {
            best = top;
            report.theta_max = theta;
        }
        for (Eigen::Index j = 0; j < f.rows(); ++j) best_one = std::max(best_one, kTwoPi * f(j, j).real() / model.S0(j, j));
    }
    report.m_fx = best;
    report.m1_fx = best_one;
    return report;
}

Eigen::MatrixXd inverse_transform(const SpectralModel& model, int h, std::size_t theta_grid_size) {
    const auto d = model.C.rows();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
    for (double theta : theta_grid(theta_grid_size))
        acc += spectral_density(model, theta) * std::polar(1.0, static_cast<double>(h) * theta);
    return (acc * (kTwoPi / static_cast<double>(theta_grid_size))).real();
}

std::vector<Figure1Row> figure1_curves(const std::vector<double>& a_values, const std::vector<double>& b_values,
                                       std::size_t theta_grid_size) {
    std::vector<Figure1Row> rows;
    rows.reserve(a_values.size() * b_values.size());
    for (double a : a_values) {
        if (!(std::abs(a) < 1.0)) throw UsageError("figure1_curves: |a| must be below 1");
        for (double b : b_values) {
            const SpectralModel model = make_spectral_model(illustrative_transition(a, b), 1.0);
            const StabilityReport rep = stability_measure(model, theta_grid_size);
            rows.push_back({a, b, rep.op_norm_A, rep.m_fx});
        }
    }
    return rows;
}

}  // namespace svfar
