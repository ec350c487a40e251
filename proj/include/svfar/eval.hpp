#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svfar/funcspace.hpp"
#include "svfar/rng.hpp"
#include "svfar/simgen.hpp"
#include "svfar/vfar.hpp"

namespace svfar {

using SupportMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  ///< sorted by FPR, TPR made nondecreasing, anchored at (0,0) and (1,1)
    double auroc = 0.0;
};

/// TPR and FPR of an estimated support against the truth over all p^2 pairs.
RocPoint roc_point(const SupportMatrix& estimate, const SupportMatrix& truth);

/// ROC curve of a sequence of estimated supports and its trapezoidal area.
RocResult roc_auroc(const std::vector<SupportMatrix>& supports, const SupportMatrix& truth);

/// Support of path index i across all responses; requires a fit with keep_path.
std::vector<SupportMatrix> path_supports(const VfarFit& fit);

/// ||A_hat - A||_F / ||A||_F with the functional Frobenius norm.
double relative_error(const KernelMatrix& A_hat, const KernelMatrix& A);

/// Kernels of fit re-selected on its stored path with another criterion, one per lag.
std::vector<KernelMatrix> select_kernels(const VfarFit& fit, const Grid& grid, Criterion criterion);

/// Least squares restricted to the blocks of the true support (any lag),
/// solved by normal equations with ridge floor 1e-10. rank_deficient is set
/// when the restricted Gram matrix needed the floor.
VfarFit oracle_ls(const Grid& grid, std::vector<FpcaResult> fpca, const SupportMatrix& support, std::size_t L = 1);

enum class Method { ls_a, ls_2, ls_1 };
Method parse_method(std::string_view name);
std::string_view method_name(Method method);

/// Options with the method's truncation rule applied: CV q for ls_a, q = 2 for ls_2, q = 1 for ls_1.
VfarOptions method_options(Method method, VfarOptions base);

VfarFit method_variants(const CurvePanel& panel, Method method, const VfarOptions& base, const Rng& rng);

struct StudyConfig {
    std::vector<SimModel> models{SimModel::block_sparse};
    std::vector<std::pair<std::size_t, std::size_t>> sizes{{100, 40}};
    std::vector<Method> methods{Method::ls_a, Method::ls_2, Method::ls_1};
    std::size_t replicates = 20;
    Criterion criterion = Criterion::bic;
    bool oracle = true;
    SimSpec base;
    VfarOptions options;

    void validate() const;
};

struct ReplicateResult {
    SimModel model = SimModel::block_sparse;
    std::size_t n = 0;
    std::size_t p = 0;
    Method method = Method::ls_a;
    std::size_t replicate = 0;
    double auroc = 0.0;
    double rel_error = 0.0;       ///< criterion-selected fit
    double rel_error_aic = 0.0;
    double rel_error_bic = 0.0;
    double rel_error_oracle = 0.0;  ///< NaN unless the oracle is run (ls_a only)
    double kappa = 0.0;
    std::vector<RocPoint> roc;
};

/// Runs every (model, size, replicate) cell; replicate r of cell c draws its
/// data from rng.split(c).split(r), shared by all methods.
std::vector<ReplicateResult> run_study(const StudyConfig& config, const Rng& rng);

/// One replicate of one cell on a simulated panel.
std::vector<ReplicateResult> evaluate_replicate(const StudyConfig& config, SimModel model, std::size_t n, std::size_t p,
                                                std::size_t replicate, const Rng& rng);

struct TableRow {
    std::string model;
    std::size_t n = 0;
    std::size_t p = 0;
    std::string method;
    std::string metric;
    std::size_t count = 0;
    double mean = 0.0;
    double se = 0.0;  ///< sample sd / sqrt(count)
};

/// Mean and standard error per (model, n, p, method, metric), in first-seen order.
std::vector<TableRow> summarize(const std::vector<ReplicateResult>& results);

std::string table_csv(const std::vector<TableRow>& rows);
std::string table_json(const std::vector<TableRow>& rows);
std::vector<TableRow> read_table_json(std::string_view text);
/// ROC points as CSV rows model,n,p,method,replicate,fpr,tpr.
std::string roc_csv(const std::vector<ReplicateResult>& results);

struct ConcentrationSpec {
    std::size_t p = 10;
    std::vector<std::size_t> ns{100, 200, 400, 800};
    std::size_t replicates = 20;
    double a = 0.0;  ///< transition B = a I on the basis coefficients
    std::size_t T = 50;
    std::size_t basis_dim = 5;

    void validate() const;
};

struct ConcentrationReport {
    std::vector<std::size_t> ns;
    std::vector<double> median_error;  ///< median ||Sigma_hat_0 - Sigma_0||_max per n
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
};

/// Lag-0 covariance error of noise-free simulated panels and its log-log slope in n.
ConcentrationReport concentration_experiment(const ConcentrationSpec& spec, const Rng& rng);

}  // namespace svfar
