#include "svfar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "svfar/autocov.hpp"
#include "svfar/errors.hpp"
#include "svfar/parallel.hpp"
#include "svfar/stability.hpp"

namespace svfar {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

RocPoint roc_point(const SupportMatrix& estimate, const SupportMatrix& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw DimensionError("roc_point: support shapes differ");
    const auto positives = truth.count();
    const auto negatives = truth.size() - positives;
    if (positives == 0 || negatives == 0) throw DataError("roc: truth support is all true or all false");
    const auto tp = (estimate.array() && truth.array()).count();
    const auto fp = (estimate.array() && !truth.array()).count();
    return {static_cast<double>(fp) / static_cast<double>(negatives), static_cast<double>(tp) / static_cast<double>(positives)};
}

RocResult roc_auroc(const std::vector<SupportMatrix>& supports, const SupportMatrix& truth) {
    if (supports.empty()) throw UsageError("roc_auroc: empty path");
    std::vector<RocPoint> pts{{0.0, 0.0}, {1.0, 1.0}};
    for (const auto& s : supports) pts.push_back(roc_point(s, truth));
    std::sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) {
        return std::tie(a.fpr, a.tpr) < std::tie(b.fpr, b.tpr);
    });
    RocResult out;
    double best = 0.0;
    for (const auto& pt : pts) {
        best = std::max(best, pt.tpr);
        if (!out.points.empty() && out.points.back().fpr == pt.fpr) {
            out.points.back().tpr = best;
            continue;
        }
        out.points.push_back({pt.fpr, best});
    }
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const auto& a = out.points[i - 1];
        const auto& b = out.points[i];
        out.auroc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return out;
}

std::vector<SupportMatrix> path_supports(const VfarFit& fit) {
    if (fit.path.size() != fit.p || fit.p == 0) throw UsageError("path_supports: fit has no stored path");
    std::vector<Eigen::Index> offset, size;
    Eigen::Index row = 0;
    for (std::size_t b = 0; b < fit.L * fit.p; ++b) {
        offset.push_back(row);
        size.push_back(static_cast<Eigen::Index>(fit.fpca[b % fit.p].q));
        row += size.back();
    }
    const std::size_t length = fit.path.front().size();
    const auto p = static_cast<Eigen::Index>(fit.p);
    std::vector<SupportMatrix> out(length, SupportMatrix::Constant(p, p, false));
    for (std::size_t j = 0; j < fit.p; ++j) {
        if (fit.path[j].size() != length) throw DimensionError("path_supports: responses have different path lengths");
        for (std::size_t i = 0; i < length; ++i)
            for (std::size_t b = 0; b < offset.size(); ++b)
                if (fit.path[j][i].X.middleRows(offset[b], size[b]).norm() > 0.0)
                    out[i](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b % fit.p)) = true;
    }
    return out;
}

double relative_error(const KernelMatrix& A_hat, const KernelMatrix& A) {
    if (A_hat.p_rows() != A.p_rows() || A_hat.p_cols() != A.p_cols()) throw DimensionError("relative_error: shapes differ");
    const double denom = functional_norm(A, FunctionalNorm::frobenius);
    if (!(denom > 0.0)) throw UsageError("relative_error: true kernel matrix has zero norm");
    return functional_norm(A_hat - A, FunctionalNorm::frobenius) / denom;
}

std::vector<KernelMatrix> select_kernels(const VfarFit& fit, const Grid& grid, Criterion criterion) {
    if (fit.path.size() != fit.p) throw UsageError("select_kernels: fit has no stored path");
    const VfarDesign design = assemble_design(fit.fpca, fit.L);
    std::vector<CoefficientBlocks> psi;
    std::vector<Eigen::MatrixXd> phi;
    for (std::size_t j = 0; j < fit.p; ++j) {
        const std::size_t i = select_on_path(fit.path[j], criterion);
        psi.push_back(to_psi(design, fit.path[j][i].X));
        phi.push_back(fit.fpca[j].eigenfunctions);
    }
    return reconstruct_A(grid, psi, phi, fit.L);
}

VfarFit oracle_ls(const Grid& grid, std::vector<FpcaResult> fpca, const SupportMatrix& support, std::size_t L) {
    const VfarDesign design = assemble_design(fpca, L);
    if (support.rows() != static_cast<Eigen::Index>(design.p) || support.cols() != static_cast<Eigen::Index>(design.p))
        throw DimensionError("oracle_ls: support must be p x p");
    VfarFit fit;
    fit.L = L;
    fit.p = design.p;
    fit.responses.resize(design.p);
    std::vector<char> flagged(design.p, 0);

    parallel_for(design.p, [&](std::size_t j) {
        std::vector<std::size_t> active;
        Eigen::Index cols = 0;
        for (std::size_t b = 0; b < design.blocks(); ++b)
            if (support(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(design.variable_of(b)))) {
                active.push_back(b);
                cols += static_cast<Eigen::Index>(design.block_size(b));
            }
        ResponseFit& rf = fit.responses[j];
        rf.psi.resize(design.blocks());
        for (std::size_t b = 0; b < design.blocks(); ++b)
            rf.psi[b] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(design.block_size(b)), design.response[j].cols());
        if (cols > 0) {
            Eigen::MatrixXd Zsel(static_cast<Eigen::Index>(design.rows()), cols);
            Eigen::Index c = 0;
            for (std::size_t b : active) {
                const auto qb = static_cast<Eigen::Index>(design.block_size(b));
                Zsel.middleCols(c, qb) = design.Z.middleCols(design.offset[b], qb);
                c += qb;
            }
            Eigen::MatrixXd G = Zsel.transpose() * Zsel;
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G, Eigen::EigenvaluesOnly).eigenvalues();
            if (ev.minCoeff() <= 1e-10 * std::max(1.0, ev.maxCoeff())) flagged[j] = 1;
            G.diagonal().array() += 1e-10;
            const Eigen::MatrixXd sol = G.ldlt().solve(Zsel.transpose() * design.response[j]);
            c = 0;
            for (std::size_t b : active) {
                const auto qb = static_cast<Eigen::Index>(design.block_size(b));
                rf.psi[b] = sol.middleRows(c, qb);
                c += qb;
            }
        }
        rf.ic = information_criterion(design, j, from_psi(design, rf.psi), 0.0);
    });

    fit.rank_deficient = std::any_of(flagged.begin(), flagged.end(), [](char f) { return f != 0; });
    std::vector<CoefficientBlocks> psi;
    std::vector<Eigen::MatrixXd> phi;
    for (std::size_t j = 0; j < design.p; ++j) {
        psi.push_back(fit.responses[j].psi);
        phi.push_back(fpca[j].eigenfunctions);
    }
    fit.A = reconstruct_A(grid, psi, phi, L);
    fit.edges = granger_graph(fit.A);
    fit.fpca = std::move(fpca);
    return fit;
}

Method parse_method(std::string_view name) {
    if (name == "ls_a") return Method::ls_a;
    if (name == "ls_2") return Method::ls_2;
    if (name == "ls_1") return Method::ls_1;
    throw UsageError("unknown method '" + std::string(name) + "' (expected ls_a, ls_2, ls_1)");
}

std::string_view method_name(Method method) {
    switch (method) {
        case Method::ls_a: return "ls_a";
        case Method::ls_2: return "ls_2";
        case Method::ls_1: return "ls_1";
    }
    return "?";
}

VfarOptions method_options(Method method, VfarOptions base) {
    if (method == Method::ls_2) base.fpca.q_grid = {2};
    if (method == Method::ls_1) base.fpca.q_grid = {1};
    return base;
}

VfarFit method_variants(const CurvePanel& panel, Method method, const VfarOptions& base, const Rng& rng) {
    return fit_vfar(panel, method_options(method, base), rng);
}

void StudyConfig::validate() const {
    if (models.empty() || sizes.empty() || methods.empty()) throw UsageError("study: models, sizes and methods must be nonempty");
    if (replicates < 1) throw UsageError("study: replicates must be at least 1");
    for (const auto& [n, p] : sizes)
        if (n < 2 || p < 1) throw UsageError("study: invalid size");
}

std::vector<ReplicateResult> evaluate_replicate(const StudyConfig& config, SimModel model, std::size_t n, std::size_t p,
                                                std::size_t replicate, const Rng& rng) {
    SimSpec spec = config.base;
    spec.model = model;
    spec.n = n;
    spec.p = p;
    const auto [truth, sim] = simulate_replicate(spec, rng);
    const Grid grid = spec.grid();

    std::vector<ReplicateResult> out;
    for (Method method : config.methods) {
        VfarOptions opts = method_options(method, config.options);
        opts.keep_path = true;
        opts.criterion = config.criterion;
        std::vector<FpcaResult> fpca = panel_fpca(sim.observed, opts.fpca, rng.split(2));
        const bool run_oracle = config.oracle && method == Method::ls_a;
        std::vector<FpcaResult> fpca_copy = run_oracle ? fpca : std::vector<FpcaResult>{};
        const VfarFit fit = fit_from_fpca(grid, std::move(fpca), opts);

        ReplicateResult r;
        r.model = model;
        r.n = n;
        r.p = p;
        r.method = method;
        r.replicate = replicate;
        r.kappa = truth.kappa;
        const RocResult roc = roc_auroc(path_supports(fit), truth.support);
        r.auroc = roc.auroc;
        r.roc = roc.points;
        r.rel_error = relative_error(fit.A[0], truth.A);
        r.rel_error_bic = relative_error(select_kernels(fit, grid, Criterion::bic)[0], truth.A);
        r.rel_error_aic = relative_error(select_kernels(fit, grid, Criterion::aic)[0], truth.A);
        r.rel_error_oracle = std::numeric_limits<double>::quiet_NaN();
        if (run_oracle) r.rel_error_oracle = relative_error(oracle_ls(grid, std::move(fpca_copy), truth.support).A[0], truth.A);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ReplicateResult> run_study(const StudyConfig& config, const Rng& rng) {
    config.validate();
    struct Task {
        SimModel model;
        std::size_t n, p, cell, rep;
    };
    std::vector<Task> tasks;
    std::size_t cell = 0;
    for (SimModel model : config.models)
        for (const auto& [n, p] : config.sizes) {
            for (std::size_t r = 0; r < config.replicates; ++r) tasks.push_back({model, n, p, cell, r});
            ++cell;
        }
    std::vector<std::vector<ReplicateResult>> per_task(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
        const Task& t = tasks[i];
        per_task[i] = evaluate_replicate(config, t.model, t.n, t.p, t.rep, rng.split(t.cell).split(t.rep));
    });
    std::vector<ReplicateResult> out;
    for (auto& v : per_task)
        for (auto& r : v) out.push_back(std::move(r));
    return out;
}

std::vector<TableRow> summarize(const std::vector<ReplicateResult>& results) {
    using Key = std::tuple<std::string, std::size_t, std::size_t, std::string, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> values;
    auto add = [&](const ReplicateResult& r, const char* metric, double v) {
        if (std::isnan(v)) return;
        Key key{std::string(sim_model_name(r.model)), r.n, r.p, std::string(method_name(r.method)), metric};
        auto [it, inserted] = values.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(v);
    };
    for (const auto& r : results) {
        add(r, "auroc", r.auroc);
        add(r, "rel_error", r.rel_error);
        add(r, "rel_error_bic", r.rel_error_bic);
        add(r, "rel_error_aic", r.rel_error_aic);
        add(r, "rel_error_oracle", r.rel_error_oracle);
    }
    std::vector<TableRow> rows;
    for (const auto& key : order) {
        const auto& v = values[key];
        TableRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), std::get<4>(key), v.size(), 0.0, 0.0};
        for (double x : v) row.mean += x;
        row.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - row.mean) * (x - row.mean);
            row.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << "model,n,p,method,metric,count,mean,se\n";
    for (const auto& r : rows)
        os << r.model << ',' << r.n << ',' << r.p << ',' << r.method << ',' << r.metric << ',' << r.count << ','
           << fmt(r.mean) << ',' << fmt(r.se) << '\n';
    return os.str();
}

std::string table_json(const std::vector<TableRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        arr.push_back({{"model", r.model}, {"n", r.n}, {"p", r.p}, {"method", r.method}, {"metric", r.metric},
                       {"count", r.count}, {"mean", r.mean}, {"se", r.se}});
    return nlohmann::ordered_json{{"rows", arr}}.dump(2) + "\n";
}

std::vector<TableRow> read_table_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("table json: ") + e.what());
    }
    std::vector<TableRow> rows;
    try {
        for (const auto& r : j.at("rows"))
            rows.push_back({r.at("model").get<std::string>(), r.at("n").get<std::size_t>(), r.at("p").get<std::size_t>(),
                            r.at("method").get<std::string>(), r.at("metric").get<std::string>(),
                            r.at("count").get<std::size_t>(), r.at("mean").get<double>(), r.at("se").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("table json: ") + e.what());
    }
    return rows;
}

std::string roc_csv(const std::vector<ReplicateResult>& results) {
    std::ostringstream os;
    os << "model,n,p,method,replicate,fpr,tpr\n";
    for (const auto& r : results)
        for (const auto& pt : r.roc)
            os << sim_model_name(r.model) << ',' << r.n << ',' << r.p << ',' << method_name(r.method) << ',' << r.replicate
               << ',' << fmt(pt.fpr) << ',' << fmt(pt.tpr) << '\n';
    return os.str();
}

void ConcentrationSpec::validate() const {
    std::vector<std::size_t> sorted = ns;
    std::sort(sorted.begin(), sorted.end());
    if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 4)
        throw UsageError("concentration: need at least 4 distinct sample sizes");
    if (replicates < 20) throw UsageError("concentration: need at least 20 replicates per sample size");
    if (p < 1 || basis_dim < 1 || T < 2) throw UsageError("concentration: invalid dimensions");
    if (!(std::abs(a) < 1.0)) throw UsageError("concentration: |a| must be below 1");
    if (sorted.front() < 2) throw UsageError("concentration: sample sizes must be at least 2");
}

ConcentrationReport concentration_experiment(const ConcentrationSpec& spec, const Rng& rng) {
    spec.validate();
    SimSpec sim;
    sim.p = spec.p;
    sim.T = spec.T;
    sim.basis_dim = spec.basis_dim;
    sim.model = SimModel::block_banded;
    sim.noise_sd = 0.0;
    const auto dim = static_cast<Eigen::Index>(spec.p * spec.basis_dim);
    const Eigen::MatrixXd B = spec.a * Eigen::MatrixXd::Identity(dim, dim);
    const KernelMatrix sigma0 = kernels_from_coefficients(sim.grid(), stationary_covariance(B, 1.0), spec.basis_dim);

    ConcentrationReport report;
    report.ns = spec.ns;
    for (std::size_t ni = 0; ni < spec.ns.size(); ++ni) {
        sim.n = spec.ns[ni];
        const GroundTruth truth = truth_from_coefficients(sim, B);
        std::vector<double> errors(spec.replicates);
        parallel_for(spec.replicates, [&](std::size_t r) {
            const SimulatedPanel panel = simulate_panel(truth, sim, rng.split(ni).split(r));
            errors[r] = covariance_error(sample_autocovariance(panel.latent, 0), sigma0).max;
        });
        std::sort(errors.begin(), errors.end());
        const std::size_t m = errors.size();
        report.median_error.push_back(m % 2 ? errors[m / 2] : 0.5 * (errors[m / 2 - 1] + errors[m / 2]));
    }

    const auto k = static_cast<Eigen::Index>(spec.ns.size());
    Eigen::VectorXd x(k), y(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        x(i) = std::log(static_cast<double>(spec.ns[static_cast<std::size_t>(i)]));
        y(i) = std::log(report.median_error[static_cast<std::size_t>(i)]);
    }
    const double xm = x.mean(), ym = y.mean();
    const double sxx = (x.array() - xm).square().sum();
    report.slope = ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
    report.intercept = ym - report.slope * xm;
    const double ssr = (y.array() - report.intercept - report.slope * x.array()).square().sum();
    report.slope_se = k > 2 ? std::sqrt(ssr / static_cast<double>(k - 2) / sxx) : 0.0;
    return report;
}

}  // namespace svfar
