#include <gtest/gtest.h>

#include <cmath>

#include "svfar/errors.hpp"
#include "svfar/eval.hpp"

using namespace svfar;

namespace {

SupportMatrix random_support(Eigen::Index p, double density, Rng& rng) {
    SupportMatrix s(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < p; ++k) s(j, k) = rng.uniform() < density;
    return s;
}

// Nested supports adding pairs in the given order.
std::vector<SupportMatrix> ranked_path(const std::vector<std::size_t>& order, Eigen::Index p) {
    std::vector<SupportMatrix> path;
    SupportMatrix s = SupportMatrix::Constant(p, p, false);
    path.push_back(s);
    for (std::size_t idx : order) {
        s(static_cast<Eigen::Index>(idx) / p, static_cast<Eigen::Index>(idx) % p) = true;
        path.push_back(s);
    }
    return path;
}

}  // namespace

TEST(Roc, PerfectSeparationGivesOne) {
    Rng rng(1);
    const SupportMatrix truth = random_support(8, 0.3, rng);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < 64; ++i)
        if (truth(static_cast<Eigen::Index>(i / 8), static_cast<Eigen::Index>(i % 8))) order.push_back(i);
    for (std::size_t i = 0; i < 64; ++i)
        if (!truth(static_cast<Eigen::Index>(i / 8), static_cast<Eigen::Index>(i % 8))) order.push_back(i);
    EXPECT_DOUBLE_EQ(roc_auroc(ranked_path(order, 8), truth).auroc, 1.0);
    EXPECT_DOUBLE_EQ(roc_auroc({truth}, truth).auroc, 1.0);
    // Reversed ranking: only the final trapezoid into (1, 1) has area.
    std::reverse(order.begin(), order.end());
    const double negatives = static_cast<double>(64 - truth.count());
    EXPECT_NEAR(roc_auroc(ranked_path(order, 8), truth).auroc, 0.5 / negatives, 1e-15);
}

TEST(Roc, RandomRankingIsChance) {
    Rng rng(2);
    double total = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        SupportMatrix truth;
        do truth = random_support(10, 0.3, rng);
        while (truth.count() == 0 || truth.count() == 100);
        const auto order = permutation(100, rng);
        const RocResult r = roc_auroc(ranked_path(order, 10), truth);
        total += r.auroc;
        EXPECT_GE(r.auroc, 0.0);
        EXPECT_LE(r.auroc, 1.0);
        for (std::size_t i = 1; i < r.points.size(); ++i) {
            EXPECT_GT(r.points[i].fpr, r.points[i - 1].fpr);
            EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
        }
    }
    EXPECT_NEAR(total / 100.0, 0.5, 0.05);
}

TEST(Roc, DegenerateTruthThrows) {
    const SupportMatrix all = SupportMatrix::Constant(3, 3, true);
    EXPECT_THROW(roc_auroc({all}, all), DataError);
    EXPECT_THROW(roc_auroc({all}, SupportMatrix::Constant(3, 3, false)), DataError);
    EXPECT_THROW(roc_auroc({}, all), UsageError);
}

TEST(Roc, PointRates) {
    SupportMatrix truth(2, 2), est(2, 2);
    truth << true, false, true, false;
    est << true, true, false, false;
    const RocPoint pt = roc_point(est, truth);
    EXPECT_DOUBLE_EQ(pt.tpr, 0.5);
    EXPECT_DOUBLE_EQ(pt.fpr, 0.5);
}

TEST(RelativeError, ExamplesAndBasisInvariance) {
    SimSpec spec;
    spec.model = SimModel::block_banded;
    spec.p = 4;
    Rng rng(3);
    const GroundTruth truth = gen_transition(spec, rng);
    EXPECT_EQ(relative_error(truth.A, truth.A), 0.0);
    EXPECT_NEAR(relative_error(KernelMatrix(4, 4, truth.A.grid()), truth.A), 1.0, 1e-15);
    EXPECT_THROW(relative_error(truth.A, KernelMatrix(4, 4, truth.A.grid())), UsageError);

    // Perturbed coefficients: kernel error equals coefficient error under the isometry.
    Eigen::MatrixXd Bhat = truth.B;
    for (Eigen::Index i = 0; i < Bhat.rows(); ++i) Bhat(i, i) += 0.1 * rng.normal();
    const KernelMatrix Ahat = kernels_from_coefficients(truth.A.grid(), Bhat, 5);
    EXPECT_NEAR(relative_error(Ahat, truth.A), (Bhat - truth.B).norm() / truth.B.norm(), 1e-8);
}

TEST(OracleLs, FullSupportMatchesNormalEquations) {
    const Grid g = Grid::uniform(20);
    Rng rng(4);
    std::vector<FpcaResult> fpca(2);
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(50, 2);
    Eigen::Vector2d state = Eigen::Vector2d::Zero();
    Eigen::Matrix2d B;
    B << 0.5, 0.2, -0.3, 0.4;
    for (int t = 0; t < 50; ++t) {
        state = B * state + Eigen::Vector2d(rng.normal(), rng.normal());
        theta.row(t) = state.transpose();
    }
    for (int j = 0; j < 2; ++j) {
        fpca[static_cast<std::size_t>(j)].q = 1;
        fpca[static_cast<std::size_t>(j)].scores = theta.col(j);
        fpca[static_cast<std::size_t>(j)].eigenfunctions = Eigen::MatrixXd::Ones(20, 1);
    }
    const VfarFit fit = oracle_ls(g, fpca, SupportMatrix::Constant(2, 2, true));
    const Eigen::MatrixXd X = theta.topRows(49);
    const Eigen::MatrixXd coef = (X.transpose() * X).ldlt().solve(X.transpose() * theta.bottomRows(49));
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 2; ++k)
            EXPECT_NEAR(fit.responses[j].psi[k](0, 0), coef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)), 1e-8);
    EXPECT_FALSE(fit.rank_deficient);
}

TEST(OracleLs, BandedSupportRecoversBand) {
    SimSpec spec;
    spec.model = SimModel::block_banded;
    spec.n = 200;
    spec.p = 6;
    const auto [truth, sim] = simulate_replicate(spec, Rng(5));
    FpcaOptions fo;
    fo.q_grid = {3};
    fo.eta_grid = {0.0};
    const VfarFit fit = oracle_ls(sim.observed.grid(), panel_fpca(sim.observed, fo, Rng(6)), truth.support);
    std::size_t count = 0;
    for (const Edge& e : fit.edges) {
        EXPECT_TRUE(truth.support(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.k)));
        ++count;
    }
    EXPECT_EQ(count, static_cast<std::size_t>(truth.support.count()));
}

TEST(Methods, TruncationRules) {
    VfarOptions base;
    EXPECT_EQ(method_options(Method::ls_a, base).fpca.q_grid, base.fpca.q_grid);
    EXPECT_EQ(method_options(Method::ls_2, base).fpca.q_grid, std::vector<std::size_t>{2});
    EXPECT_EQ(method_options(Method::ls_1, base).fpca.q_grid, std::vector<std::size_t>{1});
    EXPECT_EQ(parse_method("ls_2"), Method::ls_2);
    EXPECT_THROW(parse_method("lasso"), UsageError);
}

TEST(Study, SmallStudyIsDeterministicAndSummarized) {
    StudyConfig c;
    c.models = {SimModel::block_banded};
    c.sizes = {{40, 6}};
    c.methods = {Method::ls_2, Method::ls_1};
    c.replicates = 2;
    c.options.path.length = 10;
    const auto a = run_study(c, Rng(7));
    const auto b = run_study(c, Rng(7));
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].auroc, b[i].auroc);
        EXPECT_EQ(a[i].rel_error, b[i].rel_error);
        EXPECT_TRUE(std::isnan(a[i].rel_error_oracle));
        EXPECT_EQ(a[i].rel_error, a[i].rel_error_bic);
    }
    EXPECT_EQ(table_csv(summarize(a)), table_csv(summarize(b)));
    EXPECT_EQ(roc_csv(a), roc_csv(b));
}

TEST(Tables, EmptyStandardErrorAndRoundTrip) {
    EXPECT_EQ(table_csv(summarize({})), "model,n,p,method,metric,count,mean,se\n");
    std::vector<ReplicateResult> results;
    Rng rng(8);
    std::vector<double> x;
    for (std::size_t r = 0; r < 20; ++r) {
        ReplicateResult res;
        res.n = 100;
        res.p = 40;
        res.replicate = r;
        res.auroc = rng.uniform();
        res.rel_error_oracle = std::nan("");
        x.push_back(res.auroc);
        results.push_back(res);
    }
    const auto rows = summarize(results);
    const TableRow& auroc = rows.front();
    ASSERT_EQ(auroc.metric, "auroc");
    double mean = 0.0;
    for (double v : x) mean += v / 20.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(auroc.mean, mean, 1e-15);
    EXPECT_NEAR(auroc.se, std::sqrt(ss / 19.0) / std::sqrt(20.0), 1e-15);
    EXPECT_EQ(rows.size(), 4u);  // oracle metric omitted when NaN

    const auto back = read_table_json(table_json(rows));
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].model, rows[i].model);
        EXPECT_EQ(back[i].metric, rows[i].metric);
        EXPECT_EQ(back[i].count, rows[i].count);
        EXPECT_EQ(back[i].mean, rows[i].mean);
        EXPECT_EQ(back[i].se, rows[i].se);
    }
    EXPECT_THROW(read_table_json("{"), DataError);
}

TEST(Concentration, ValidationAndSmallRun) {
    ConcentrationSpec bad;
    bad.ns = {100, 200, 400};
    EXPECT_THROW(concentration_experiment(bad, Rng(1)), UsageError);
    bad.ns = {100, 200, 400, 800};
    bad.replicates = 5;
    EXPECT_THROW(concentration_experiment(bad, Rng(1)), UsageError);

    ConcentrationSpec spec;
    spec.p = 2;
    spec.ns = {50, 100, 200, 400};
    const ConcentrationReport r = concentration_experiment(spec, Rng(9));
    ASSERT_EQ(r.median_error.size(), 4u);
    for (double e : r.median_error) EXPECT_GT(e, 0.0);
    EXPECT_LT(r.slope, 0.0);
    EXPECT_GT(r.slope_se, 0.0);
}
