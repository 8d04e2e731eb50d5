#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "md2i/eval.hpp"
#include "md2i/synth.hpp"
#include "test_util.hpp"

using namespace md2i;

TEST_CASE("accuracy: trivial and counted cases") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(accuracy({1, 2, 3}, {0, 0, 0}) == 0.0);
    CHECK(accuracy({1, 2, 3, 4}, {1, 2, 3, 0}) == 0.75);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);

    // accuracy + error rate = 1
    std::vector<int> pred{0, 1, 1, 0, 2}, truth{0, 1, 0, 0, 1};
    double err = 0;
    for (size_t i = 0; i < pred.size(); ++i) err += pred[i] != truth[i];
    CHECK(accuracy(pred, truth) + err / pred.size() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rmse: hand value and scale homogeneity") {
    std::vector<double> same{1.0, 2.0};
    CHECK(rmse(same, same) == 0.0);
    std::vector<double> p{0.0, 0.0}, t{3.0, 4.0};
    CHECK(rmse(p, t) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));

    Rng rng(1);
    std::vector<double> a(10), b(10), a3(10), b3(10);
    for (int i = 0; i < 10; ++i) {
        a[i] = rng.uniform(-2, 2);
        b[i] = rng.uniform(-2, 2);
        a3[i] = -3.0 * a[i];
        b3[i] = -3.0 * b[i];
    }
    CHECK(rmse(a3, b3) == doctest::Approx(3.0 * rmse(a, b)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("f1_positive: trivial and counted cases") {
    CHECK(f1_positive({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(f1_positive({0, 0, 0}, {1, 0, 1}) == 0.0);
    // TP=2, FP=1, FN=1 -> P=R=2/3 -> F1=2/3
    CHECK(f1_positive({1, 1, 1, 0, 0}, {1, 1, 0, 1, 0}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("metrics: invariant to simultaneous permutation") {
    std::vector<int> pred{1, 0, 1, 1, 0}, truth{1, 1, 0, 1, 0};
    std::vector<int> order{3, 0, 4, 1, 2};
    std::vector<int> pred_p, truth_p;
    for (int i : order) {
        pred_p.push_back(pred[i]);
        truth_p.push_back(truth[i]);
    }
    CHECK(accuracy(pred, truth) == accuracy(pred_p, truth_p));
    CHECK(f1_positive(pred, truth) == f1_positive(pred_p, truth_p));
}

TEST_CASE("experiment result: mean and std recomputable from stored runs") {
    ExperimentResult result;
    result.protocol = "dg";
    Rng rng(2);
    for (int i = 0; i < 20; ++i) result.runs.push_back({i, 0, 0, "accuracy", rng.uniform()});
    result.finalize();
    double mean = 0;
    for (const auto& r : result.runs) mean += r.value;
    mean /= result.runs.size();
    double var = 0;
    for (const auto& r : result.runs) var += (r.value - mean) * (r.value - mean);
    double sd = std::sqrt(var / (result.runs.size() - 1));
    CHECK(std::fabs(result.mean - mean) < 1e-12);
    CHECK(std::fabs(result.stddev - sd) < 1e-12);
    CHECK(result.stddev >= 0.0);
}

TEST_CASE("column fill: mean for continuous, mode for binary with ties to zero") {
    DomainDataset ds;
    ds.x = Matrix::from_rows({{1.0, 0.0}, {3.0, 0.0}, {2.0, 1.0}});
    ds.m = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}, {0.0, 1.0}});
    ds.col_types = {ColType::Continuous, ColType::Binary};
    // Only rows 0,1 observed in column 0: mean of {1,3} = 2.
    auto fill = fit_column_fill({&ds});
    CHECK(fill[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(fill[1] == 0.0);  // observed {0,0,1}: mode 0

    DomainDataset filled = apply_column_fill(ds, fill);
    CHECK(filled.x(2, 0) == 2.0);
    CHECK(filled.x(0, 0) == 1.0);
    for (double v : filled.m.data) CHECK(v == 1.0);

    // Tie case: observed {0,1} breaks toward 0.
    DomainDataset tie;
    tie.x = Matrix::from_rows({{0.0}, {1.0}});
    tie.m = Matrix(2, 1, 1.0);
    tie.col_types = {ColType::Binary};
    CHECK(fit_column_fill({&tie})[0] == 0.0);
}

TEST_CASE("dg protocol: bookkeeping, determinism and sane accuracy on easy domains") {
    auto blobs = make_shifted_blobs(200, 24, 0.0, 3);  // identical distributions
    HyperParams hp;
    hp.max_epochs = 500;
    hp.patience = 1 << 30;
    DgOptions opts;
    opts.repeats = 3;
    opts.base_seed = 5;
    opts.downstream_epochs = 60;
    ExperimentResult result = run_dg_protocol(blobs, hp, opts, Method::Md2iS);
    CHECK(result.runs.size() == 3u * blobs.size());
    double mean = 0;
    for (const auto& r : result.runs) mean += r.value;
    mean /= result.runs.size();
    CHECK(std::fabs(result.mean - mean) < 1e-12);
    CHECK(result.mean > 0.9);

    ExperimentResult again = run_dg_protocol(blobs, hp, opts, Method::Md2iS);
    for (size_t i = 0; i < result.runs.size(); ++i)
        CHECK(result.runs[i].value == again.runs[i].value);

    CHECK_THROWS_AS(run_dg_protocol({blobs[0]}, hp, opts, Method::B2), std::invalid_argument);
}

TEST_CASE("dg protocol: b1 equals b2 when there is a single source domain") {
    auto blobs = make_shifted_blobs(50, 6, 0.2, 7);
    MissingSpec spec;
    spec.mechanism = MissingSpec::Mechanism::McarUniform;
    spec.rate = 0.3;
    spec.seed = 8;
    for (auto& b : blobs) b = inject_mcar_uniform(b, spec);
    HyperParams hp;
    DgOptions opts;
    opts.repeats = 2;
    opts.base_seed = 9;
    opts.held_out = {1};  // domain 0 is the only source
    opts.downstream_epochs = 30;
    ExperimentResult b1 = run_baseline(Method::B1, "dg", blobs, hp, opts, {});
    ExperimentResult b2 = run_baseline(Method::B2, "dg", blobs, hp, opts, {});
    REQUIRE(b1.runs.size() == b2.runs.size());
    for (size_t i = 0; i < b1.runs.size(); ++i) CHECK(b1.runs[i].value == b2.runs[i].value);
    CHECK_THROWS_AS(run_baseline(Method::Md2iS, "dg", blobs, hp, opts, {}),
                    std::invalid_argument);
}

TEST_CASE("mtl protocol: pooled rmse equals rmse over concatenated residuals") {
    std::vector<double> p1{1.0, 2.0}, t1{1.5, 2.0};
    std::vector<double> p2{0.0, 1.0, 3.0}, t2{0.5, 0.5, 3.5};
    std::vector<double> pall, tall;
    pall.insert(pall.end(), p1.begin(), p1.end());
    pall.insert(pall.end(), p2.begin(), p2.end());
    tall.insert(tall.end(), t1.begin(), t1.end());
    tall.insert(tall.end(), t2.begin(), t2.end());
    double hand = std::sqrt((0.25 + 0.0 + 0.25 + 0.25 + 0.25) / 5.0);
    CHECK(rmse(pall, tall) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("mtl protocol: split determinism and baseline sanity") {
    auto tasks = make_task_regression(4, 30, 8, 11);
    HyperParams hp;
    hp.max_epochs = 10;
    MtlOptions opts;
    opts.repeats = 2;
    opts.base_seed = 12;
    opts.mar_t = 0.3;
    opts.downstream_epochs = 40;
    ExperimentResult a = run_mtl_protocol(tasks, hp, opts, Method::B1);
    ExperimentResult b = run_mtl_protocol(tasks, hp, opts, Method::B1);
    REQUIRE(a.runs.size() == 2);
    for (size_t i = 0; i < a.runs.size(); ++i) CHECK(a.runs[i].value == b.runs[i].value);
    for (const auto& r : a.runs) {
        CHECK(std::isfinite(r.value));
        CHECK(r.value >= 0.0);
        CHECK(r.value < 1.0);  // targets live in roughly [0,1]
    }
    CHECK_THROWS_AS(run_mtl_protocol({}, hp, opts, Method::B1), std::invalid_argument);
}

TEST_CASE("eval nets: trained regressor beats an untrained one") {
    auto tasks = make_task_regression(1, 80, 8, 13);
    const DomainDataset& ds = tasks[0];
    SgdConfig sgd{0.01, 0.9, 32};
    MlpNet trained = train_regressor_net(ds.x, ds.y, 2, 4, sgd, 80, 14);
    MlpNet untrained = train_regressor_net(ds.x, ds.y, 2, 4, sgd, 0, 14);
    auto run_rmse = [&](MlpNet& net) {
        const Matrix& out = net.forward(ds.x);
        std::vector<double> p(out.data.begin(), out.data.end());
        std::vector<double> t(ds.y.data.begin(), ds.y.data.end());
        return rmse(p, t);
    };
    CHECK(run_rmse(trained) < run_rmse(untrained));
}
