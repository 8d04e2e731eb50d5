#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "md2i/eval.hpp"
#include "md2i/synth.hpp"
#include "md2i/trainer.hpp"
#include "test_util.hpp"

using namespace md2i;

namespace {

DomainDataset corrupted_linear(int n, int d, double rate, uint64_t seed) {
    DomainDataset ds = make_linear_tabular(n, d, seed);
    MissingSpec spec;
    spec.mechanism = MissingSpec::Mechanism::McarUniform;
    spec.rate = rate;
    spec.seed = mix_seed(seed, 1);
    return inject_mcar_uniform(ds, spec);
}

}  // namespace

TEST_CASE("aae_forward: fully observed input passes through the composition") {
    Rng rng(1);
    GeneratorNet g = make_generator(6, rng);
    Matrix x = testutil::random_matrix(rng, 5, 6);
    Matrix m(5, 6, 1.0);
    Rng step_rng(2);
    AaeOutputs out = aae_forward(g, x, m, step_rng);
    CHECK(max_abs_diff(out.xhat, x) == 0.0);
    CHECK(out.xbar.rows == 5);
    CHECK(out.xbar.cols == 6);
    CHECK(out.h.rows == 5);
    CHECK(out.e.cols == g.code);

    Rng r1(3), r2(3);
    AaeOutputs a = aae_forward(g, x, m, r1);
    AaeOutputs b = aae_forward(g, x, m, r2);
    CHECK(max_abs_diff(a.xtilde, b.xtilde) == 0.0);
    CHECK(max_abs_diff(a.h, b.h) == 0.0);
    CHECK(max_abs_diff(a.e, b.e) == 0.0);
}

TEST_CASE("total_loss: weighted sum with the default lambdas") {
    HyperParams hp;  // lambdas (1, 0.1, 0.1, 2)
    LossComponents c;
    c.domains.push_back({2.0, 3.0, 5.0, 7.0});
    c.l_mmd = 11.0;
    CHECK(total_loss(c, hp) == doctest::Approx(28.2).epsilon(1e-12));

    LossComponents zero;
    zero.domains.push_back({0, 0, 0, 0});
    zero.l_mmd = 0;
    CHECK(total_loss(zero, hp) == 0.0);

    HyperParams unsup = hp;
    unsup.mode = TrainMode::Unsupervised;
    LossComponents c2 = c;
    c2.domains[0].l_c = 1234.5;
    CHECK(total_loss(c2, unsup) == total_loss(c, unsup));
}

TEST_CASE("adversarial separation: phases leave the other side bit-identical") {
    Rng rng(4);
    const int d = 6;
    GeneratorNet g = make_generator(d, rng);
    DiscriminatorNet disc = make_discriminator(d, rng);
    DomainDataset ds = corrupted_linear(40, d, 0.3, 5);
    HyperParams hp;
    Rng step_rng(6);

    auto g_params = [&]() {
        auto p = g.encoder.params_flat();
        auto q = g.decoder.params_flat();
        p.insert(p.end(), q.begin(), q.end());
        return p;
    };
    auto before_g = g_params();
    train_step_disc(g, disc, ds.x, ds.m, hp, step_rng);
    CHECK(g_params() == before_g);

    auto before_d = disc.net.params_flat();
    train_step_gen(g, disc, ds.x, ds.m, ds.col_types, hp, step_rng);
    CHECK(disc.net.params_flat() == before_d);
    CHECK(g_params() != before_g);
}

TEST_CASE("train_md2i: single domain reports zero alignment loss") {
    DomainDataset ds = corrupted_linear(60, 6, 0.3, 7);
    HyperParams hp;
    hp.mode = TrainMode::Unsupervised;
    hp.max_epochs = 3;
    hp.seed = 11;
    TrainedModel model = train_md2i({ds}, hp);
    CHECK_FALSE(model.head.has_value());
    for (const auto& rec : model.report.records) CHECK(rec.l_mmd == 0.0);
    CHECK(model.report.epochs_run == 3);
}

TEST_CASE("train_md2i: supervised mode without labels raises") {
    DomainDataset ds = corrupted_linear(30, 6, 0.3, 8);
    HyperParams hp;
    hp.mode = TrainMode::Supervised;
    hp.max_epochs = 1;
    CHECK_THROWS_AS(train_md2i({ds}, hp), std::invalid_argument);
}

TEST_CASE("train_md2i: generator loss improves on the synthetic dataset") {
    DomainDataset ds = corrupted_linear(500, 8, 0.3, 9);
    HyperParams hp;
    hp.mode = TrainMode::Unsupervised;
    hp.max_epochs = 50;
    hp.patience = 1000;  // no early stop, full 50 epochs
    hp.seed = 13;
    TrainedModel model = train_md2i({ds}, hp);
    REQUIRE(model.report.epoch_totals.size() == 50);
    CHECK(model.report.epoch_totals[49] < model.report.epoch_totals[0]);

    // Smoothed comparison: final 10-epoch window under the first one.
    auto window = [&](int lo) {
        double sum = 0.0;
        for (int i = lo; i < lo + 10; ++i) sum += model.report.epoch_totals[i];
        return sum / 10.0;
    };
    CHECK(window(40) < window(0));
}

TEST_CASE("train_md2i: determinism of the full report") {
    DomainDataset ds = corrupted_linear(80, 6, 0.3, 10);
    HyperParams hp;
    hp.mode = TrainMode::Unsupervised;
    hp.max_epochs = 5;
    hp.seed = 17;
    TrainedModel a = train_md2i({ds}, hp);
    TrainedModel b = train_md2i({ds}, hp);
    REQUIRE(a.report.records.size() == b.report.records.size());
    for (size_t i = 0; i < a.report.records.size(); ++i) {
        CHECK(a.report.records[i].l_rec == b.report.records[i].l_rec);
        CHECK(a.report.records[i].l_m == b.report.records[i].l_m);
        CHECK(a.report.records[i].l_d == b.report.records[i].l_d);
        CHECK(a.report.records[i].total == b.report.records[i].total);
    }
    CHECK(a.gen.encoder.params_flat() == b.gen.encoder.params_flat());
}

TEST_CASE("train_md2i: alignment weight shrinks the encoding discrepancy") {
    auto blobs = make_shifted_blobs(60, 6, 0.3, 21);
    auto final_mmd2 = [&](double lambda3) {
        HyperParams hp;
        hp.mode = TrainMode::Unsupervised;
        hp.lambda3 = lambda3;
        hp.max_epochs = 40;
        hp.patience = 1000;
        hp.seed = 23;
        TrainedModel model = train_md2i(blobs, hp);
        Matrix e0 = encode_dataset(model.gen, blobs[0], 404);
        Matrix e1 = encode_dataset(model.gen, blobs[1], 505);
        return mmd2(e0, e1, KernelConfig{10.0});
    };
    CHECK(final_mmd2(2.0) < final_mmd2(0.0));
}

TEST_CASE("impute_dataset: contract on masks and observed values") {
    Rng rng(30);
    DomainDataset ds = corrupted_linear(50, 6, 0.3, 31);
    GeneratorNet g = make_generator(6, rng);
    DomainDataset out = impute_dataset(g, ds, 99);
    for (double v : out.m.data) CHECK(v == 1.0);
    for (int i = 0; i < ds.n(); ++i)
        for (int j = 0; j < ds.d(); ++j)
            if (ds.m(i, j) == 1.0) CHECK(out.x(i, j) == ds.x(i, j));

    DomainDataset observed = make_linear_tabular(20, 6, 32);
    DomainDataset same = impute_dataset(g, observed, 100);
    CHECK(max_abs_diff(same.x, observed.x) == 0.0);
}

TEST_CASE("encode_dataset: deterministic with the expected width") {
    Rng rng(33);
    DomainDataset ds = corrupted_linear(30, 8, 0.3, 34);
    GeneratorNet g = make_generator(8, rng);
    Matrix e1 = encode_dataset(g, ds, 7);
    Matrix e2 = encode_dataset(g, ds, 7);
    CHECK(e1.cols == latent_width(8));
    CHECK(max_abs_diff(e1, e2) == 0.0);
}

TEST_CASE("train_md2i: unsupervised imputation beats column means on linear data") {
    DomainDataset truth = make_linear_tabular(500, 8, 40);
    MissingSpec spec;
    spec.mechanism = MissingSpec::Mechanism::McarUniform;
    spec.rate = 0.3;
    spec.seed = 41;
    DomainDataset corrupted = inject_mcar_uniform(truth, spec);

    HyperParams hp;
    hp.mode = TrainMode::Unsupervised;
    hp.max_epochs = 80;
    hp.patience = 1000;
    hp.seed = 42;
    TrainedModel model = train_md2i({corrupted}, hp);
    DomainDataset imputed = impute_dataset(model.gen, corrupted, 43);

    auto fill = fit_column_fill({&corrupted});
    DomainDataset mean_filled = apply_column_fill(corrupted, fill);

    std::vector<double> model_pred, mean_pred, target;
    for (int i = 0; i < truth.n(); ++i)
        for (int j = 0; j < truth.d(); ++j)
            if (corrupted.m(i, j) == 0.0) {
                model_pred.push_back(imputed.x(i, j));
                mean_pred.push_back(mean_filled.x(i, j));
                target.push_back(truth.x(i, j));
            }
    REQUIRE(target.size() > 100);
    double model_rmse = rmse(model_pred, target);
    double mean_rmse = rmse(mean_pred, target);
    CHECK(model_rmse < mean_rmse);
}

TEST_CASE("train_md2i: supervised run on regression tasks trains the head") {
    auto tasks = make_task_regression(3, 40, 10, 50);
    HyperParams hp;
    hp.mode = TrainMode::Supervised;
    hp.max_epochs = 5;
    hp.seed = 51;
    TrainedModel model = train_md2i(tasks, hp);
    REQUIRE(model.head.has_value());
    CHECK(model.head->tasks.size() == 3);
    for (const auto& slice : model.head->tasks) CHECK(slice.kind == TaskKind::Regression);
    // classification domains share one task
    auto blobs = make_shifted_blobs(40, 6, 0.3, 52);
    hp.max_epochs = 2;
    TrainedModel cls = train_md2i(blobs, hp);
    REQUIRE(cls.head.has_value());
    CHECK(cls.head->tasks.size() == 1);
    CHECK(cls.head->tasks[0].num_classes == 2);
}
