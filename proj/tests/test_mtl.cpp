#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "md2i/dataset.hpp"
#include "md2i/gradcheck.hpp"
#include "md2i/mtl.hpp"
#include "test_util.hpp"

using namespace md2i;

TEST_CASE("make_head: slice layout follows the width rules") {
    Rng rng(1);
    ClassifierHead head =
        make_head(5, {{TaskKind::Classification, 4}, {TaskKind::Regression, 1},
                      {TaskKind::Classification, 12}},
                  1.0, 0.1, rng);
    REQUIRE(head.tasks.size() == 3);
    CHECK(head.tasks[0].width == 10);  // max(10, 4)
    CHECK(head.tasks[0].num_classes == 4);
    CHECK(head.tasks[1].width == 10);
    CHECK(head.tasks[2].width == 12);  // max(10, 12)
    CHECK(head.tasks[0].offset == 0);
    CHECK(head.tasks[1].offset == 10);
    CHECK(head.tasks[2].offset == 20);
    CHECK(head.out_width() == 32);
    CHECK(head.w.rows == 5);
}

TEST_CASE("predict: zero weights give uniform class probabilities") {
    Rng rng(2);
    ClassifierHead head = make_head(4, {{TaskKind::Classification, 4}}, 1.0, 0.1, rng);
    std::fill(head.w.data.begin(), head.w.data.end(), 0.0);
    Matrix e = testutil::random_matrix(rng, 3, 4);
    Matrix p = predict(head, e, 0);
    CHECK(p.cols == 4);
    for (double v : p.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(predict(head, e, 1), std::invalid_argument);
}

TEST_CASE("predict: softmax rows sum to one") {
    Rng rng(3);
    ClassifierHead head = make_head(6, {{TaskKind::Classification, 10}}, 1.0, 0.1, rng);
    Matrix e = testutil::random_matrix(rng, 7, 6, -1.0, 1.0);
    Matrix p = predict(head, e, 0);
    for (int i = 0; i < p.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < p.cols; ++j) sum += p(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("predict: hand-set 2x3 weights on a 1x2 encoding match the hand product") {
    ClassifierHead head;
    head.w = Matrix::from_rows({{0.5, -1.0, 2.0}, {1.5, 0.25, -0.75}});
    head.gw = Matrix(2, 3);
    head.vw = Matrix(2, 3);
    head.tasks = {{0, 3, 3, TaskKind::Classification}};
    Matrix e = Matrix::from_rows({{0.4, -0.6}});
    // Hand product: logits = [0.4*0.5 - 0.6*1.5, ...] = [-0.7, -0.55, 1.25]
    double l0 = 0.4 * 0.5 + (-0.6) * 1.5;
    double l1 = 0.4 * (-1.0) + (-0.6) * 0.25;
    double l2 = 0.4 * 2.0 + (-0.6) * (-0.75);
    Matrix p = predict(head, e, 0);
    double z = std::exp(l0) + std::exp(l1) + std::exp(l2);
    CHECK(p(0, 0) == doctest::Approx(std::exp(l0) / z).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(std::exp(l1) / z).epsilon(1e-12));
    CHECK(p(0, 2) == doctest::Approx(std::exp(l2) / z).epsilon(1e-12));
}

TEST_CASE("predict: regression reads out the slice mean") {
    ClassifierHead head;
    head.w = Matrix(3, 10);
    for (int j = 0; j < 10; ++j) head.w(0, j) = 1.0;  // only first code dim contributes
    head.gw = Matrix(3, 10);
    head.vw = Matrix(3, 10);
    head.tasks = {{0, 10, 0, TaskKind::Regression}};
    Matrix e = Matrix::from_rows({{0.7, 0.1, -0.3}});
    Matrix y = predict(head, e, 0);
    CHECK(y.cols == 1);
    CHECK(y(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("loss_mtl: penalty 3.5 for W = [1,-2] with rho0=1, rho_l2=0.1") {
    ClassifierHead head;
    head.w = Matrix::from_rows({{1.0, -2.0}});
    head.gw = Matrix(1, 2);
    head.vw = Matrix(1, 2);
    head.tasks = {{0, 2, 0, TaskKind::Regression}};
    head.rho0 = 1.0;
    head.rho_l2 = 0.1;
    CHECK(loss_mtl(head, {}) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("loss_mtl: zero W contributes nothing through the regularizers") {
    Rng rng(4);
    ClassifierHead head = make_head(3, {{TaskKind::Classification, 4}}, 1.0, 1.0, rng);
    std::fill(head.w.data.begin(), head.w.data.end(), 0.0);
    Matrix e = testutil::random_matrix(rng, 6, 3);
    Matrix y = one_hot({0, 1, 2, 3, 0, 1}, 4);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    // Uniform predictions: the data term is n log d_y and the penalty is 0.
    CHECK(loss_mtl(head, batches) == doctest::Approx(6.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("loss_mtl: single task with no penalties reduces to plain cross-entropy") {
    Rng rng(5);
    ClassifierHead head = make_head(4, {{TaskKind::Classification, 3}}, 0.0, 0.0, rng);
    Matrix e = testutil::random_matrix(rng, 5, 4);
    Matrix y = one_hot({0, 2, 1, 0, 2}, 3);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    Matrix w_cls(4, 3);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) w_cls(r, c) = head.w(r, c);
    CHECK(loss_mtl(head, batches) ==
          doctest::Approx(softmax_ce(matmul(e, w_cls), y)).epsilon(1e-12));
}

TEST_CASE("loss_mtl_grad: matches finite differences at a W without zeros") {
    Rng rng(6);
    ClassifierHead head =
        make_head(4, {{TaskKind::Classification, 3}, {TaskKind::Regression, 1}}, 0.7, 0.2, rng);
    for (double& v : head.w.data)
        if (std::fabs(v) < 1e-3) v = 0.1;  // keep the L1 term differentiable
    Matrix e1 = testutil::random_matrix(rng, 5, 4);
    Matrix y1 = one_hot({0, 1, 2, 1, 0}, 3);
    Matrix e2 = testutil::random_matrix(rng, 6, 4);
    Matrix y2 = testutil::random_matrix(rng, 6, 1);
    std::vector<TaskBatch> batches{{0, &e1, &y1}, {1, &e2, &y2}};

    Matrix grad_w;
    GradCheckProblem problem;
    problem.loss = [&]() { return loss_mtl(head, batches); };
    problem.compute_grads = [&]() { loss_mtl_grad(head, batches, &grad_w); };
    problem.compute_grads();
    problem.blocks.push_back({"w", &head.w, &grad_w});
    auto result = grad_check(problem);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("loss_mtl_grad: encoding gradients match finite differences") {
    Rng rng(7);
    ClassifierHead head = make_head(3, {{TaskKind::Classification, 3}}, 1.0, 0.1, rng);
    Matrix e = testutil::random_matrix(rng, 4, 3);
    Matrix y = one_hot({0, 1, 2, 0}, 3);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    Matrix grad_w;
    std::vector<Matrix> grad_e;
    GradCheckProblem problem;
    problem.loss = [&]() { return loss_mtl(head, batches); };
    problem.compute_grads = [&]() { loss_mtl_grad(head, batches, &grad_w, &grad_e); };
    problem.compute_grads();
    problem.blocks.push_back({"e", &e, &grad_e[0]});
    auto result = grad_check(problem);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("loss_mtl_grad: penalty gradient is rho0*sign(W) + 2*rho_l2*W") {
    ClassifierHead head;
    head.w = Matrix::from_rows({{0.5, -1.5, 2.0}});
    head.gw = Matrix(1, 3);
    head.vw = Matrix(1, 3);
    head.tasks = {{0, 3, 0, TaskKind::Regression}};
    head.rho0 = 0.7;
    head.rho_l2 = 0.2;
    Matrix grad_w;
    loss_mtl_grad(head, {}, &grad_w);
    CHECK(grad_w(0, 0) == doctest::Approx(0.7 + 0.4 * 0.5).epsilon(1e-12));
    CHECK(grad_w(0, 1) == doctest::Approx(-0.7 + 0.4 * -1.5).epsilon(1e-12));
    CHECK(grad_w(0, 2) == doctest::Approx(0.7 + 0.4 * 2.0).epsilon(1e-12));
}

TEST_CASE("loss_mtl_grad: encoding gradients ignore the regularizers") {
    Rng rng(8);
    ClassifierHead head = make_head(3, {{TaskKind::Classification, 3}}, 0.0, 0.0, rng);
    Matrix e = testutil::random_matrix(rng, 4, 3);
    Matrix y = one_hot({0, 1, 2, 0}, 3);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    Matrix grad_w;
    std::vector<Matrix> ge_small, ge_large;
    loss_mtl_grad(head, batches, &grad_w, &ge_small);
    head.rho0 = 100.0;
    head.rho_l2 = 50.0;
    loss_mtl_grad(head, batches, &grad_w, &ge_large);
    CHECK(max_abs_diff(ge_small[0], ge_large[0]) == 0.0);
}

TEST_CASE("loss_mtl_grad: a task only touches its own slice columns") {
    Rng rng(9);
    ClassifierHead head =
        make_head(4, {{TaskKind::Regression, 1}, {TaskKind::Regression, 1}}, 0.0, 0.0, rng);
    Matrix e = testutil::random_matrix(rng, 5, 4);
    Matrix y = testutil::random_matrix(rng, 5, 1);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    Matrix grad_w;
    loss_mtl_grad(head, batches, &grad_w);
    const TaskSlice& other = head.tasks[1];
    for (int r = 0; r < grad_w.rows; ++r)
        for (int c = other.offset; c < other.offset + other.width; ++c)
            CHECK(grad_w(r, c) == 0.0);
}

TEST_CASE("training with a larger rho0 yields a smaller trained L1 norm") {
    auto train_l1 = [](double rho0) {
        Rng rng(10);
        ClassifierHead head = make_head(4, {{TaskKind::Classification, 3}}, rho0, 0.0, rng);
        Matrix e = testutil::random_matrix(rng, 30, 4);
        std::vector<int> labels(30);
        for (int i = 0; i < 30; ++i) labels[i] = i % 3;
        Matrix y = one_hot(labels, 3);
        std::vector<TaskBatch> batches{{0, &e, &y}};
        SgdConfig sgd{0.01, 0.9, 32};
        for (int step = 0; step < 200; ++step) {
            Matrix grad_w;
            loss_mtl_grad(head, batches, &grad_w);
            add_scaled(head.gw, grad_w, 1.0 / 30.0);
            head.sgd_step(sgd);
        }
        double l1 = 0.0;
        for (double v : head.w.data) l1 += std::fabs(v);
        return l1;
    };
    CHECK(train_l1(3.0) <= train_l1(0.1));
}

TEST_CASE("loss_mtl: row count mismatch raises") {
    Rng rng(11);
    ClassifierHead head = make_head(3, {{TaskKind::Classification, 3}}, 1.0, 0.1, rng);
    Matrix e = testutil::random_matrix(rng, 4, 3);
    Matrix y = one_hot({0, 1, 2}, 3);
    std::vector<TaskBatch> batches{{0, &e, &y}};
    CHECK_THROWS_AS(loss_mtl(head, batches), std::invalid_argument);
}
