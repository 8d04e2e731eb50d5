#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "md2i/gradcheck.hpp"
#include "md2i/nn.hpp"
#include "test_util.hpp"

using namespace md2i;

namespace {

MlpNet identity_linear(int dim) {
    Rng rng(0);
    MlpNet net({{dim, dim, Activation::Linear}}, rng);
    for (auto& layer : net.layers()) {
        std::fill(layer.w.data.begin(), layer.w.data.end(), 0.0);
        for (int i = 0; i < dim; ++i) layer.w(i, i) = 1.0;
        std::fill(layer.b.data.begin(), layer.b.data.end(), 0.0);
    }
    return net;
}

}  // namespace

TEST_CASE("forward: identity linear layer returns its input") {
    MlpNet net = identity_linear(3);
    Matrix x = Matrix::from_rows({{0.5, -1.25, 2.0}, {3.0, 0.0, -7.5}});
    CHECK(max_abs_diff(net.forward(x), x) == 0.0);
}

TEST_CASE("forward: relu layer clamps negatives") {
    Rng rng(1);
    MlpNet net({{2, 2, Activation::ReLU}}, rng);
    std::fill(net.layers()[0].w.data.begin(), net.layers()[0].w.data.end(), 0.0);
    net.layers()[0].w(0, 0) = 1.0;
    net.layers()[0].w(1, 1) = 1.0;
    std::fill(net.layers()[0].b.data.begin(), net.layers()[0].b.data.end(), 0.0);
    Matrix out = net.forward(Matrix::from_rows({{-1.0, 2.0}}));
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 2.0);
}

TEST_CASE("forward: two-layer net matches independent hand evaluation") {
    Rng rng(7);
    MlpNet net({{2, 3, Activation::ReLU}, {3, 2, Activation::Linear}}, rng);
    Matrix x = Matrix::from_rows({{0.3, -0.8}, {1.1, 0.4}});
    const Matrix& out = net.forward(x);

    const auto& l0 = net.layers()[0];
    const auto& l1 = net.layers()[1];
    for (int i = 0; i < x.rows; ++i) {
        double hidden[3];
        for (int j = 0; j < 3; ++j) {
            double z = l0.b(0, j);
            for (int k = 0; k < 2; ++k) z += x(i, k) * l0.w(k, j);
            hidden[j] = z > 0 ? z : 0.0;
        }
        for (int j = 0; j < 2; ++j) {
            double z = l1.b(0, j);
            for (int k = 0; k < 3; ++k) z += hidden[k] * l1.w(k, j);
            CHECK(out(i, j) == doctest::Approx(z).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward: shape mismatch raises") {
    MlpNet net = identity_linear(3);
    CHECK_THROWS_AS(net.forward(Matrix(1, 4)), std::invalid_argument);
}

TEST_CASE("backward: zero output grad leaves zero buffers") {
    Rng rng(3);
    MlpNet net({{3, 4, Activation::Sigmoid}, {4, 2, Activation::Linear}}, rng);
    net.forward(testutil::random_matrix(rng, 5, 3));
    net.backward(Matrix(5, 2));
    for (double g : net.grads_flat()) CHECK(g == 0.0);
}

TEST_CASE("backward: called before forward raises") {
    Rng rng(3);
    MlpNet net({{2, 2, Activation::Linear}}, rng);
    CHECK_THROWS_AS(net.backward(Matrix(1, 2)), std::logic_error);
}

TEST_CASE("backward: single linear layer squared loss matches 2(Wx-y)x^T") {
    Rng rng(11);
    MlpNet net({{3, 2, Activation::Linear}}, rng);
    std::fill(net.layers()[0].b.data.begin(), net.layers()[0].b.data.end(), 0.0);
    Matrix x = Matrix::from_rows({{0.4, -0.9, 1.3}});
    Matrix y = Matrix::from_rows({{0.2, -0.5}});
    const Matrix& out = net.forward(x);
    Matrix diff(1, 2);
    for (int j = 0; j < 2; ++j) diff(0, j) = 2.0 * (out(0, j) - y(0, j));
    net.backward(diff);
    const auto& layer = net.layers()[0];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(layer.gw(i, j) == doctest::Approx(diff(0, j) * x(0, i)).epsilon(1e-12));
}

TEST_CASE("sgd_step: zero gradients leave parameters unchanged") {
    Rng rng(5);
    MlpNet net({{3, 3, Activation::ReLU}}, rng);
    auto before = net.params_flat();
    net.sgd_step({0.1, 0.0, 32});
    CHECK(net.params_flat() == before);
}

TEST_CASE("sgd_step: no momentum update is theta -= lr*g") {
    Rng rng(5);
    MlpNet net({{2, 2, Activation::Linear}}, rng);
    auto before = net.params_flat();
    for (auto& layer : net.layers()) {
        std::fill(layer.gw.data.begin(), layer.gw.data.end(), 0.25);
        std::fill(layer.gb.data.begin(), layer.gb.data.end(), 0.25);
    }
    net.sgd_step({0.1, 0.0, 32});
    auto after = net.params_flat();
    for (size_t k = 0; k < before.size(); ++k)
        CHECK(after[k] == doctest::Approx(before[k] - 0.1 * 0.25).epsilon(1e-12));
    for (double g : net.grads_flat()) CHECK(g == 0.0);
}

TEST_CASE("sgd_step: second momentum step applies lr*1.9g on constant gradient") {
    Rng rng(5);
    MlpNet net({{2, 2, Activation::Linear}}, rng);
    const double g = 0.5, lr = 0.1;
    auto set_grads = [&]() {
        for (auto& layer : net.layers()) {
            std::fill(layer.gw.data.begin(), layer.gw.data.end(), g);
            std::fill(layer.gb.data.begin(), layer.gb.data.end(), g);
        }
    };
    auto p0 = net.params_flat();
    set_grads();
    net.sgd_step({lr, 0.9, 32});
    auto p1 = net.params_flat();
    set_grads();
    net.sgd_step({lr, 0.9, 32});
    auto p2 = net.params_flat();
    for (size_t k = 0; k < p0.size(); ++k) {
        CHECK(p0[k] - p1[k] == doctest::Approx(lr * g).epsilon(1e-12));
        CHECK(p1[k] - p2[k] == doctest::Approx(lr * 1.9 * g).epsilon(1e-12));
    }
}

TEST_CASE("grad_check: linear net with squared loss") {
    Rng rng(21);
    MlpNet net({{4, 3, Activation::Linear}}, rng);
    Matrix x = testutil::random_matrix(rng, 3, 4, -1.0, 1.0);
    Matrix target = testutil::random_matrix(rng, 3, 3, -1.0, 1.0);
    auto loss = [&](const Matrix& out, Matrix* grad) { return squared_error(out, target, grad); };
    auto result = grad_check_net(net, loss, x);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("grad_check: relu net away from kinks") {
    Rng rng(22);
    MlpNet net({{3, 5, Activation::ReLU}, {5, 2, Activation::Linear}}, rng);
    Matrix x = testutil::random_matrix(rng, 4, 3, 0.2, 1.0);
    Matrix target = testutil::random_matrix(rng, 4, 2, -1.0, 1.0);
    auto loss = [&](const Matrix& out, Matrix* grad) { return squared_error(out, target, grad); };
    auto result = grad_check_net(net, loss, x);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("grad_check: sigmoid net with cross-entropy style loss") {
    Rng rng(23);
    MlpNet net({{3, 4, Activation::ReLU}, {4, 3, Activation::Sigmoid}}, rng);
    Matrix x = testutil::random_matrix(rng, 5, 3, 0.1, 0.9);
    Matrix target = testutil::random_matrix(rng, 5, 3, 0.1, 0.9);
    auto loss = [&](const Matrix& out, Matrix* grad) {
        double l = 0.0;
        if (grad) *grad = Matrix(out.rows, out.cols);
        for (size_t k = 0; k < out.data.size(); ++k) {
            l -= target.data[k] * safe_log(out.data[k]);
            if (grad) grad->data[k] = -target.data[k] / out.data[k];
        }
        return l;
    };
    auto result = grad_check_net(net, loss, x);
    CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("grad_check: constant loss yields zero gradients") {
    Rng rng(24);
    MlpNet net({{2, 2, Activation::ReLU}}, rng);
    Matrix x = testutil::random_matrix(rng, 2, 2);
    auto loss = [&](const Matrix&, Matrix* grad) {
        if (grad) *grad = Matrix(2, 2);
        return 1.0;
    };
    auto result = grad_check_net(net, loss, x);
    CHECK(result.max_rel_err == 0.0);
}

TEST_CASE("determinism: same seed gives bit-identical nets and trajectories") {
    auto run = []() {
        Rng rng(99);
        MlpNet net({{3, 4, Activation::ReLU}, {4, 2, Activation::Sigmoid}}, rng);
        Matrix x = testutil::random_matrix(rng, 6, 3);
        Matrix target = testutil::random_matrix(rng, 6, 2);
        for (int step = 0; step < 20; ++step) {
            Matrix grad;
            squared_error(net.forward(x), target, &grad);
            net.backward(grad);
            net.sgd_step({0.05, 0.9, 32});
        }
        return net.params_flat();
    };
    CHECK(run() == run());
}

TEST_CASE("softmax rows sum to one and uniform cross-entropy is n log k") {
    Rng rng(31);
    Matrix logits = testutil::random_matrix(rng, 5, 4, -3.0, 3.0);
    Matrix p = softmax_rows(logits);
    for (int i = 0; i < p.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < p.cols; ++j) sum += p(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    Matrix zeros(6, 4);
    Matrix onehot(6, 4);
    for (int i = 0; i < 6; ++i) onehot(i, i % 4) = 1.0;
    CHECK(softmax_ce(zeros, onehot) == doctest::Approx(6.0 * std::log(4.0)).epsilon(1e-12));
}
