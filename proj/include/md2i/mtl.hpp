#pragma once

#include <utility>
#include <vector>

#include "md2i/matrix.hpp"
#include "md2i/nn.hpp"
#include "md2i/rng.hpp"

namespace md2i {

enum class TaskKind { Classification, Regression };

struct TaskSlice {
    int offset = 0;
    int width = 0;        // max(10, d_y) for classification, 10 for single-output tasks
    int num_classes = 0;  // softmax runs over the first num_classes columns of the slice
    TaskKind kind = TaskKind::Regression;
};

/// Shared multi-task weight matrix W (d_e x m) with lasso and ridge
/// penalties. The head is linear in the encodings; a regression task reads
/// out the mean of its slice.
struct ClassifierHead {
    Matrix w;
    Matrix gw, vw;
    std::vector<TaskSlice> tasks;
    double rho0 = 1.0;
    double rho_l2 = 0.1;

    int code_width() const { return w.rows; }
    int out_width() const { return w.cols; }

    void sgd_step(const SgdConfig& cfg);
    void zero_grad();
};

/// Task spec: kind plus d_y (classes) for classification, ignored for
/// regression. Slices are laid out in order and cover [0, m).
ClassifierHead make_head(int code_width, const std::vector<std::pair<TaskKind, int>>& tasks,
                         double rho0, double rho_l2, Rng& rng);

/// Classification: n x d_y softmax probabilities. Regression: n x 1 means
/// of the slice outputs.
Matrix predict(const ClassifierHead& head, const Matrix& e, int task);

struct TaskBatch {
    int task = 0;
    const Matrix* e = nullptr;
    const Matrix* y = nullptr;  // one-hot for classification, n x 1 for regression
};

/// sum_s data_term(W^T E^s, Y^s) + rho0*||W||_1 + rho_l2*||W||_F^2.
/// Cross-entropy for classification tasks, squared error for regression.
double loss_mtl(const ClassifierHead& head, const std::vector<TaskBatch>& batches);

/// Value plus gradients; the L1 subgradient at 0 is 0.
double loss_mtl_grad(const ClassifierHead& head, const std::vector<TaskBatch>& batches,
                     Matrix* grad_w, std::vector<Matrix>* grad_e = nullptr);

}  // namespace md2i
