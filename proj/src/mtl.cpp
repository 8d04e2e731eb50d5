#include "md2i/mtl.hpp"

#include <cmath>
#include <stdexcept>

namespace md2i {

namespace {

constexpr int kMinSliceWidth = 10;

Matrix slice_cols(const Matrix& a, int offset, int width) {
    Matrix out(a.rows, width);
    for (int i = 0; i < a.rows; ++i)
        std::copy(a.row_ptr(i) + offset, a.row_ptr(i) + offset + width, out.row_ptr(i));
    return out;
}

}  // namespace

void ClassifierHead::sgd_step(const SgdConfig& cfg) {
    for (size_t k = 0; k < w.data.size(); ++k) {
        vw.data[k] = cfg.momentum * vw.data[k] + gw.data[k];
        w.data[k] -= cfg.learning_rate * vw.data[k];
        gw.data[k] = 0.0;
    }
}

void ClassifierHead::zero_grad() { std::fill(gw.data.begin(), gw.data.end(), 0.0); }

ClassifierHead make_head(int code_width, const std::vector<std::pair<TaskKind, int>>& tasks,
                         double rho0, double rho_l2, Rng& rng) {
    if (tasks.empty()) throw std::invalid_argument("make_head: no tasks");
    ClassifierHead head;
    head.rho0 = rho0;
    head.rho_l2 = rho_l2;
    int offset = 0;
    for (const auto& [kind, d_y] : tasks) {
        TaskSlice slice;
        slice.kind = kind;
        slice.offset = offset;
        if (kind == TaskKind::Classification) {
            if (d_y < 2) throw std::invalid_argument("make_head: classification needs >= 2 classes");
            slice.width = std::max(kMinSliceWidth, d_y);
            slice.num_classes = d_y;
        } else {
            slice.width = kMinSliceWidth;
            slice.num_classes = 0;
        }
        offset += slice.width;
        head.tasks.push_back(slice);
    }
    head.w = Matrix(code_width, offset);
    double limit = std::sqrt(6.0 / (code_width + offset));
    for (double& v : head.w.data) v = rng.uniform(-limit, limit);
    head.gw = Matrix(code_width, offset);
    head.vw = Matrix(code_width, offset);
    return head;
}

Matrix predict(const ClassifierHead& head, const Matrix& e, int task) {
    if (task < 0 || task >= static_cast<int>(head.tasks.size()))
        throw std::invalid_argument("predict: unknown task index");
    if (e.cols != head.code_width()) throw std::invalid_argument("predict: encoding width mismatch");
    const TaskSlice& slice = head.tasks[task];
    Matrix logits = matmul(e, slice_cols(head.w, slice.offset, slice.width));
    if (slice.kind == TaskKind::Classification)
        return softmax_rows(slice_cols(logits, 0, slice.num_classes));
    Matrix out(e.rows, 1);
    for (int i = 0; i < logits.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) sum += logits(i, j);
        out(i, 0) = sum / slice.width;
    }
    return out;
}

namespace {

// Data term for one task; fills grad_logits (n x slice.width) when asked.
double task_data_loss(const ClassifierHead& head, const TaskSlice& slice, const Matrix& e,
                      const Matrix& y, Matrix* grad_logits) {
    Matrix logits = matmul(e, slice_cols(head.w, slice.offset, slice.width));
    if (slice.kind == TaskKind::Classification) {
        if (y.cols != slice.num_classes)
            throw std::invalid_argument("loss_mtl: label width differs from task classes");
        Matrix class_logits = slice_cols(logits, 0, slice.num_classes);
        Matrix grad_class;
        double loss = softmax_ce(class_logits, y, grad_logits ? &grad_class : nullptr);
        if (grad_logits) {
            *grad_logits = Matrix(logits.rows, slice.width);
            for (int i = 0; i < logits.rows; ++i)
                std::copy(grad_class.row_ptr(i), grad_class.row_ptr(i) + slice.num_classes,
                          grad_logits->row_ptr(i));
        }
        return loss;
    }
    if (y.cols != 1) throw std::invalid_argument("loss_mtl: regression labels must be n x 1");
    double loss = 0.0;
    if (grad_logits) *grad_logits = Matrix(logits.rows, slice.width);
    for (int i = 0; i < logits.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < slice.width; ++j) sum += logits(i, j);
        double diff = sum / slice.width - y(i, 0);
        loss += diff * diff;
        if (grad_logits) {
            double g = 2.0 * diff / slice.width;
            for (int j = 0; j < slice.width; ++j) (*grad_logits)(i, j) = g;
        }
    }
    return loss;
}

double regularizers(const ClassifierHead& head, Matrix* grad_w) {
    double l1 = 0.0, fro2 = 0.0;
    for (size_t k = 0; k < head.w.data.size(); ++k) {
        double v = head.w.data[k];
        l1 += std::fabs(v);
        fro2 += v * v;
        if (grad_w) {
            double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            grad_w->data[k] += head.rho0 * sign + 2.0 * head.rho_l2 * v;
        }
    }
    return head.rho0 * l1 + head.rho_l2 * fro2;
}

}  // namespace

double loss_mtl(const ClassifierHead& head, const std::vector<TaskBatch>& batches) {
    double loss = 0.0;
    for (const auto& batch : batches) {
        if (batch.task < 0 || batch.task >= static_cast<int>(head.tasks.size()))
            throw std::invalid_argument("loss_mtl: unknown task index");
        if (batch.e->rows != batch.y->rows)
            throw std::invalid_argument("loss_mtl: encoding/label row mismatch");
        loss += task_data_loss(head, head.tasks[batch.task], *batch.e, *batch.y, nullptr);
    }
    loss += regularizers(head, nullptr);
    return loss;
}

double loss_mtl_grad(const ClassifierHead& head, const std::vector<TaskBatch>& batches,
                     Matrix* grad_w, std::vector<Matrix>* grad_e) {
    if (!grad_w) throw std::invalid_argument("loss_mtl_grad: grad_w required");
    *grad_w = Matrix(head.w.rows, head.w.cols);
    if (grad_e) grad_e->clear();
    double loss = 0.0;
    for (const auto& batch : batches) {
        if (batch.task < 0 || batch.task >= static_cast<int>(head.tasks.size()))
            throw std::invalid_argument("loss_mtl_grad: unknown task index");
        if (batch.e->rows != batch.y->rows)
            throw std::invalid_argument("loss_mtl_grad: encoding/label row mismatch");
        const TaskSlice& slice = head.tasks[batch.task];
        Matrix grad_logits;
        loss += task_data_loss(head, slice, *batch.e, *batch.y, &grad_logits);
        Matrix gw_slice = matmul_tn(*batch.e, grad_logits);  // d_e x width
        for (int r = 0; r < gw_slice.rows; ++r)
            for (int c = 0; c < gw_slice.cols; ++c) (*grad_w)(r, slice.offset + c) += gw_slice(r, c);
        if (grad_e) {
            Matrix w_slice = slice_cols(head.w, slice.offset, slice.width);
            grad_e->push_back(matmul_nt(grad_logits, w_slice));
        }
    }
    loss += regularizers(head, grad_w);
    return loss;
}

}  // namespace md2i
