#include "md2i/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace md2i {

namespace {

void apply_activation(Matrix& z, Activation act) {
    switch (act) {
        case Activation::Linear:
            break;
        case Activation::ReLU:
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Sigmoid:
            for (double& v : z.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
    }
}

// Derivative expressed through the post-activation output; the ReLU
// subgradient at 0 is 0.
double activation_deriv(double out, Activation act) {
    switch (act) {
        case Activation::Linear:
            return 1.0;
        case Activation::ReLU:
            return out > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid:
            return out * (1.0 - out);
    }
    return 1.0;
}

}  // namespace

MlpNet::MlpNet(const std::vector<LayerSpec>& specs, Rng& rng) {
    if (specs.empty()) throw std::invalid_argument("mlp: no layers");
    layers_.reserve(specs.size());
    for (size_t l = 0; l < specs.size(); ++l) {
        const auto& s = specs[l];
        if (s.in <= 0 || s.out <= 0) throw std::invalid_argument("mlp: non-positive layer size");
        if (l > 0 && specs[l - 1].out != s.in)
            throw std::invalid_argument("mlp: consecutive layer shapes do not compose");
        DenseLayer layer;
        layer.act = s.act;
        layer.w = Matrix(s.in, s.out);
        // Glorot range, scaled down for sigmoid output layers so they start
        // near 0.5 instead of saturated; saturation at init produces a
        // coherent shrink-the-code gradient that kills narrow ReLU layers.
        double limit = std::sqrt(6.0 / (s.in + s.out));
        if (s.act == Activation::Sigmoid) limit *= 0.25;
        for (double& v : layer.w.data) v = rng.uniform(-limit, limit);
        // ReLU units start slightly active; with normalized, tightly
        // clustered inputs a zero-bias unit is alive or dead for nearly all
        // rows at once.
        layer.b = Matrix(1, s.out, s.act == Activation::ReLU ? 0.1 : 0.0);
        layer.gw = Matrix(s.in, s.out);
        layer.gb = Matrix(1, s.out);
        layer.vw = Matrix(s.in, s.out);
        layer.vb = Matrix(1, s.out);
        layers_.push_back(std::move(layer));
    }
}

int MlpNet::in_dim() const { return layers_.empty() ? 0 : layers_.front().w.rows; }
int MlpNet::out_dim() const { return layers_.empty() ? 0 : layers_.back().w.cols; }

const Matrix& MlpNet::forward(const Matrix& input) {
    if (layers_.empty()) throw std::logic_error("mlp: forward on empty net");
    if (input.cols != in_dim()) throw std::invalid_argument("mlp: input width mismatch");
    acts_.assign(1, input);
    acts_.reserve(layers_.size() + 1);
    for (auto& layer : layers_) {
        Matrix z = matmul(acts_.back(), layer.w);
        for (int i = 0; i < z.rows; ++i) {
            double* p = z.row_ptr(i);
            for (int j = 0; j < z.cols; ++j) p[j] += layer.b.data[j];
        }
        apply_activation(z, layer.act);
        acts_.push_back(std::move(z));
    }
    has_forward_ = true;
    return acts_.back();
}

Matrix MlpNet::backward(const Matrix& output_grad) {
    if (!has_forward_) throw std::logic_error("mlp: backward called before forward");
    if (!output_grad.same_shape(acts_.back()))
        throw std::invalid_argument("mlp: output_grad shape mismatch");
    Matrix delta = output_grad;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        DenseLayer& layer = layers_[l];
        const Matrix& out = acts_[l + 1];
        const Matrix& in = acts_[l];
        if (layer.act != Activation::Linear) {
            for (size_t k = 0; k < delta.data.size(); ++k)
                delta.data[k] *= activation_deriv(out.data[k], layer.act);
        }
        add_scaled(layer.gw, matmul_tn(in, delta), 1.0);
        add_scaled(layer.gb, col_sums(delta), 1.0);
        if (l > 0) delta = matmul_nt(delta, layer.w);
    }
    return matmul_nt(delta, layers_.front().w);
}

void MlpNet::sgd_step(const SgdConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("sgd: learning_rate must be > 0");
    for (auto& layer : layers_) {
        for (size_t k = 0; k < layer.w.data.size(); ++k) {
            layer.vw.data[k] = cfg.momentum * layer.vw.data[k] + layer.gw.data[k];
            layer.w.data[k] -= cfg.learning_rate * layer.vw.data[k];
            layer.gw.data[k] = 0.0;
        }
        for (size_t k = 0; k < layer.b.data.size(); ++k) {
            layer.vb.data[k] = cfg.momentum * layer.vb.data[k] + layer.gb.data[k];
            layer.b.data[k] -= cfg.learning_rate * layer.vb.data[k];
            layer.gb.data[k] = 0.0;
        }
    }
}

void MlpNet::zero_grad() {
    for (auto& layer : layers_) {
        std::fill(layer.gw.data.begin(), layer.gw.data.end(), 0.0);
        std::fill(layer.gb.data.begin(), layer.gb.data.end(), 0.0);
    }
}

std::vector<ParamBlock> MlpNet::param_blocks(const std::string& prefix) {
    std::vector<ParamBlock> blocks;
    for (size_t l = 0; l < layers_.size(); ++l) {
        std::string base = prefix + "l" + std::to_string(l);
        blocks.push_back({base + ".w", &layers_[l].w, &layers_[l].gw});
        blocks.push_back({base + ".b", &layers_[l].b, &layers_[l].gb});
    }
    return blocks;
}

size_t MlpNet::param_count() const {
    size_t n = 0;
    for (const auto& layer : layers_) n += layer.w.data.size() + layer.b.data.size();
    return n;
}

std::vector<double> MlpNet::params_flat() const {
    std::vector<double> theta;
    theta.reserve(param_count());
    for (const auto& layer : layers_) {
        theta.insert(theta.end(), layer.w.data.begin(), layer.w.data.end());
        theta.insert(theta.end(), layer.b.data.begin(), layer.b.data.end());
    }
    return theta;
}

void MlpNet::set_params_flat(const std::vector<double>& theta) {
    if (theta.size() != param_count()) throw std::invalid_argument("mlp: flat size mismatch");
    size_t k = 0;
    for (auto& layer : layers_) {
        std::copy_n(theta.begin() + k, layer.w.data.size(), layer.w.data.begin());
        k += layer.w.data.size();
        std::copy_n(theta.begin() + k, layer.b.data.size(), layer.b.data.begin());
        k += layer.b.data.size();
    }
}

std::vector<double> MlpNet::grads_flat() const {
    std::vector<double> g;
    g.reserve(param_count());
    for (const auto& layer : layers_) {
        g.insert(g.end(), layer.gw.data.begin(), layer.gw.data.end());
        g.insert(g.end(), layer.gb.data.begin(), layer.gb.data.end());
    }
    return g;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        const double* z = logits.row_ptr(i);
        double* out = p.row_ptr(i);
        double zmax = z[0];
        for (int j = 1; j < logits.cols; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) {
            out[j] = std::exp(z[j] - zmax);
            sum += out[j];
        }
        for (int j = 0; j < logits.cols; ++j) out[j] /= sum;
    }
    return p;
}

double softmax_ce(const Matrix& logits, const Matrix& onehot, Matrix* grad_logits) {
    if (!logits.same_shape(onehot)) throw std::invalid_argument("softmax_ce: shape mismatch");
    Matrix p = softmax_rows(logits);
    double loss = 0.0;
    for (size_t k = 0; k < p.data.size(); ++k)
        if (onehot.data[k] != 0.0) loss -= onehot.data[k] * safe_log(p.data[k]);
    if (grad_logits) {
        *grad_logits = std::move(p);
        for (size_t k = 0; k < grad_logits->data.size(); ++k)
            grad_logits->data[k] -= onehot.data[k];
    }
    return loss;
}

double squared_error(const Matrix& pred, const Matrix& target, Matrix* grad_pred) {
    if (!pred.same_shape(target)) throw std::invalid_argument("squared_error: shape mismatch");
    double loss = 0.0;
    if (grad_pred) *grad_pred = Matrix(pred.rows, pred.cols);
    for (size_t k = 0; k < pred.data.size(); ++k) {
        double diff = pred.data[k] - target.data[k];
        loss += diff * diff;
        if (grad_pred) grad_pred->data[k] = 2.0 * diff;
    }
    return loss;
}

}  // namespace md2i
