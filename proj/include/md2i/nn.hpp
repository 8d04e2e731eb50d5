#pragma once

#include <string>
#include <vector>

#include "md2i/matrix.hpp"
#include "md2i/rng.hpp"

namespace md2i {

enum class Activation { Linear, ReLU, Sigmoid };

struct SgdConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
};

struct LayerSpec {
    int in = 0;
    int out = 0;
    Activation act = Activation::Linear;
};

struct DenseLayer {
    Matrix w;  // in x out
    Matrix b;  // 1 x out
    Activation act = Activation::Linear;
    Matrix gw, gb;  // gradient buffers, same shapes
    Matrix vw, vb;  // momentum buffers, same shapes
};

/// Named view onto one parameter matrix and its gradient buffer.
struct ParamBlock {
    std::string name;
    Matrix* value = nullptr;
    Matrix* grad = nullptr;
};

/// Sequential MLP with cached activations for reverse-mode gradients.
/// A net instance is mutated by one worker at a time; forward/backward on a
/// frozen copy is safe to share.
class MlpNet {
public:
    MlpNet() = default;

    /// Glorot-uniform weights (+/- sqrt(6/(fan_in+fan_out))), zero biases.
    MlpNet(const std::vector<LayerSpec>& specs, Rng& rng);

    /// Runs the net and caches intermediates for backward.
    const Matrix& forward(const Matrix& input);

    /// Accumulates parameter gradients from the last forward pass and
    /// returns the gradient with respect to the input.
    Matrix backward(const Matrix& output_grad);

    /// v <- momentum*v + g; w <- w - lr*v; gradients cleared.
    void sgd_step(const SgdConfig& cfg);

    void zero_grad();

    int in_dim() const;
    int out_dim() const;
    bool empty() const { return layers_.empty(); }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::vector<ParamBlock> param_blocks(const std::string& prefix = "");

    // Flat parameter access, used by finite-difference checks and tests.
    size_t param_count() const;
    std::vector<double> params_flat() const;
    void set_params_flat(const std::vector<double>& theta);
    std::vector<double> grads_flat() const;

private:
    std::vector<DenseLayer> layers_;
    std::vector<Matrix> acts_;  // acts_[0] = input, acts_[l+1] = output of layer l
    bool has_forward_ = false;
};

// Shared numeric conventions for every loss in the project.
inline constexpr double kLogFloor = 1e-12;
inline double safe_log(double p) { return std::log(p < kLogFloor ? kLogFloor : p); }

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Summed cross-entropy -sum y*log softmax(z) against one-hot targets.
/// If grad_logits is given it receives p - y.
double softmax_ce(const Matrix& logits, const Matrix& onehot, Matrix* grad_logits = nullptr);

/// Summed squared error; grad is 2(pred-target).
double squared_error(const Matrix& pred, const Matrix& target, Matrix* grad_pred = nullptr);

}  // namespace md2i
