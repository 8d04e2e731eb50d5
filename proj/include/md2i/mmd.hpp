#pragma once

#include <span>
#include <vector>

#include "md2i/matrix.hpp"

namespace md2i {

struct KernelConfig {
    double sigma = 10.0;  // RBF bandwidth, k = exp(-||a-b||^2 / (2*sigma))
};

// Added under the square root in gradient denominators only; keeps the
// gradient bounded as the squared discrepancy approaches zero.
inline constexpr double kMmdGradEps = 1e-8;

double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& cfg);

/// Biased two-sample estimate with diagonal terms included: the squared
/// norm of the difference of empirical kernel mean embeddings.
double mmd2(const Matrix& es, const Matrix& et, const KernelConfig& cfg);

/// (1/S^2) * sum over all ordered domain pairs of sqrt(mmd2).
double mmd_loss(const std::vector<Matrix>& encodings, const KernelConfig& cfg);

/// Gradients of mmd_loss with respect to every encoding entry.
std::vector<Matrix> mmd_loss_grad(const std::vector<Matrix>& encodings, const KernelConfig& cfg,
                                  double* loss_out = nullptr);

}  // namespace md2i
