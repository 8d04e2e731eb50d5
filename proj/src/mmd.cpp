#include "md2i/mmd.hpp"

#include <cmath>
#include <stdexcept>

namespace md2i {

double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& cfg) {
    if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
    if (cfg.sigma <= 0.0) throw std::invalid_argument("rbf_kernel: sigma must be > 0");
    double d2 = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        double diff = a[k] - b[k];
        d2 += diff * diff;
    }
    return std::exp(-d2 / (2.0 * cfg.sigma));
}

namespace {

std::span<const double> row(const Matrix& m, int i) {
    return {m.row_ptr(i), static_cast<size_t>(m.cols)};
}

double kernel_sum(const Matrix& a, const Matrix& b, const KernelConfig& cfg) {
    double sum = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) sum += rbf_kernel(row(a, i), row(b, j), cfg);
    return sum;
}

}  // namespace

double mmd2(const Matrix& es, const Matrix& et, const KernelConfig& cfg) {
    if (es.rows == 0 || et.rows == 0) throw std::invalid_argument("mmd2: empty input");
    if (es.cols != et.cols) throw std::invalid_argument("mmd2: column counts differ");
    double ns = es.rows, nt = et.rows;
    double t_ss = kernel_sum(es, es, cfg) / (ns * ns);
    double t_tt = kernel_sum(et, et, cfg) / (nt * nt);
    double t_st = 2.0 * kernel_sum(es, et, cfg) / (ns * nt);
    return t_ss + t_tt - t_st;
}

double mmd_loss(const std::vector<Matrix>& encodings, const KernelConfig& cfg) {
    int s = static_cast<int>(encodings.size());
    if (s < 1) throw std::invalid_argument("mmd_loss: no encodings");
    for (const auto& e : encodings)
        if (e.cols != encodings.front().cols)
            throw std::invalid_argument("mmd_loss: inconsistent encoding widths");
    double acc = 0.0;
    for (int i = 0; i < s; ++i)
        for (int j = i + 1; j < s; ++j)
            acc += 2.0 * std::sqrt(std::max(mmd2(encodings[i], encodings[j], cfg), 0.0));
    return acc / (static_cast<double>(s) * s);
}

std::vector<Matrix> mmd_loss_grad(const std::vector<Matrix>& encodings, const KernelConfig& cfg,
                                  double* loss_out) {
    int s = static_cast<int>(encodings.size());
    if (s < 1) throw std::invalid_argument("mmd_loss_grad: no encodings");
    std::vector<Matrix> grads;
    grads.reserve(encodings.size());
    for (const auto& e : encodings) grads.emplace_back(e.rows, e.cols);
    double loss = 0.0;
    double s2 = static_cast<double>(s) * s;
    for (int i = 0; i < s; ++i) {
        for (int j = i + 1; j < s; ++j) {
            const Matrix& a = encodings[i];
            const Matrix& b = encodings[j];
            double m = std::max(mmd2(a, b, cfg), 0.0);
            loss += 2.0 * std::sqrt(m) / s2;
            // Each unordered pair appears twice in the ordered sum; the
            // epsilon keeps the sqrt derivative bounded at alignment.
            double chain = 2.0 / (s2 * 2.0 * std::sqrt(m + kMmdGradEps));
            double na = a.rows, nb = b.rows;
            auto add_pair = [&](const Matrix& p, const Matrix& q, Matrix& gp, double coeff) {
                // coeff * sum_{ij} k(p_i, q_j): accumulate d/dp.
                for (int ii = 0; ii < p.rows; ++ii) {
                    for (int jj = 0; jj < q.rows; ++jj) {
                        double k = rbf_kernel(row(p, ii), row(q, jj), cfg);
                        double f = -coeff * k / cfg.sigma;
                        double* g = gp.row_ptr(ii);
                        const double* pi = p.row_ptr(ii);
                        const double* qj = q.row_ptr(jj);
                        for (int c = 0; c < p.cols; ++c) g[c] += f * (pi[c] - qj[c]);
                    }
                }
            };
            // d mmd2 / dA: self term counts twice by symmetry, cross term once
            // per side.
            add_pair(a, a, grads[i], chain * 2.0 / (na * na));
            add_pair(a, b, grads[i], -chain * 2.0 / (na * nb));
            add_pair(b, b, grads[j], chain * 2.0 / (nb * nb));
            add_pair(b, a, grads[j], -chain * 2.0 / (na * nb));
        }
    }
    if (loss_out) *loss_out = loss;
    return grads;
}

}  // namespace md2i
