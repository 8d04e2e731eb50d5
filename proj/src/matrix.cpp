#include "md2i/matrix.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace md2i {

namespace {

using ERowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<ERowMajor>;
using ECMap = Eigen::Map<const ERowMajor>;

ECMap cmap(const Matrix& m) { return ECMap(m.data.data(), m.rows, m.cols); }
EMap map(Matrix& m) { return EMap(m.data.data(), m.rows, m.cols); }

}  // namespace

Matrix::Matrix(int r, int c, double fill)
    : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("matrix: negative dimension");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
    Matrix out;
    out.rows = static_cast<int>(rows_init.size());
    out.cols = out.rows > 0 ? static_cast<int>(rows_init.begin()->size()) : 0;
    out.data.reserve(static_cast<size_t>(out.rows) * out.cols);
    for (const auto& r : rows_init) {
        if (static_cast<int>(r.size()) != out.cols)
            throw std::invalid_argument("matrix: ragged initializer");
        out.data.insert(out.data.end(), r.begin(), r.end());
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    map(out).noalias() = cmap(a) * cmap(b);
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: row counts differ");
    Matrix out(a.cols, b.cols);
    map(out).noalias() = cmap(a).transpose() * cmap(b);
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: column counts differ");
    Matrix out(a.rows, b.rows);
    map(out).noalias() = cmap(a) * cmap(b).transpose();
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    map(out) = cmap(a).transpose();
    return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("hconcat: row counts differ");
    Matrix out(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* dst = out.row_ptr(i);
        const double* pa = a.row_ptr(i);
        const double* pb = b.row_ptr(i);
        std::copy(pa, pa + a.cols, dst);
        std::copy(pb, pb + b.cols, dst + a.cols);
    }
    return out;
}

Matrix take_rows(const Matrix& a, const std::vector<int>& idx) {
    Matrix out(static_cast<int>(idx.size()), a.cols);
    for (size_t k = 0; k < idx.size(); ++k) {
        int i = idx[k];
        if (i < 0 || i >= a.rows) throw std::invalid_argument("take_rows: index out of range");
        std::copy(a.row_ptr(i), a.row_ptr(i) + a.cols, out.row_ptr(static_cast<int>(k)));
    }
    return out;
}

Matrix col_sums(const Matrix& a) {
    Matrix out(1, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* p = a.row_ptr(i);
        for (int j = 0; j < a.cols; ++j) out.data[j] += p[j];
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
    Matrix out(a.rows, a.cols);
    for (size_t k = 0; k < a.data.size(); ++k) out.data[k] = a.data[k] * b.data[k];
    return out;
}

void add_scaled(Matrix& a, const Matrix& b, double s) {
    if (!a.same_shape(b)) throw std::invalid_argument("add_scaled: shape mismatch");
    for (size_t k = 0; k < a.data.size(); ++k) a.data[k] += s * b.data[k];
}

void scale(Matrix& a, double s) {
    for (double& v : a.data) v *= s;
}

bool all_finite(const Matrix& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::fabs(a.data[k] - b.data[k]));
    return m;
}

}  // namespace md2i
