#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace md2i {

/// Dense row-major matrix of doubles. The single numeric carrier for
/// features, masks, encodings and network parameters.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    double* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix transpose(const Matrix& a);

Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix take_rows(const Matrix& a, const std::vector<int>& idx);
Matrix col_sums(const Matrix& a);  // 1 x cols

Matrix hadamard(const Matrix& a, const Matrix& b);
void add_scaled(Matrix& a, const Matrix& b, double s);  // a += s*b
void scale(Matrix& a, double s);

bool all_finite(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace md2i
