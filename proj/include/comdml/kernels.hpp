// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace comdml::kern {

// Dense row-major matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Layer math used by the training engine. Weight layout is out x in.
// Every element of every output accumulates in the same index order in both
// variants, so the parallel kernels are bitwise identical to the serial
// reference regardless of thread count.
namespace serial {
// z[b,o] = bias[o] + sum_i x[b,i] * w[o,i]
void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z);
void tanh_forward(Mat& z);
// dz[b,o] *= 1 - a[b,o]^2 where a = tanh output
void tanh_backward(const Mat& activation, Mat& dz);
// dx[b,i] = sum_o dz[b,o] * w[o,i]
void grad_input(const Mat& dz, const Mat& w, Mat& dx);
// dw[o,i] = sum_b dz[b,o] * x[b,i]
void grad_weights(const Mat& dz, const Mat& x, Mat& dw);
// db[o] = sum_b dz[b,o]
void grad_bias(const Mat& dz, std::vector<double>& db);
// Mean cross-entropy over rows; dlogits = (softmax - onehot)/batch.
double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits);
} // namespace serial

namespace par {
void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z);
void tanh_forward(Mat& z);
void tanh_backward(const Mat& activation, Mat& dz);
void grad_input(const Mat& dz, const Mat& w, Mat& dx);
void grad_weights(const Mat& dz, const Mat& x, Mat& dw);
void grad_bias(const Mat& dz, std::vector<double>& db);
double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits);
} // namespace par

// Runtime switch between the variants. Outputs are identical either way.
bool parallel_enabled();
void set_parallel(bool on);

void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z);
void tanh_forward(Mat& z);
void tanh_backward(const Mat& activation, Mat& dz);
void grad_input(const Mat& dz, const Mat& w, Mat& dx);
void grad_weights(const Mat& dz, const Mat& x, Mat& dw);
void grad_bias(const Mat& dz, std::vector<double>& db);
double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits);

} // namespace comdml::kern
