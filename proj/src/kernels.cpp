// SPDX-License-Identifier: Apache-2.0

#include "comdml/kernels.hpp"

#include <atomic>
#include <cmath>

namespace comdml::kern {

namespace {

std::atomic<bool> g_parallel{true};

inline double row_xent(const double* logits, std::size_t c, int label, double* dlogits,
                       double inv_batch) {
    // Stable log-softmax.
    double mx = logits[0];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, logits[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) sum += std::exp(logits[k] - mx);
    const double log_z = mx + std::log(sum);
    for (std::size_t k = 0; k < c; ++k) {
        double p = std::exp(logits[k] - log_z);
        dlogits[k] = (p - (static_cast<int>(k) == label ? 1.0 : 0.0)) * inv_batch;
    }
    return log_z - logits[static_cast<std::size_t>(label)];
}

} // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z) {
    for (std::size_t b = 0; b < x.rows; ++b) {
        const double* xi = &x.a[b * x.cols];
        double* zi = &z.a[b * z.cols];
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* wo = &w.a[o * w.cols];
            double acc = bias[o];
            for (std::size_t i = 0; i < w.cols; ++i) acc += xi[i] * wo[i];
            zi[o] = acc;
        }
    }
}

void tanh_forward(Mat& z) {
    for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] = std::tanh(z.a[i]);
}

void tanh_backward(const Mat& activation, Mat& dz) {
    for (std::size_t i = 0; i < dz.a.size(); ++i)
        dz.a[i] *= 1.0 - activation.a[i] * activation.a[i];
}

void grad_input(const Mat& dz, const Mat& w, Mat& dx) {
    for (std::size_t b = 0; b < dz.rows; ++b) {
        const double* dzi = &dz.a[b * dz.cols];
        double* dxi = &dx.a[b * dx.cols];
        for (std::size_t i = 0; i < w.cols; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < w.rows; ++o) acc += dzi[o] * w.a[o * w.cols + i];
            dxi[i] = acc;
        }
    }
}

void grad_weights(const Mat& dz, const Mat& x, Mat& dw) {
    for (std::size_t o = 0; o < dw.rows; ++o) {
        double* dwo = &dw.a[o * dw.cols];
        for (std::size_t i = 0; i < dw.cols; ++i) {
            double acc = 0.0;
            for (std::size_t b = 0; b < dz.rows; ++b)
                acc += dz.a[b * dz.cols + o] * x.a[b * x.cols + i];
            dwo[i] = acc;
        }
    }
}

void grad_bias(const Mat& dz, std::vector<double>& db) {
    for (std::size_t o = 0; o < dz.cols; ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < dz.rows; ++b) acc += dz.a[b * dz.cols + o];
        db[o] = acc;
    }
}

double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits) {
    const double inv_batch = 1.0 / static_cast<double>(logits.rows);
    std::vector<double> losses(logits.rows);
    for (std::size_t b = 0; b < logits.rows; ++b)
        losses[b] = row_xent(&logits.a[b * logits.cols], logits.cols, labels[b],
                             &dlogits.a[b * dlogits.cols], inv_batch);
    double total = 0.0;
    for (std::size_t b = 0; b < logits.rows; ++b) total += losses[b];
    return total * inv_batch;
}

} // namespace serial

namespace par {

void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z) {
    const long rows = static_cast<long>(x.rows);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < rows; ++b) {
        const double* xi = &x.a[static_cast<std::size_t>(b) * x.cols];
        double* zi = &z.a[static_cast<std::size_t>(b) * z.cols];
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* wo = &w.a[o * w.cols];
            double acc = bias[o];
            for (std::size_t i = 0; i < w.cols; ++i) acc += xi[i] * wo[i];
            zi[o] = acc;
        }
    }
}

void tanh_forward(Mat& z) {
    const long n = static_cast<long>(z.a.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i)
        z.a[static_cast<std::size_t>(i)] = std::tanh(z.a[static_cast<std::size_t>(i)]);
}

void tanh_backward(const Mat& activation, Mat& dz) {
    const long n = static_cast<long>(dz.a.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        dz.a[u] *= 1.0 - activation.a[u] * activation.a[u];
    }
}

void grad_input(const Mat& dz, const Mat& w, Mat& dx) {
    const long rows = static_cast<long>(dz.rows);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < rows; ++b) {
        const double* dzi = &dz.a[static_cast<std::size_t>(b) * dz.cols];
        double* dxi = &dx.a[static_cast<std::size_t>(b) * dx.cols];
        for (std::size_t i = 0; i < w.cols; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < w.rows; ++o) acc += dzi[o] * w.a[o * w.cols + i];
            dxi[i] = acc;
        }
    }
}

void grad_weights(const Mat& dz, const Mat& x, Mat& dw) {
    const long out = static_cast<long>(dw.rows);
#pragma omp parallel for schedule(static)
    for (long o = 0; o < out; ++o) {
        double* dwo = &dw.a[static_cast<std::size_t>(o) * dw.cols];
        for (std::size_t i = 0; i < dw.cols; ++i) {
            double acc = 0.0;
            for (std::size_t b = 0; b < dz.rows; ++b)
                acc += dz.a[b * dz.cols + static_cast<std::size_t>(o)] * x.a[b * x.cols + i];
            dwo[i] = acc;
        }
    }
}

void grad_bias(const Mat& dz, std::vector<double>& db) {
    const long out = static_cast<long>(dz.cols);
#pragma omp parallel for schedule(static)
    for (long o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < dz.rows; ++b)
            acc += dz.a[b * dz.cols + static_cast<std::size_t>(o)];
        db[static_cast<std::size_t>(o)] = acc;
    }
}

double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits) {
    const double inv_batch = 1.0 / static_cast<double>(logits.rows);
    std::vector<double> losses(logits.rows);
    const long rows = static_cast<long>(logits.rows);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < rows; ++b) {
        const std::size_t ub = static_cast<std::size_t>(b);
        losses[ub] = row_xent(&logits.a[ub * logits.cols], logits.cols, labels[ub],
                              &dlogits.a[ub * dlogits.cols], inv_batch);
    }
    // Fixed-order reduction keeps the loss identical for any thread count.
    double total = 0.0;
    for (std::size_t b = 0; b < logits.rows; ++b) total += losses[b];
    return total * inv_batch;
}

} // namespace par

void dense_forward(const Mat& x, const Mat& w, const std::vector<double>& bias, Mat& z) {
    parallel_enabled() ? par::dense_forward(x, w, bias, z) : serial::dense_forward(x, w, bias, z);
}
void tanh_forward(Mat& z) { parallel_enabled() ? par::tanh_forward(z) : serial::tanh_forward(z); }
void tanh_backward(const Mat& activation, Mat& dz) {
    parallel_enabled() ? par::tanh_backward(activation, dz) : serial::tanh_backward(activation, dz);
}
void grad_input(const Mat& dz, const Mat& w, Mat& dx) {
    parallel_enabled() ? par::grad_input(dz, w, dx) : serial::grad_input(dz, w, dx);
}
void grad_weights(const Mat& dz, const Mat& x, Mat& dw) {
    parallel_enabled() ? par::grad_weights(dz, x, dw) : serial::grad_weights(dz, x, dw);
}
void grad_bias(const Mat& dz, std::vector<double>& db) {
    parallel_enabled() ? par::grad_bias(dz, db) : serial::grad_bias(dz, db);
}
double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat& dlogits) {
    return parallel_enabled() ? par::softmax_xent(logits, labels, dlogits)
                              : serial::softmax_xent(logits, labels, dlogits);
}

} // namespace comdml::kern
