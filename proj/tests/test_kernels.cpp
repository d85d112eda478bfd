// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "comdml/kernels.hpp"
#include "comdml/rng.hpp"

using namespace comdml;
using kern::Mat;

namespace {

Mat random_mat(std::size_t r, std::size_t c, rng::Engine& g) {
    Mat m(r, c);
    for (auto& v : m.a) v = rng::uniform_range(g, -2.0, 2.0);
    return m;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("dense_forward small hand case") {
    Mat x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    Mat w(2, 2); // out x in
    w(0, 0) = 1.0;
    w(0, 1) = 0.5;
    w(1, 0) = -1.0;
    w(1, 1) = 1.0;
    Mat z(1, 2);
    kern::serial::dense_forward(x, w, {0.25, -0.25}, z);
    CHECK(z(0, 0) == doctest::Approx(2.25));
    CHECK(z(0, 1) == doctest::Approx(0.75));
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
    rng::Engine g(31);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t batch = 1 + rng::uniform_index(g, 64);
        const std::size_t in = 1 + rng::uniform_index(g, 48);
        const std::size_t out = 1 + rng::uniform_index(g, 48);

        const Mat x = random_mat(batch, in, g);
        const Mat w = random_mat(out, in, g);
        std::vector<double> bias(out);
        for (auto& b : bias) b = rng::uniform_range(g, -1.0, 1.0);

        Mat z_s(batch, out), z_p(batch, out);
        kern::serial::dense_forward(x, w, bias, z_s);
        kern::par::dense_forward(x, w, bias, z_p);
        CHECK(z_s.a == z_p.a);

        Mat t_s = z_s, t_p = z_p;
        kern::serial::tanh_forward(t_s);
        kern::par::tanh_forward(t_p);
        CHECK(t_s.a == t_p.a);

        const Mat dz = random_mat(batch, out, g);
        Mat dz_s = dz, dz_p = dz;
        kern::serial::tanh_backward(t_s, dz_s);
        kern::par::tanh_backward(t_p, dz_p);
        CHECK(dz_s.a == dz_p.a);

        Mat dx_s(batch, in), dx_p(batch, in);
        kern::serial::grad_input(dz_s, w, dx_s);
        kern::par::grad_input(dz_p, w, dx_p);
        CHECK(dx_s.a == dx_p.a);

        Mat dw_s(out, in), dw_p(out, in);
        kern::serial::grad_weights(dz_s, x, dw_s);
        kern::par::grad_weights(dz_p, x, dw_p);
        CHECK(dw_s.a == dw_p.a);

        std::vector<double> db_s(out), db_p(out);
        kern::serial::grad_bias(dz_s, db_s);
        kern::par::grad_bias(dz_p, db_p);
        CHECK(db_s == db_p);

        std::vector<int> labels(batch);
        for (auto& l : labels) l = static_cast<int>(rng::uniform_index(g, out));
        Mat dl_s(batch, out), dl_p(batch, out);
        const double loss_s = kern::serial::softmax_xent(z_s, labels, dl_s);
        const double loss_p = kern::par::softmax_xent(z_p, labels, dl_p);
        CHECK(loss_s == loss_p);
        CHECK(dl_s.a == dl_p.a);
    }
}

TEST_CASE("softmax cross-entropy gradient sums to zero per row") {
    rng::Engine g(32);
    const Mat logits = random_mat(8, 5, g);
    std::vector<int> labels(8);
    for (auto& l : labels) l = static_cast<int>(rng::uniform_index(g, 5));
    Mat dl(8, 5);
    const double loss = kern::softmax_xent(logits, labels, dl);
    CHECK(loss > 0.0);
    for (std::size_t b = 0; b < 8; ++b) {
        double row = 0.0;
        for (std::size_t c = 0; c < 5; ++c) row += dl(b, c);
        CHECK(row == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("dispatch honors the runtime switch") {
    CHECK(kern::parallel_enabled());
    kern::set_parallel(false);
    CHECK(!kern::parallel_enabled());
    kern::set_parallel(true);
    CHECK(kern::parallel_enabled());
}

} // TEST_SUITE
