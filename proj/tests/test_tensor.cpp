#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "sketchpix/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/op_cases.hpp"

using namespace sketchpix;
using sketchpix::testing::max_gradient_error;
using sketchpix::testing::random_tensor;
using sketchpix::testing::random_tensor_away_from_zero;
using sketchpix::testing::op_cases;

TEST_CASE("matmul by the 1x1 identity is a no-op") {
    Tensor id({1, 1}, 1.0);
    Tensor row({1, 4}, {0.5, -2.0, 3.25, 7.0});
    Tensor out = matmul(id, row);
    CHECK(out.shape() == Shape{1, 4});
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.data()[i] == row.data()[i]);
}

TEST_CASE("softmax of equal logits is uniform") {
    Tensor out = softmax(Tensor({3}, 2.5));
    for (double v : out.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("conv2d of a zero image with zero bias is zero") {
    std::mt19937_64 rng(4);
    Tensor img({2, 1, 9, 9}, 0.0);
    Tensor w = random_tensor({3, 1, 3, 3}, rng);
    Tensor b({3}, 0.0);
    for (auto pad : {Padding::Same, Padding::Valid}) {
        Tensor out = conv2d(img, w, b, {2, pad});
        for (double v : out.data()) CHECK(v == 0.0);
    }
    CHECK(conv2d(img, w, b, {2, Padding::Same}).shape() == Shape{2, 3, 5, 5});
    CHECK(conv2d(img, w, b, {2, Padding::Valid}).shape() == Shape{2, 3, 4, 4});
}

TEST_CASE("conv2d matches a direct convolution") {
    std::mt19937_64 rng(5);
    Tensor img = random_tensor({1, 2, 6, 5}, rng);
    Tensor w = random_tensor({2, 2, 3, 3}, rng);
    Tensor b = random_tensor({2}, rng);
    Tensor out = conv2d(img, w, b, {1, Padding::Same});
    REQUIRE(out.shape() == Shape{1, 2, 6, 5});
    for (std::size_t o = 0; o < 2; ++o)
        for (long i = 0; i < 6; ++i)
            for (long j = 0; j < 5; ++j) {
                double s = b.data()[o];
                for (std::size_t c = 0; c < 2; ++c)
                    for (long ki = 0; ki < 3; ++ki)
                        for (long kj = 0; kj < 3; ++kj) {
                            const long ii = i + ki - 1, jj = j + kj - 1;
                            if (ii < 0 || ii >= 6 || jj < 0 || jj >= 5) continue;
                            s += img.at({0, c, std::size_t(ii), std::size_t(jj)}) *
                                 w.at({o, c, std::size_t(ki), std::size_t(kj)});
                        }
                CHECK(out.at({0, o, std::size_t(i), std::size_t(j)}) ==
                      doctest::Approx(s).epsilon(1e-13));
            }
}

TEST_CASE("shape mismatch errors name both shapes") {
    Tensor a({2, 3}), b({4, 5});
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2, 3)") != std::string::npos);
        CHECK(msg.find("(4, 5)") != std::string::npos);
    }
    CHECK_THROWS_AS(add(Tensor({2, 3}), Tensor({3, 2})), ShapeError);
    CHECK_THROWS_AS(concat({Tensor({2, 3}), Tensor({3, 2})}, 0), ShapeError);
    CHECK_THROWS_AS(slice(Tensor({2, 3}), 1, 2, 4), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("non-finite results are an error state") {
    CHECK_THROWS_AS(log(Tensor({2}, {1.0, -1.0})), NonFiniteError);
    CHECK_THROWS_AS(exp(Tensor({1}, {1000.0})), NonFiniteError);
}

TEST_CASE("backward of sum gives ones") {
    Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    x.set_requires_grad();
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of x*x at 3 is 6") {
    Tensor x = Tensor::scalar(3.0);
    x.set_requires_grad();
    backward(mul(x, x));
    CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("backward rejects non-scalar losses") {
    Tensor x({3}, 1.0);
    x.set_requires_grad();
    CHECK_THROWS_AS(backward(scale(x, 2.0)), GraphError);
}

TEST_CASE("detached tensors receive zero gradient") {
    Tensor x({3}, {1.0, 2.0, 3.0});
    x.set_requires_grad();
    Tensor d = x.detach();
    Tensor y({3}, {4.0, 5.0, 6.0});
    y.set_requires_grad();
    backward(sum(mul(d, y)));
    for (double g : x.grad()) CHECK(g == 0.0);
    for (double g : d.grad()) CHECK(g == 0.0);
    CHECK(y.grad()[2] == 3.0);
}

TEST_CASE("no-grad mode records nothing") {
    Tensor x({2}, 1.0);
    x.set_requires_grad();
    NoGradGuard guard;
    Tensor y = tanh(x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.node()->parents.empty());
}

TEST_CASE("graph is released after backward") {
    Tensor x({2}, {0.3, 0.4});
    x.set_requires_grad();
    Tensor y = tanh(x);
    Tensor loss = sum(y);
    backward(loss);
    CHECK(loss.node()->parents.empty());
    CHECK(y.node()->parents.empty());
}


TEST_CASE("every registered op matches central finite differences") {
    for (const auto& op : op_cases()) {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            std::mt19937_64 rng(1000 + seed);
            auto leaves = op.inputs(rng);
            const double err =
                max_gradient_error([&] { return op.loss(leaves); }, leaves, 1e-5);
            worst = std::max(worst, err);
        }
        INFO("op " << op.name << " max rel err " << worst);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("identical inputs give bit-identical outputs and gradients") {
    auto run = [] {
        std::mt19937_64 rng(77);
        Tensor a = random_tensor({4, 6}, rng);
        Tensor w = random_tensor({6, 3}, rng);
        w.set_requires_grad();
        Tensor loss = sum(log_softmax(tanh(matmul(a, w))));
        backward(loss);
        std::vector<double> out(w.grad().begin(), w.grad().end());
        out.push_back(loss.item());
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("backward is linear in the loss") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        Tensor x = random_tensor({3, 4}, rng);
        Tensor w = random_tensor({4, 2}, rng);
        x.set_requires_grad();
        w.set_requires_grad();
        auto l1 = [&] { return sum(tanh(matmul(x, w))); };
        auto l2 = [&] { return sum(square(matmul(x, w))); };
        const double a = 0.7, b = -1.3;

        backward(add(scale(l1(), a), scale(l2(), b)));
        std::vector<double> combined(w.grad().begin(), w.grad().end());
        std::vector<double> combined_x(x.grad().begin(), x.grad().end());

        w.zero_grad();
        x.zero_grad();
        backward(l1());
        std::vector<double> g1(w.grad().begin(), w.grad().end());
        std::vector<double> g1x(x.grad().begin(), x.grad().end());
        w.zero_grad();
        x.zero_grad();
        backward(l2());
        for (std::size_t i = 0; i < combined.size(); ++i)
            CHECK(std::abs(combined[i] - (a * g1[i] + b * w.grad()[i])) < 1e-10);
        for (std::size_t i = 0; i < combined_x.size(); ++i)
            CHECK(std::abs(combined_x[i] - (a * g1x[i] + b * x.grad()[i])) < 1e-10);
    }
}
