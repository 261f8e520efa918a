#pragma once
// One small random problem per registered op, shared by the unit and
// acceptance gradient checks.

#include <functional>
#include <random>
#include <vector>

#include "sketchpix/ops.hpp"
#include "support/gradcheck.hpp"

namespace sketchpix::testing {

using LossBuilder = std::function<Tensor(const std::vector<Tensor>&)>;

struct OpCase {
    const char* name;
    std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
    LossBuilder loss;
};

// Weighted sum keeps every output element's gradient distinct.
inline Tensor weighted(const Tensor& t) {
    std::vector<double> w(t.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.17 * static_cast<double>(i % 7);
    return sum(mul(t, Tensor(t.shape(), std::move(w))));
}

inline std::vector<OpCase> op_cases() {
    auto two = [](Shape a, Shape b) {
        return [a, b](std::mt19937_64& rng) {
            return std::vector<Tensor>{random_tensor(a, rng), random_tensor(b, rng)};
        };
    };
    auto one = [](Shape a) {
        return [a](std::mt19937_64& rng) { return std::vector<Tensor>{random_tensor(a, rng)}; };
    };
    return {
        {"add", two({3, 4}, {3, 4}), [](auto& v) { return weighted(add(v[0], v[1])); }},
        {"add_broadcast", two({3, 4}, {4}), [](auto& v) { return weighted(add(v[0], v[1])); }},
        {"sub", two({2, 3}, {2, 3}), [](auto& v) { return weighted(sub(v[0], v[1])); }},
        {"mul", two({3, 4}, {3, 4}), [](auto& v) { return weighted(mul(v[0], v[1])); }},
        {"mul_broadcast", two({2, 1, 3}, {4, 1}),
         [](auto& v) { return weighted(mul(v[0], v[1])); }},
        {"matmul", two({3, 5}, {5, 2}), [](auto& v) { return weighted(matmul(v[0], v[1])); }},
        {"conv2d_same_s2",
         [](std::mt19937_64& rng) {
             return std::vector<Tensor>{random_tensor({2, 2, 7, 6}, rng),
                                        random_tensor({3, 2, 3, 3}, rng),
                                        random_tensor({3}, rng)};
         },
         [](auto& v) { return weighted(conv2d(v[0], v[1], v[2], {2, Padding::Same})); }},
        {"conv2d_valid_s1",
         [](std::mt19937_64& rng) {
             return std::vector<Tensor>{random_tensor({1, 2, 5, 5}, rng),
                                        random_tensor({2, 2, 2, 3}, rng),
                                        random_tensor({2}, rng)};
         },
         [](auto& v) { return weighted(conv2d(v[0], v[1], v[2], {1, Padding::Valid})); }},
        {"tanh", one({3, 3}), [](auto& v) { return weighted(tanh(v[0])); }},
        {"sigmoid", one({3, 3}), [](auto& v) { return weighted(sigmoid(v[0])); }},
        {"relu",
         [](std::mt19937_64& rng) {
             return std::vector<Tensor>{random_tensor_away_from_zero({4, 3}, rng)};
         },
         [](auto& v) { return weighted(relu(v[0])); }},
        {"reciprocal",
         [](std::mt19937_64& rng) {
             return std::vector<Tensor>{random_tensor({2, 3}, rng, 0.3, 2.0)};
         },
         [](auto& v) { return weighted(reciprocal(v[0])); }},
        {"exp", one({2, 4}), [](auto& v) { return weighted(exp(v[0])); }},
        {"log",
         [](std::mt19937_64& rng) {
             return std::vector<Tensor>{random_tensor({2, 4}, rng, 0.2, 2.0)};
         },
         [](auto& v) { return weighted(log(v[0])); }},
        {"square", one({5}), [](auto& v) { return weighted(square(v[0])); }},
        {"softmax", one({3, 4}), [](auto& v) { return weighted(softmax(v[0])); }},
        {"log_softmax", one({3, 4}), [](auto& v) { return weighted(log_softmax(v[0])); }},
        {"logsumexp", one({3, 4}), [](auto& v) { return weighted(logsumexp(v[0])); }},
        {"concat", two({2, 3}, {2, 2}),
         [](auto& v) { return weighted(concat({v[0], v[1]}, 1)); }},
        {"slice", one({4, 5}), [](auto& v) { return weighted(slice(v[0], 1, 1, 4)); }},
        {"sum_axis", one({3, 4, 2}), [](auto& v) { return weighted(sum(v[0], 1)); }},
        {"mean", one({3, 4}), [](auto& v) { return scale(mean(v[0]), 3.0); }},
        {"broadcast_to", one({3, 1}),
         [](auto& v) { return weighted(broadcast_to(v[0], {2, 3, 4})); }},
        {"reshape", one({2, 6}), [](auto& v) { return weighted(reshape(v[0], {3, 4})); }},
        {"scale_add_scalar", one({4}),
         [](auto& v) { return weighted(add_scalar(scale(v[0], -1.7), 0.4)); }},
    };
}


}  // namespace sketchpix::testing
