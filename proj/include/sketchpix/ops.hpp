#pragma once
// Differentiable operations over Tensor. Binary elementwise ops broadcast
// with NumPy rules; shape errors name both operand shapes.

#include <cstddef>
#include <vector>

#include "sketchpix/tensor.hpp"

namespace sketchpix {

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor square(const Tensor& a);

// (m x k) * (k x n)
Tensor matmul(const Tensor& a, const Tensor& b);

enum class Padding { Same, Valid };

struct Conv2dOptions {
    std::size_t stride = 1;
    Padding padding = Padding::Same;
};

// Output spatial extent of one conv dimension; 0 means the layer collapses it.
std::size_t conv_output_size(std::size_t in, std::size_t kernel,
                             std::size_t stride, Padding padding);

// input (N, C, H, W), weight (O, C, kh, kw), bias (O) -> (N, O, OH, OW).
// Same padding puts the odd pixel of padding at the bottom/right.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor reciprocal(const Tensor& a);
Tensor div(const Tensor& a, const Tensor& b);

// Along the last axis.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
// Reduces the last axis away.
Tensor logsumexp(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin,
             std::size_t end);

Tensor sum(const Tensor& a);
// Reduces `axis` away.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);

Tensor broadcast_to(const Tensor& a, const Shape& shape);
Tensor reshape(const Tensor& a, Shape shape);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }

}  // namespace sketchpix
