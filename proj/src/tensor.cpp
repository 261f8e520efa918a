#include "sketchpix/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace sketchpix {
namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    if (shape.size() == 1) os << ',';
    os << ')';
    return os.str();
}

ShapeError::ShapeError(const std::string& op, const Shape& a, const Shape& b)
    : std::invalid_argument(op + ": incompatible shapes " + shape_str(a) +
                            " and " + shape_str(b)) {}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::Node>()) {
    node_->data.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : node_(std::make_shared<detail::Node>()) {
    if (values.size() != shape_numel(shape))
        throw ShapeError("tensor of shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    node_->shape = std::move(shape);
    node_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank())
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(shape()));
    return node_->shape[axis];
}

double Tensor::item() const {
    if (numel() != 1)
        throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank())
        throw ShapeError("index rank mismatch for " + shape_str(shape()));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= node_->shape[axis])
            throw ShapeError("index out of range for " + shape_str(shape()));
        flat = flat * node_->shape[axis] + i;
        ++axis;
    }
    return node_->data[flat];
}

void Tensor::zero_grad() {
    auto& g = node_->ensure_grad();
    std::fill(g.begin(), g.end(), 0.0);
}

Tensor& Tensor::set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (on) node_->ensure_grad();
    return *this;
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->data); }

Tensor Tensor::make_result(const char* op, Shape shape, std::vector<double> values,
                           std::initializer_list<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
    return make_result(op, std::move(shape), std::move(values),
                       std::vector<Tensor>(inputs), std::move(backward));
}

Tensor Tensor::make_result(const char* op, Shape shape, std::vector<double> values,
                           const std::vector<Tensor>& inputs,
                           std::function<void(detail::Node&)> backward) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw NonFiniteError(std::string(op) + " produced a non-finite value");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->op = op;
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& t : inputs) any = any || t.requires_grad();
        if (any) {
            node->requires_grad = true;
            node->parents.reserve(inputs.size());
            for (const auto& t : inputs) node->parents.push_back(t.node_ptr());
            node->backward = std::move(backward);
        }
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw GraphError("backward on an undefined tensor");
    if (loss.numel() != 1)
        throw GraphError("backward needs a scalar loss, got shape " +
                         shape_str(loss.shape()));
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS; recurrent graphs are deep.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* node = *it;
        if (node->backward) {
            node->ensure_grad();
            node->backward(*node);
        }
    }
    for (detail::Node* node : order) {
        if (!node->is_leaf()) {
            node->backward = nullptr;
            node->parents.clear();
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void retain_freed_memory() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace sketchpix
