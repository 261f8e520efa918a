#pragma once
// Dense row-major float64 tensors with define-by-run reverse-mode autodiff.
//
// A Tensor is a shared handle to a graph node. Ops record their inputs and a
// backward rule when grad mode is on and any input requires a gradient.
// backward() walks the recorded graph once in reverse topological order,
// accumulates into leaf gradients, and then releases the graph.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchpix {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    ShapeError(const std::string& op, const Shape& a, const Shape& b);
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated on first use
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
        return grad;
    }
    bool is_leaf() const { return !backward; }
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return node_->data.size(); }

    std::span<const double> data() const { return node_->data; }
    // Writes through this span bypass the graph; only valid on leaves.
    std::span<double> mutable_data() { return node_->data; }
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    // Accumulated gradient. All zeros when nothing flowed here.
    std::span<const double> grad() const { return node_->ensure_grad(); }
    std::span<double> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool on = true);

    // Fresh leaf with a copy of the values and no history.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    detail::Node* node() const { return node_.get(); }
    const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

    // Builds an op result. Registers `backward` (and the inputs) only when
    // grad mode is enabled and some input requires a gradient. Throws
    // NonFiniteError if any output value is NaN or infinite.
    static Tensor make_result(const char* op, Shape shape,
                              std::vector<double> values,
                              std::initializer_list<Tensor> inputs,
                              std::function<void(detail::Node&)> backward);
    static Tensor make_result(const char* op, Shape shape,
                              std::vector<double> values,
                              const std::vector<Tensor>& inputs,
                              std::function<void(detail::Node&)> backward);

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

// Runs reverse-mode differentiation from a scalar loss. Gradients are added
// to every reachable tensor that requires one; the graph is released after.
void backward(const Tensor& loss);

bool grad_enabled();

// Asks glibc malloc to keep large freed blocks instead of unmapping them.
// Training rebuilds graphs of similar size every step and otherwise pays a
// page fault per fresh activation buffer. Call once from main; no-op
// elsewhere.
void retain_freed_memory();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

}  // namespace sketchpix
