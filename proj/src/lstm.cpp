#include "sketchpix/lstm.hpp"

#include "sketchpix/ops.hpp"

namespace sketchpix {

LstmCell::LstmCell(ParameterStore& params, const std::string& prefix, std::size_t input_size,
                   std::size_t hidden, std::mt19937_64& rng)
    : input_size_(input_size), hidden_(hidden) {
    w_x_ = params.add(prefix + ".w_x", {input_size, 4 * hidden}, Init::Glorot, rng);
    w_h_ = params.add(prefix + ".w_h", {hidden, 4 * hidden}, Init::Glorot, rng);
    b_ = params.add(prefix + ".b", {4 * hidden}, Init::Zeros, rng);
    // forget gate starts open
    auto b = b_.mutable_data();
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
}

Tensor LstmCell::project_input(const Tensor& x) const { return matmul(x, w_x_) + b_; }

LstmState LstmCell::step_from_gates(const Tensor& input_gates, const LstmState& state) const {
    const std::size_t H = hidden_;
    const Tensor gates = input_gates + matmul(state.h, w_h_);
    const Tensor i = sigmoid(slice(gates, 1, 0, H));
    const Tensor f = sigmoid(slice(gates, 1, H, 2 * H));
    const Tensor g = tanh(slice(gates, 1, 2 * H, 3 * H));
    const Tensor o = sigmoid(slice(gates, 1, 3 * H, 4 * H));
    Tensor c = f * state.c + i * g;
    Tensor h = o * tanh(c);
    return {std::move(h), std::move(c)};
}

LstmState LstmCell::step(const Tensor& x, const LstmState& state) const {
    return step_from_gates(project_input(x), state);
}

LstmState LstmCell::zero_state(std::size_t batch) const {
    return {Tensor({batch, hidden_}, 0.0), Tensor({batch, hidden_}, 0.0)};
}

}  // namespace sketchpix
