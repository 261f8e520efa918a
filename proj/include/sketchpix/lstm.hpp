#pragma once

#include <random>
#include <string>

#include "sketchpix/params.hpp"

namespace sketchpix {

struct LstmState {
    Tensor h;  // (batch, hidden)
    Tensor c;  // (batch, hidden)
};

// Standard LSTM, gate order (input, forget, cell, output), forget bias 1.
class LstmCell {
public:
    LstmCell(ParameterStore& params, const std::string& prefix, std::size_t input_size,
             std::size_t hidden, std::mt19937_64& rng);

    std::size_t hidden() const { return hidden_; }
    std::size_t input_size() const { return input_size_; }

    // x (rows, input) -> x W_x + b, the input half of the gate pre-activations.
    Tensor project_input(const Tensor& x) const;
    // One step given precomputed input gates (batch, 4 * hidden).
    LstmState step_from_gates(const Tensor& input_gates, const LstmState& state) const;
    LstmState step(const Tensor& x, const LstmState& state) const;

    LstmState zero_state(std::size_t batch) const;

    const Tensor& input_weight() const { return w_x_; }
    const Tensor& recurrent_weight() const { return w_h_; }
    const Tensor& bias() const { return b_; }

private:
    std::size_t input_size_;
    std::size_t hidden_;
    Tensor w_x_;
    Tensor w_h_;
    Tensor b_;
};

}  // namespace sketchpix
