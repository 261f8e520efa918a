#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sketchpix/archive.hpp"
#include "sketchpix/tensor.hpp"

namespace sketchpix {

enum class Init { Glorot, Zeros, Constant };

// Ordered, named trainable tensors. Names are unique; insertion order is the
// serialization and optimizer order.
class ParameterStore {
public:
    // Glorot draws uniform in +-sqrt(6 / (fan_in + fan_out)). For rank-2
    // shapes (in, out); for conv weights (O, C, kh, kw).
    Tensor& add(const std::string& name, Shape shape, Init init, std::mt19937_64& rng,
                double value = 0.0);

    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t scalar_count() const;

    void zero_grad();

    void save_to(TensorArchive& archive, const std::string& prefix = "param/") const;
    // Copies values in place; names and shapes must match exactly.
    void load_from(const TensorArchive& archive, const std::string& prefix = "param/");

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace sketchpix
