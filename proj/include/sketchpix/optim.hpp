#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchpix/archive.hpp"
#include "sketchpix/params.hpp"

namespace sketchpix {

// Global-norm clipping over all gradients: scale by t / |g| when |g| > t.
// Returns the norm before clipping. Throws std::invalid_argument if t <= 0.
double clip_global_norm(std::vector<std::span<double>> grads, double threshold);
double clip_global_norm(ParameterStore& params, double threshold);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(ParameterStore& params, AdamConfig cfg = {});

    void step(double learning_rate);
    std::uint64_t steps_taken() const { return t_; }

    void save_to(TensorArchive& archive) const;
    void load_from(const TensorArchive& archive);

private:
    ParameterStore& params_;
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace sketchpix
