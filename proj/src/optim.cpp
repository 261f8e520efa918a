#include "sketchpix/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sketchpix {

double clip_global_norm(std::vector<std::span<double>> grads, double threshold) {
    if (!(threshold > 0)) throw std::invalid_argument("clip threshold must be positive");
    double sq = 0.0;
    for (auto g : grads)
        for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > threshold) {
        const double f = threshold / norm;
        for (auto g : grads)
            for (double& x : g) x *= f;
    }
    return norm;
}

double clip_global_norm(ParameterStore& params, double threshold) {
    std::vector<std::span<double>> grads;
    for (auto& [name, t] : params.items()) grads.push_back(t.mutable_grad());
    return clip_global_norm(std::move(grads), threshold);
}

Adam::Adam(ParameterStore& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
    for (const auto& [name, t] : params.items()) {
        m_.emplace_back(t.numel(), 0.0);
        v_.emplace_back(t.numel(), 0.0);
    }
}

void Adam::step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    auto& items = params_.items();
    for (std::size_t p = 0; p < items.size(); ++p) {
        auto w = items[p].second.mutable_data();
        const auto g = items[p].second.grad();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
        }
    }
}

void Adam::save_to(TensorArchive& archive) const {
    const auto& items = params_.items();
    for (std::size_t p = 0; p < items.size(); ++p) {
        archive.add("adam.m/" + items[p].first, Tensor(items[p].second.shape(), m_[p]));
        archive.add("adam.v/" + items[p].first, Tensor(items[p].second.shape(), v_[p]));
    }
    archive.meta["adam.t"] = std::to_string(t_);
}

void Adam::load_from(const TensorArchive& archive) {
    const auto& items = params_.items();
    for (std::size_t p = 0; p < items.size(); ++p) {
        const Tensor& m = archive.get("adam.m/" + items[p].first);
        const Tensor& v = archive.get("adam.v/" + items[p].first);
        if (m.numel() != m_[p].size() || v.numel() != v_[p].size())
            throw ArchiveError("optimizer state for '" + items[p].first + "' has the wrong size");
        m_[p].assign(m.data().begin(), m.data().end());
        v_[p].assign(v.data().begin(), v.data().end());
    }
    const auto it = archive.meta.find("adam.t");
    if (it == archive.meta.end()) throw ArchiveError("checkpoint lacks optimizer step count");
    t_ = std::stoull(it->second);
}

}  // namespace sketchpix
