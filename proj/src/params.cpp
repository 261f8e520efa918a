#include "sketchpix/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sketchpix {

Tensor& ParameterStore::add(const std::string& name, Shape shape, Init init,
                            std::mt19937_64& rng, double value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    Tensor t(shape, 0.0);
    if (init == Init::Constant) {
        for (auto& v : t.mutable_data()) v = value;
    } else if (init == Init::Glorot) {
        double fan_in = 1, fan_out = 1;
        if (shape.size() == 2) {
            fan_in = double(shape[0]);
            fan_out = double(shape[1]);
        } else if (shape.size() == 4) {
            const double field = double(shape[2] * shape[3]);
            fan_in = double(shape[1]) * field;
            fan_out = double(shape[0]) * field;
        } else {
            fan_in = fan_out = double(shape_numel(shape));
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : t.mutable_data()) v = dist(rng);
    }
    t.set_requires_grad(true);
    items_.emplace_back(name, t);
    return items_.back().second;
}

Tensor& ParameterStore::get(const std::string& name) {
    for (auto& [n, t] : items_)
        if (n == name) return t;
    throw std::out_of_range("no parameter named '" + name + "'");
}

const Tensor& ParameterStore::get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(const std::string& name) const {
    return std::any_of(items_.begin(), items_.end(), [&](const auto& p) { return p.first == name; });
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& [name, t] : items_) t.zero_grad();
}

void ParameterStore::save_to(TensorArchive& archive, const std::string& prefix) const {
    for (const auto& [name, t] : items_) archive.add(prefix + name, t.detach());
}

void ParameterStore::load_from(const TensorArchive& archive, const std::string& prefix) {
    for (auto& [name, t] : items_) {
        const Tensor& src = archive.get(prefix + name);
        if (src.shape() != t.shape())
            throw ArchiveError("parameter '" + name + "' has shape " + shape_str(src.shape()) +
                               " in the archive, model expects " + shape_str(t.shape()));
        std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
    }
}

}  // namespace sketchpix
