#include "crowdnav/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace crowdnav {

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor& NamedTensors::add(const std::string& name, std::vector<int> shape, bool trainable) {
    if (index_.count(name)) throw std::logic_error("duplicate tensor name: " + name);
    index_[name] = items_.size();
    items_.push_back({name, Tensor(std::move(shape)), trainable});
    return items_.back().tensor;
}

Tensor& NamedTensors::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown tensor: " + name);
    return items_[it->second].tensor;
}

const Tensor& NamedTensors::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown tensor: " + name);
    return items_[it->second].tensor;
}

std::size_t NamedTensors::total_elements() const {
    std::size_t n = 0;
    for (const auto& e : items_) n += e.tensor.size();
    return n;
}

NamedTensors NamedTensors::zeros_like(const NamedTensors& other) {
    NamedTensors out;
    for (const auto& e : other.items_) out.add(e.name, e.tensor.shape, e.trainable);
    return out;
}

}  // namespace crowdnav
