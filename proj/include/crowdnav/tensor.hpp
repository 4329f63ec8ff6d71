#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace crowdnav {

// Dense row-major tensor of doubles. Shapes are small (1-3 dims), so this
// stays deliberately simple.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0);
    }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

// Ordered collection of named tensors. Order is construction order (layer
// order), which keeps parameter traversal deterministic. Non-trainable
// entries hold state such as batch-norm running moments: the optimizer
// must neither step nor weight-decay them.
class NamedTensors {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
        bool trainable = true;
    };

    Tensor& add(const std::string& name, std::vector<int> shape, bool trainable = true);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    std::vector<Entry>& items() { return items_; }
    const std::vector<Entry>& items() const { return items_; }
    std::size_t total_elements() const;

    // Same names/shapes/flags, all values zero.
    static NamedTensors zeros_like(const NamedTensors& other);

private:
    std::vector<Entry> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace crowdnav
