#pragma once

// Ordered store of named tensors: trainable weights plus non-trainable
// buffers (BN running statistics). Iteration order is insertion order, which
// the builder makes deterministic; that order is also the serialization order
// and the SGD update order.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "asymmkit/rng.hpp"
#include "asymmkit/tensor.hpp"

namespace asymmkit {

template <typename T>
struct ParamEntry {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;      // same shape; zero-initialized
    Tensor<T> momentum;  // SGD velocity
    bool wd_exempt = false;  // BN affine params and biases skip weight decay
    bool buffer = false;     // buffers are saved/loaded but never trained
};

template <typename T>
class ParamStore {
  public:
    std::size_t add(const std::string& name, Shape shape, bool wd_exempt, bool buffer = false) {
        if (index_.count(name))
            throw std::invalid_argument("param store: duplicate name " + name);
        ParamEntry<T> e;
        e.name = name;
        e.value = Tensor<T>(shape);
        e.grad = Tensor<T>(shape);
        e.momentum = Tensor<T>(shape);
        e.wd_exempt = wd_exempt;
        e.buffer = buffer;
        entries_.push_back(std::move(e));
        index_.emplace(name, entries_.size() - 1);
        return entries_.size() - 1;
    }

    std::size_t size() const { return entries_.size(); }
    ParamEntry<T>& operator[](std::size_t i) { return entries_[i]; }
    const ParamEntry<T>& operator[](std::size_t i) const { return entries_[i]; }

    ParamEntry<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("param store: no entry " + name);
        return entries_[it->second];
    }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    // Number of trainable scalar parameters (buffers excluded). The cost
    // analyzer's param totals must equal this exactly for every built net.
    std::int64_t trainable_count() const {
        std::int64_t n = 0;
        for (const auto& e : entries_)
            if (!e.buffer) n += static_cast<std::int64_t>(e.value.size());
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_) e.grad.fill(T(0));
    }

  private:
    std::vector<ParamEntry<T>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace asymmkit
