#pragma once

// Minimal reverse-mode autodiff core. A Tensor is a dense row-major value
// buffer with an optional gradient of the same shape; ops (see ops.hpp)
// create output tensors on a Tape and attach backward closures. Parameters
// live outside the tape and persist across steps; tape tensors hold the
// per-step activation graph and are dropped when the tape goes out of scope.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "aot/common.hpp"

namespace aot::nn {

template <class T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> val;
    std::vector<T> grad;  // empty until gradients are tracked
    bool requires_grad = false;
    std::function<void()> backward_fn;  // set by the op that produced this

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s, bool rg = false) : shape(std::move(s)), requires_grad(rg) {
        val.assign(size_t(numel()), T(0));
        if (rg) grad.assign(val.size(), T(0));
    }

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }
    int64_t rows() const { return shape.size() == 2 ? shape[0] : (shape.size() == 1 ? 1 : -1); }
    int64_t cols() const { return shape.size() == 2 ? shape[1] : (shape.size() == 1 ? shape[0] : -1); }

    void ensure_grad() {
        if (grad.empty()) grad.assign(val.size(), T(0));
    }
    void zero_grad() {
        grad.assign(val.size(), T(0));
    }
};

template <class T>
class Tape {
   public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    Tensor<T>* make(std::vector<int64_t> shape) {
        nodes_.push_back(std::make_unique<Tensor<T>>(std::move(shape), grad_enabled_));
        nodes_.back()->requires_grad = grad_enabled_;
        return nodes_.back().get();
    }

    // Seeds the loss gradient with 1 and runs every backward closure in
    // reverse creation order (creation order is topological by
    // construction, so this visits consumers before producers).
    void backward(Tensor<T>* loss) {
        if (!grad_enabled_) throw InvalidArgument("Tape::backward: gradients disabled");
        if (loss->numel() != 1) throw InvalidArgument("Tape::backward: loss must be scalar");
        loss->ensure_grad();
        loss->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn();
    }

    size_t size() const { return nodes_.size(); }

   private:
    bool grad_enabled_;
    std::deque<std::unique_ptr<Tensor<T>>> nodes_;
};

}  // namespace aot::nn
